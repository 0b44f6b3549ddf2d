int g;
int main(void) {
  if (0) {
    g = 1;
  }
  return 0;
}

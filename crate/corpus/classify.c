int g;
int classify(int v) {
  int r = 0;
  if (v > 0) {
    r = 1;
  } else {
    r = 2;
  }
  return r;
}
int main(void) {
  g = classify(1);
  g = g + classify(-1);
  return 0;
}

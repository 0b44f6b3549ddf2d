int intdiv(int a, int b) {
  return (b == 0) ? 0 : (a / b);
}

int mean(int total, int count) {
  int z;
  z = intdiv(total, count);
  return z;
}

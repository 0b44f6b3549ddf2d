static int depth(int n) {
  if (n <= 0) {
    return 0;
  }
  return 1 + depth(n - 1);
}

int sum(const int *v, int n) {
  int s = 0;
  int i;
  for (i = 0; i < n; i++) {
    s += v[i];
  }
  return s;
}

int first_char(char *s) {
  int c = s[0];
  char k;
  if (c > 0) {
    k = (char)c;
  }
  return toupper(c) + depth(2);
}

int scan(int limit) {
  int i;
  int found = 0;
  for (i = 0; i < limit; i++) {
    if (i == 3) {
      found = i;
      limit = 0;
    }
  }
  return found;
}

#include <stdio.h>

int count_digits(const char *path) {
  FILE *f = fopen(path, "r");
  int n = 0;
  int c;
  if (f == NULL) {
    return -1;
  }
  while ((c = fgetc(f)) != EOF) {
    if (isdigit(c)) {
      n++;
    }
  }
  fclose(f);
  return n;
}

int leak(const char *path) {
  FILE *f = fopen(path, "r");
  char *buf = malloc(16);
  if (f == NULL) {
    return -1;
  }
  buf[0] = (char)fgetc(f);
  return buf[0];
}

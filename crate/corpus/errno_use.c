double parse(const char *s) {
  char *end;
  double d;
  errno = 0;
  d = strtod(s, &end);
  if (errno != 0) {
    return 0.0;
  }
  return d;
}

long parse_long(const char *s) {
  return strtol(s, 0, 10);
}

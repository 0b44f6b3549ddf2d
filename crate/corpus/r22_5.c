FILE *p;
int always_false_in_this_configuration(void);
void f(void) {
  if (always_false_in_this_configuration()) {
    FILE f = *p;  // Unreachable: not a violation.
  }
}

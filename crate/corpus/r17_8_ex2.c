extern void g(uint32_t *p);

void f(uint32_t x) {
  /* ... */
  g(&x); // Rule 17.8 violation?
  /* ... */
}

void f(uint32_t x) {
  if (x < 0) { // If always x >= 0 on entry...
    x = 0;     // ... Rule 17.8 is not violated.
  }
  /* ... */
}

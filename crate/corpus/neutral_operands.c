#define OFFSET 0
#define SCALE 1
#define MAX 100
#define NUM_REPETITIONS 1
typedef struct { int a; int b; } T;
int x;
void do_things(void);
void do_X_if_necessary(void) {
#ifdef DO_X
  do_x();
#endif
}

void g(void) {
  int i;
  x + 0;          // Unjustified addition.
  x + OFFSET;     // Justified addition, even when OFFSET is defined to be 0.

  x * 1;          // Unjustified multiplication.
  x * SCALE;      // Justified multiplication, even when SCALE is defined to be 1.
  x * sizeof(T);  // Justified multiplication, no matter what the value of sizeof(T) is.

  do_X_if_necessary();  // Justified function call, unless it can be argued that for all present and future
                        // project configurations, the function has no influence on the program behavior.

  for (i = 0; i < NUM_REPETITIONS; ++i) { // Entire loop justified, even if NUM_REPETITIONS
    do_things();                          // expands to 0 or 1 in this configuration.
  }


  // Saturate.
  x = (x > MAX) ? MAX : x;  // Justified, even if X is never greater than MAX in this configuration.
}

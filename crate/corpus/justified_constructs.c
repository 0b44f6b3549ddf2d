#define OFFSET 0
#define SCALE 1
typedef struct { int a; int b; } T;
int x;
void do_X_if_necessary(void) {
#ifdef DO_X
  do_x();
#endif
}

void f(void) {
x + OFFSET;     // Addition is justifiable, even when OFFSET is defined to be 0.
x * SCALE;      // Multiplication is justifiable, even when SCALE is defined to be 1.
x * sizeof(T);  // Multiplication is justifiable, no matter what the value of
                // sizeof(T) is.
do_X_if_necessary(); // The function may be inline and its body may be empty
                     // (e.g., #ifdef-ed out) in this configuration.
}

typedef enum {
  BIT0 = 1U << 0,  // Justifiable (no-op) shift by 0 positions.
  BIT1 = 1U << 1,
  BIT2 = 1U << 2
} Bit_Masks;

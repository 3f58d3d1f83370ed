/* Iterative and recursive Fibonacci. */
#define N 24
volatile unsigned sig[N + 2] __attribute__((section(".signature")));

static unsigned __attribute__((noinline)) fib_rec(unsigned n)
{
    return n < 2 ? n : fib_rec(n - 1) + fib_rec(n - 2);
}

int main(void)
{
    unsigned a = 0, b = 1;
    for (int i = 0; i < N; i++) {
        sig[i] = a;
        unsigned t = a + b;
        a = b;
        b = t;
    }
    sig[N] = fib_rec(15);
    sig[N + 1] = 0xf1b0f1b0u;
    return 0;
}

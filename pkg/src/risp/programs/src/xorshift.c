/* xorshift32 stream, bit counting and a rotate-mix hash. */
#define N 20
volatile unsigned sig[N + 3] __attribute__((section(".signature")));

static unsigned __attribute__((noinline)) popcount(unsigned x)
{
    unsigned c = 0;
    while (x) {
        x &= x - 1;
        c++;
    }
    return c;
}

int main(void)
{
    unsigned x = 2463534242u, bits = 0, h = 0x811C9DC5u;
    int lt = 0;
    for (int i = 0; i < N; i++) {
        x ^= x << 13;
        x ^= x >> 17;
        x ^= x << 5;
        sig[i] = x;
        bits += popcount(x);
        h = (h ^ x) + ((h << 6) | (h >> 26));
        if ((int)x < (int)h)
            lt++;
    }
    sig[N] = bits;
    sig[N + 1] = h;
    sig[N + 2] = (unsigned)lt;
    return 0;
}

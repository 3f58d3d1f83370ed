/* Word-wise copy and overlapping move. */
#define N 48
volatile unsigned sig[N + 2] __attribute__((section(".signature")));
static unsigned src[N];
static unsigned buf[N + 8];

static void __attribute__((noinline)) copy_words(unsigned *d, const unsigned *s, int n)
{
    for (int i = 0; i < n; i++)
        d[i] = s[i];
}

static void __attribute__((noinline)) move_words(unsigned *d, const unsigned *s, int n)
{
    if (d < s) {
        for (int i = 0; i < n; i++)
            d[i] = s[i];
    } else {
        for (int i = n - 1; i >= 0; i--)
            d[i] = s[i];
    }
}

int main(void)
{
    unsigned v = 0x9E3779B9u;
    for (int i = 0; i < N; i++) {
        v = (v << 7 | v >> 25) + 0x7F4A7C15u;
        src[i] = v;
    }
    copy_words(buf, src, N);
    move_words(buf + 5, buf, 20);
    move_words(buf + 1, buf + 9, 16);
    unsigned sum = 0;
    for (int i = 0; i < N; i++) {
        sig[i] = buf[i];
        sum += buf[i] ^ (unsigned)i;
    }
    sig[N] = sum;
    sig[N + 1] = buf[N + 3];
    return 0;
}

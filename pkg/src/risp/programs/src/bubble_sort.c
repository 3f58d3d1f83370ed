/* Bubble sort of a pseudo-random signed array. */
#define N 40
volatile int sig[N + 1] __attribute__((section(".signature")));
static int data[N];

int main(void)
{
    unsigned x = 12345u;
    for (int i = 0; i < N; i++) {
        x ^= x << 13;
        x ^= x >> 17;
        x ^= x << 5;
        data[i] = (int)(x >> 7) - (1 << 23);
    }
    for (int i = 0; i < N - 1; i++) {
        int swapped = 0;
        for (int j = 0; j < N - 1 - i; j++) {
            if (data[j] > data[j + 1]) {
                int t = data[j];
                data[j] = data[j + 1];
                data[j + 1] = t;
                swapped = 1;
            }
        }
        if (!swapped)
            break;
    }
    unsigned ck = 0;
    for (int i = 0; i < N; i++) {
        sig[i] = data[i];
        ck = (ck << 1 | ck >> 31) ^ (unsigned)data[i];
    }
    sig[N] = (int)ck;
    return 0;
}

/* Bitwise CRC-32 (reflected, poly 0xEDB88320) over a text message. */
volatile unsigned sig[4] __attribute__((section(".signature")));
static const unsigned char msg[] = "The quick brown fox jumps over the lazy dog. 0123456789";

static unsigned __attribute__((noinline)) crc32(const unsigned char *p, unsigned n)
{
    unsigned crc = 0xFFFFFFFFu;
    for (unsigned i = 0; i < n; i++) {
        crc ^= p[i];
        for (int k = 0; k < 8; k++)
            crc = (crc >> 1) ^ (0xEDB88320u & -(crc & 1u));
    }
    return ~crc;
}

int main(void)
{
    unsigned n = sizeof(msg) - 1;
    sig[0] = crc32(msg, n);
    sig[1] = crc32(msg, 9);
    sig[2] = crc32(msg + 4, 5);
    sig[3] = n;
    return 0;
}

/* Decision-tree classifier over 16-bit sensor features. */
#define SAMPLES 24
#define FEATURES 4
volatile unsigned sig[SAMPLES + 4] __attribute__((section(".signature")));

struct node {
    short feature;   /* -1 for a leaf */
    short threshold; /* leaf: class label */
    short left, right;
};

static const struct node tree[] = {
    {0, 120, 1, 2},
    {1, -40, 3, 4},
    {2, 300, 5, 6},
    {-1, 0, 0, 0},
    {3, 15, 7, 8},
    {1, 64, 9, 10},
    {-1, 3, 0, 0},
    {-1, 1, 0, 0},
    {-1, 2, 0, 0},
    {-1, 1, 0, 0},
    {-1, 2, 0, 0},
};

static const short feats[SAMPLES][FEATURES] = {
    {474, -373, 149, 289},
    {266, 463, 437, 457},
    {-54, 440, 129, 90},
    {-290, 265, 316, -278},
    {-264, 340, 66, 576},
    {211, 130, 619, -298},
    {-247, 123, 56, 264},
    {1, -237, 309, -311},
    {153, -50, 175, 441},
    {474, 511, 141, 273},
    {-154, 127, -133, -291},
    {526, -192, 452, -132},
    {559, 615, 581, 511},
    {-149, -221, -285, 573},
    {169, 68, 593, 262},
    {-288, 414, 498, -167},
    {357, 611, -96, 420},
    {-32, -188, 515, 468},
    {-346, 541, -273, 92},
    {-201, 308, -50, 157},
    {227, -248, 324, 92},
    {257, 236, 126, 446},
    {516, 406, 512, 115},
    {-200, -322, 511, 389},
};

static int __attribute__((noinline)) classify(const short *x)
{
    int i = 0;
    while (tree[i].feature >= 0)
        i = x[tree[i].feature] <= tree[i].threshold ? tree[i].left : tree[i].right;
    return tree[i].threshold;
}

int main(void)
{
    unsigned hist[4] = {0, 0, 0, 0};
    for (int i = 0; i < SAMPLES; i++) {
        int c = classify(feats[i]);
        sig[i] = (unsigned)c;
        hist[c & 3]++;
    }
    for (int c = 0; c < 4; c++)
        sig[SAMPLES + c] = hist[c];
    return 0;
}

"""Independent Python models of the bundled C programs (expected signatures)."""

import zlib

M = 0xFFFFFFFF


def _s32(x):
    x &= M
    return x - (1 << 32) if x & 0x80000000 else x


def _xorshift(x):
    x ^= (x << 13) & M
    x ^= x >> 17
    x ^= (x << 5) & M
    return x


def fib():
    seq, a, b = [], 0, 1
    for _ in range(24):
        seq.append(a)
        a, b = b, (a + b) & M

    def rec(n):
        return n if n < 2 else rec(n - 1) + rec(n - 2)

    return seq + [rec(15), 0xF1B0F1B0]


def bubble_sort():
    x, data = 12345, []
    for _ in range(40):
        x = _xorshift(x)
        data.append((x >> 7) - (1 << 23))
    data.sort()
    ck = 0
    for d in data:
        ck = (((ck << 1) | (ck >> 31)) & M) ^ (d & M)
    return [d & M for d in data] + [ck]


def crc32():
    msg = b"The quick brown fox jumps over the lazy dog. 0123456789"
    return [zlib.crc32(msg), zlib.crc32(msg[:9]), zlib.crc32(msg[4:9]), len(msg)]


_TREE = [(0, 120, 1, 2), (1, -40, 3, 4), (2, 300, 5, 6), (-1, 0, 0, 0), (3, 15, 7, 8), (1, 64, 9, 10),
         (-1, 3, 0, 0), (-1, 1, 0, 0), (-1, 2, 0, 0), (-1, 1, 0, 0), (-1, 2, 0, 0)]
_FEATS = [(474, -373, 149, 289), (266, 463, 437, 457), (-54, 440, 129, 90), (-290, 265, 316, -278),
          (-264, 340, 66, 576), (211, 130, 619, -298), (-247, 123, 56, 264), (1, -237, 309, -311),
          (153, -50, 175, 441), (474, 511, 141, 273), (-154, 127, -133, -291), (526, -192, 452, -132),
          (559, 615, 581, 511), (-149, -221, -285, 573), (169, 68, 593, 262), (-288, 414, 498, -167),
          (357, 611, -96, 420), (-32, -188, 515, 468), (-346, 541, -273, 92), (-201, 308, -50, 157),
          (227, -248, 324, 92), (257, 236, 126, 446), (516, 406, 512, 115), (-200, -322, 511, 389)]


def dtree():
    out, hist = [], [0] * 4
    for x in _FEATS:
        i = 0
        while _TREE[i][0] >= 0:
            f, t, lo, hi = _TREE[i]
            i = lo if x[f] <= t else hi
        c = _TREE[i][1]
        out.append(c & M)
        hist[c & 3] += 1
    return out + hist


def memcpy():
    v, src = 0x9E3779B9, []
    for _ in range(48):
        v = ((((v << 7) | (v >> 25)) & M) + 0x7F4A7C15) & M
        src.append(v)
    buf = src + [0] * 8
    buf[5:25] = buf[0:20]  # memmove semantics
    buf[1:17] = buf[9:25]
    total = 0
    for i in range(48):
        total = (total + (buf[i] ^ i)) & M
    return buf[:48] + [total, buf[51]]


def xorshift():
    x, bits, h, lt, out = 2463534242, 0, 0x811C9DC5, 0, []
    for _ in range(20):
        x = _xorshift(x)
        out.append(x)
        bits += bin(x).count("1")
        h = ((h ^ x) + (((h << 6) | (h >> 26)) & M)) & M
        lt += _s32(x) < _s32(h)
    return out + [bits, h, lt]


ORACLES = {"fib": fib, "bubble_sort": bubble_sort, "crc32": crc32, "dtree": dtree, "memcpy": memcpy,
           "xorshift": xorshift}

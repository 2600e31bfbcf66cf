# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: keccak-256 and secp256k1 point multiplication.

Drop-in twin of ``credchain.crypto._pure``.  Field elements are four
little-endian 64-bit limbs; products accumulate in ``unsigned __int128``
(gcc/clang only).  Not constant time.
"""
from libc.stdint cimport uint64_t, uint8_t
from libc.string cimport memset, memcpy

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

# ---------------------------------------------------------------- keccak

cdef uint64_t RC[24]
RC[:] = [
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
]
cdef int ROT[25]
ROT[:] = [0, 1, 62, 28, 27, 36, 44, 6, 55, 20, 3, 10, 43, 25, 39,
          41, 45, 15, 21, 8, 18, 2, 61, 56, 14]
cdef int PI[25]
for _i in range(25):
    PI[_i] = (_i // 5) + 5 * ((2 * (_i % 5) + 3 * (_i // 5)) % 5)

cdef enum:
    RATE = 136


cdef inline uint64_t rotl(uint64_t v, int r) nogil:
    if r == 0:
        return v
    return (v << r) | (v >> (64 - r))


cdef void keccak_f(uint64_t* a) noexcept nogil:
    cdef uint64_t c[5]
    cdef uint64_t d[5]
    cdef uint64_t b[25]
    cdef int rnd, x, y, i
    for rnd in range(24):
        for x in range(5):
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20]
        for x in range(5):
            d[x] = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1)
        for i in range(25):
            b[PI[i]] = rotl(a[i] ^ d[i % 5], ROT[i])
        for y in range(0, 25, 5):
            for x in range(5):
                a[y + x] = b[y + x] ^ ((~b[y + (x + 1) % 5]) & b[y + (x + 2) % 5])
        a[0] ^= RC[rnd]


cdef inline uint64_t load_le(const uint8_t* p) noexcept nogil:
    cdef uint64_t v = 0
    cdef int k
    for k in range(7, -1, -1):
        v = (v << 8) | p[k]
    return v


cdef void absorb(uint64_t* state, const uint8_t* block) noexcept nogil:
    cdef int i
    for i in range(RATE // 8):
        state[i] ^= load_le(block + 8 * i)
    keccak_f(state)


def keccak256(data):
    cdef bytes buf = bytes(data)
    cdef const uint8_t* p = buf
    cdef Py_ssize_t n = len(buf)
    cdef Py_ssize_t off = 0
    cdef uint64_t state[25]
    cdef uint8_t last[RATE]
    cdef uint8_t out[32]
    cdef Py_ssize_t rem
    cdef int i, k
    memset(state, 0, sizeof(state))
    with nogil:
        while n - off >= RATE:
            absorb(state, p + off)
            off += RATE
        rem = n - off
        memset(last, 0, RATE)
        memcpy(last, p + off, rem)
        last[rem] ^= 0x01
        last[RATE - 1] ^= 0x80
        absorb(state, last)
        for i in range(4):
            for k in range(8):
                out[8 * i + k] = <uint8_t>(state[i] >> (8 * k))
    return out[:32]


# ------------------------------------------------------- field mod p
# p = 2^256 - C

cdef extern from *:
    const uint64_t C_LO "0x1000003D1ULL"

cdef uint64_t FP[4]
FP[:] = [0xFFFFFFFEFFFFFC2F, 0xFFFFFFFFFFFFFFFF, 0xFFFFFFFFFFFFFFFF, 0xFFFFFFFFFFFFFFFF]


cdef inline bint fe_is_zero(const uint64_t* a) noexcept nogil:
    return (a[0] | a[1] | a[2] | a[3]) == 0


cdef inline void fe_copy(uint64_t* r, const uint64_t* a) noexcept nogil:
    r[0] = a[0]; r[1] = a[1]; r[2] = a[2]; r[3] = a[3]


cdef inline void fe_normalize(uint64_t* r, const uint64_t* s, uint64_t carry_in) noexcept nogil:
    # s + carry_in*2^256 < 2p; r >= p exactly when r + C overflows 2^256
    cdef uint64_t t[4]
    cdef u128 m = <u128>s[0] + C_LO
    cdef int i
    t[0] = <uint64_t>m
    for i in range(1, 4):
        m = <u128>s[i] + <uint64_t>(m >> 64)
        t[i] = <uint64_t>m
    if carry_in or <uint64_t>(m >> 64):
        fe_copy(r, t)
    else:
        fe_copy(r, s)


cdef inline void fe_add(uint64_t* r, const uint64_t* a, const uint64_t* b) noexcept nogil:
    cdef uint64_t s[4]
    cdef u128 m = 0
    cdef int i
    for i in range(4):
        m = <u128>a[i] + b[i] + <uint64_t>(m >> 64)
        s[i] = <uint64_t>m
    fe_normalize(r, s, <uint64_t>(m >> 64))


cdef inline void fe_sub(uint64_t* r, const uint64_t* a, const uint64_t* b) noexcept nogil:
    cdef uint64_t s[4]
    cdef uint64_t borrow = 0
    cdef uint64_t ai, bi
    cdef int i
    for i in range(4):
        ai = a[i]
        bi = b[i]
        s[i] = ai - bi - borrow
        borrow = (ai < bi) | ((ai == bi) & borrow)
    if borrow:
        # s = a - b + 2^256; want a - b + p = s - C
        bi = C_LO
        for i in range(4):
            ai = s[i]
            s[i] = ai - bi
            bi = 1 if ai < bi else 0
    fe_copy(r, s)


cdef void fe_reduce(uint64_t* r, const uint64_t* t) noexcept nogil:
    cdef uint64_t s[4]
    cdef u128 m
    cdef uint64_t carry = 0
    cdef int i
    for i in range(4):
        m = <u128>t[i + 4] * C_LO + t[i] + carry
        s[i] = <uint64_t>m
        carry = <uint64_t>(m >> 64)
    m = <u128>carry * C_LO + s[0]
    s[0] = <uint64_t>m
    for i in range(1, 4):
        m = <u128>s[i] + <uint64_t>(m >> 64)
        s[i] = <uint64_t>m
    if <uint64_t>(m >> 64):
        # wrapped past 2^256 once more; s is now small
        m = <u128>s[0] + C_LO
        s[0] = <uint64_t>m
        for i in range(1, 4):
            m = <u128>s[i] + <uint64_t>(m >> 64)
            s[i] = <uint64_t>m
    fe_normalize(r, s, 0)


cdef void fe_mul(uint64_t* r, const uint64_t* a, const uint64_t* b) noexcept nogil:
    cdef uint64_t t[8]
    cdef u128 m
    cdef uint64_t carry
    cdef int i, j
    memset(t, 0, sizeof(t))
    for i in range(4):
        carry = 0
        for j in range(4):
            m = <u128>a[i] * b[j] + t[i + j] + carry
            t[i + j] = <uint64_t>m
            carry = <uint64_t>(m >> 64)
        t[i + 4] = carry
    fe_reduce(r, t)


cdef inline void fe_sqr(uint64_t* r, const uint64_t* a) noexcept nogil:
    fe_mul(r, a, a)


cdef void fe_inv(uint64_t* r, const uint64_t* a) noexcept nogil:
    # a^(p-2), left-to-right square and multiply
    cdef uint64_t e[4]
    cdef uint64_t acc[4]
    cdef int bit, limb
    e[0] = FP[0] - 2; e[1] = FP[1]; e[2] = FP[2]; e[3] = FP[3]
    acc[0] = 1; acc[1] = 0; acc[2] = 0; acc[3] = 0
    for limb in range(3, -1, -1):
        for bit in range(63, -1, -1):
            fe_sqr(acc, acc)
            if (e[limb] >> bit) & 1:
                fe_mul(acc, acc, a)
    fe_copy(r, acc)


# ------------------------------------------------ jacobian points

ctypedef struct jpt:
    uint64_t x[4]
    uint64_t y[4]
    uint64_t z[4]
    int inf


cdef void pt_double(jpt* r, const jpt* p) noexcept nogil:
    cdef uint64_t a[4]
    cdef uint64_t b[4]
    cdef uint64_t c[4]
    cdef uint64_t d[4]
    cdef uint64_t e[4]
    cdef uint64_t t[4]
    cdef uint64_t x3[4]
    cdef uint64_t y3[4]
    cdef uint64_t z3[4]
    if p.inf or fe_is_zero(p.y):
        r.inf = 1
        return
    fe_sqr(a, p.x)
    fe_sqr(b, p.y)
    fe_sqr(c, b)
    fe_add(t, p.x, b)
    fe_sqr(t, t)
    fe_sub(t, t, a)
    fe_sub(t, t, c)
    fe_add(d, t, t)
    fe_add(e, a, a)
    fe_add(e, e, a)
    fe_sqr(x3, e)
    fe_sub(x3, x3, d)
    fe_sub(x3, x3, d)
    fe_sub(t, d, x3)
    fe_mul(y3, e, t)
    fe_add(c, c, c)
    fe_add(c, c, c)
    fe_add(c, c, c)
    fe_sub(y3, y3, c)
    fe_mul(z3, p.y, p.z)
    fe_add(z3, z3, z3)
    fe_copy(r.x, x3)
    fe_copy(r.y, y3)
    fe_copy(r.z, z3)
    r.inf = 0


cdef void pt_add(jpt* r, const jpt* p, const jpt* q) noexcept nogil:
    cdef uint64_t z1z1[4]
    cdef uint64_t z2z2[4]
    cdef uint64_t u1[4]
    cdef uint64_t u2[4]
    cdef uint64_t s1[4]
    cdef uint64_t s2[4]
    cdef uint64_t h[4]
    cdef uint64_t rr[4]
    cdef uint64_t hh[4]
    cdef uint64_t hhh[4]
    cdef uint64_t v[4]
    cdef uint64_t x3[4]
    cdef uint64_t y3[4]
    cdef uint64_t z3[4]
    if p.inf:
        r[0] = q[0]
        return
    if q.inf:
        r[0] = p[0]
        return
    fe_sqr(z1z1, p.z)
    fe_sqr(z2z2, q.z)
    fe_mul(u1, p.x, z2z2)
    fe_mul(u2, q.x, z1z1)
    fe_mul(s1, p.y, q.z)
    fe_mul(s1, s1, z2z2)
    fe_mul(s2, q.y, p.z)
    fe_mul(s2, s2, z1z1)
    fe_sub(h, u2, u1)
    fe_sub(rr, s2, s1)
    if fe_is_zero(h):
        if fe_is_zero(rr):
            pt_double(r, p)
        else:
            r.inf = 1
        return
    fe_sqr(hh, h)
    fe_mul(hhh, h, hh)
    fe_mul(v, u1, hh)
    fe_sqr(x3, rr)
    fe_sub(x3, x3, hhh)
    fe_sub(x3, x3, v)
    fe_sub(x3, x3, v)
    fe_sub(y3, v, x3)
    fe_mul(y3, rr, y3)
    fe_mul(s1, s1, hhh)
    fe_sub(y3, y3, s1)
    fe_mul(z3, p.z, q.z)
    fe_mul(z3, z3, h)
    fe_copy(r.x, x3)
    fe_copy(r.y, y3)
    fe_copy(r.z, z3)
    r.inf = 0


cdef void build_table(jpt* tab, const jpt* p) noexcept nogil:
    cdef int i
    tab[0].inf = 1
    tab[1] = p[0]
    for i in range(2, 16):
        pt_add(&tab[i], &tab[i - 1], p)


# ------------------------------------------------------ conversions

cdef void int_to_fe(object v, uint64_t* out):
    cdef bytes b = (<object>v).to_bytes(32, "big")
    cdef const uint8_t* p = b
    cdef int i, k
    cdef uint64_t limb
    for i in range(4):
        limb = 0
        for k in range(8):
            limb = (limb << 8) | p[24 - 8 * i + k]
        out[i] = limb


cdef object fe_to_int(const uint64_t* a):
    cdef uint8_t buf[32]
    cdef int i, k
    for i in range(4):
        for k in range(8):
            buf[24 - 8 * i + k] = <uint8_t>(a[i] >> (56 - 8 * k))
    return int.from_bytes(buf[:32], "big")


cdef object to_affine(const jpt* p):
    cdef uint64_t zi[4]
    cdef uint64_t zi2[4]
    cdef uint64_t x[4]
    cdef uint64_t y[4]
    if p.inf:
        return None
    fe_inv(zi, p.z)
    fe_sqr(zi2, zi)
    fe_mul(x, p.x, zi2)
    fe_mul(y, p.y, zi2)
    fe_mul(y, y, zi)
    return (fe_to_int(x), fe_to_int(y))


cdef jpt G_TABLE[16]
cdef jpt _g
int_to_fe(GX, _g.x)
int_to_fe(GY, _g.y)
_g.z[0] = 1; _g.z[1] = 0; _g.z[2] = 0; _g.z[3] = 0
_g.inf = 0
build_table(G_TABLE, &_g)


cdef inline int nibble(const uint8_t* be, int k) noexcept nogil:
    # k-th 4-bit window from the most significant end
    if k & 1:
        return be[k >> 1] & 15
    return be[k >> 1] >> 4


def mul_base(k):
    return mul_add(k, 0, GX, GY)


def mul_add(a, b, qx, qy):
    cdef bytes abytes = (a % N).to_bytes(32, "big")
    cdef bytes bbytes = (b % N).to_bytes(32, "big")
    cdef const uint8_t* ab = abytes
    cdef const uint8_t* bb = bbytes
    cdef bint use_q = (b % N) != 0
    cdef jpt q
    cdef jpt qtab[16]
    cdef jpt acc
    cdef int k, na, nb
    if use_q:
        int_to_fe(qx, q.x)
        int_to_fe(qy, q.y)
        q.z[0] = 1; q.z[1] = 0; q.z[2] = 0; q.z[3] = 0
        q.inf = 0
    acc.inf = 1
    with nogil:
        if use_q:
            build_table(qtab, &q)
        for k in range(64):
            if not acc.inf:
                pt_double(&acc, &acc)
                pt_double(&acc, &acc)
                pt_double(&acc, &acc)
                pt_double(&acc, &acc)
            na = nibble(ab, k)
            if na:
                pt_add(&acc, &acc, &G_TABLE[na])
            if use_q:
                nb = nibble(bb, k)
                if nb:
                    pt_add(&acc, &acc, &qtab[nb])
    return to_affine(&acc)

"""Pure-Python hot kernels: keccak-256 and secp256k1 point multiplication.

Same surface as the compiled ``_speedups`` module:

    keccak256(data) -> 32 bytes
    mul_base(k) -> (x, y) | None                 k*G
    mul_add(a, b, qx, qy) -> (x, y) | None       a*G + b*Q

``None`` stands for the point at infinity.  Nothing here is constant time.
"""
from __future__ import annotations

P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

# ---------------------------------------------------------------- keccak

_MASK = (1 << 64) - 1
_RC = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)
# rotation offset for lane x + 5*y
_ROT = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)
# pi step: lane i moves to _PI[i]
_PI = tuple(
    y + 5 * ((2 * x + 3 * y) % 5) for i in range(25) for x, y in [(i % 5, i // 5)]
)
_RATE = 136


def _keccak_f(a: list[int]) -> None:
    for rc in _RC:
        c0 = a[0] ^ a[5] ^ a[10] ^ a[15] ^ a[20]
        c1 = a[1] ^ a[6] ^ a[11] ^ a[16] ^ a[21]
        c2 = a[2] ^ a[7] ^ a[12] ^ a[17] ^ a[22]
        c3 = a[3] ^ a[8] ^ a[13] ^ a[18] ^ a[23]
        c4 = a[4] ^ a[9] ^ a[14] ^ a[19] ^ a[24]
        d0 = c4 ^ (((c1 << 1) | (c1 >> 63)) & _MASK)
        d1 = c0 ^ (((c2 << 1) | (c2 >> 63)) & _MASK)
        d2 = c1 ^ (((c3 << 1) | (c3 >> 63)) & _MASK)
        d3 = c2 ^ (((c4 << 1) | (c4 >> 63)) & _MASK)
        d4 = c3 ^ (((c0 << 1) | (c0 >> 63)) & _MASK)
        d = (d0, d1, d2, d3, d4)
        b = [0] * 25
        for i in range(25):
            v = a[i] ^ d[i % 5]
            r = _ROT[i]
            if r:
                v = ((v << r) | (v >> (64 - r))) & _MASK
            b[_PI[i]] = v
        for y in range(0, 25, 5):
            b0, b1, b2, b3, b4 = b[y], b[y + 1], b[y + 2], b[y + 3], b[y + 4]
            a[y] = b0 ^ (~b1 & b2)
            a[y + 1] = b1 ^ (~b2 & b3)
            a[y + 2] = b2 ^ (~b3 & b4)
            a[y + 3] = b3 ^ (~b4 & b0)
            a[y + 4] = b4 ^ (~b0 & b1)
        a[0] ^= rc


def keccak256(data: bytes) -> bytes:
    """Original Keccak padding (0x01 ... 0x80), not the SHA3 variant."""
    data = bytes(data)
    pad = _RATE - (len(data) % _RATE)
    padded = bytearray(data)
    padded += b"\x00" * pad
    padded[len(data)] ^= 0x01
    padded[-1] ^= 0x80
    state = [0] * 25
    for off in range(0, len(padded), _RATE):
        block = padded[off : off + _RATE]
        for i in range(_RATE // 8):
            state[i] ^= int.from_bytes(block[8 * i : 8 * i + 8], "little")
        _keccak_f(state)
    return b"".join(state[i].to_bytes(8, "little") for i in range(4))


# ---------------------------------------------------------- secp256k1
# Jacobian (X, Y, Z) with x = X/Z^2, y = Y/Z^3; Z == 0 is infinity.

_INF = (0, 1, 0)


def _double(pt):
    x, y, z = pt
    if z == 0 or y == 0:
        return _INF
    a = x * x % P
    b = y * y % P
    c = b * b % P
    d = 2 * ((x + b) * (x + b) - a - c) % P
    e = 3 * a % P
    x3 = (e * e - 2 * d) % P
    y3 = (e * (d - x3) - 8 * c) % P
    z3 = 2 * y * z % P
    return (x3, y3, z3)


def _add(p1, p2):
    x1, y1, z1 = p1
    x2, y2, z2 = p2
    if z1 == 0:
        return p2
    if z2 == 0:
        return p1
    z1z1 = z1 * z1 % P
    z2z2 = z2 * z2 % P
    u1 = x1 * z2z2 % P
    u2 = x2 * z1z1 % P
    s1 = y1 * z2 * z2z2 % P
    s2 = y2 * z1 * z1z1 % P
    h = (u2 - u1) % P
    r = (s2 - s1) % P
    if h == 0:
        return _double(p1) if r == 0 else _INF
    hh = h * h % P
    hhh = h * hh % P
    v = u1 * hh % P
    x3 = (r * r - hhh - 2 * v) % P
    y3 = (r * (v - x3) - s1 * hhh) % P
    z3 = z1 * z2 * h % P
    return (x3, y3, z3)


def _to_affine(pt):
    x, y, z = pt
    if z == 0:
        return None
    zi = pow(z, P - 2, P)
    zi2 = zi * zi % P
    return (x * zi2 % P, y * zi2 * zi % P)


def _table(pt):
    """[0*P, 1*P, ..., 15*P] for 4-bit windows."""
    tab = [_INF, pt]
    for _ in range(14):
        tab.append(_add(tab[-1], pt))
    return tab


_G_TABLE = _table((GX, GY, 1))


def mul_base(k: int):
    return mul_add(k, 0, GX, GY)


def mul_add(a: int, b: int, qx: int, qy: int):
    a %= N
    b %= N
    qtab = _table((qx, qy, 1)) if b else None
    acc = _INF
    for shift in range(252, -1, -4):
        if acc[2]:
            acc = _double(_double(_double(_double(acc))))
        na = (a >> shift) & 15
        if na:
            acc = _add(acc, _G_TABLE[na])
        if qtab is not None:
            nb = (b >> shift) & 15
            if nb:
                acc = _add(acc, qtab[nb])
    return _to_affine(acc)

"""Binary polynomials as Python ints: bit i is the coefficient of x**i."""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations


def degree(a: int) -> int:
    return a.bit_length() - 1


def clmul(a: int, b: int) -> int:
    """Carry-less product of two binary polynomials."""
    if a.bit_length() < b.bit_length():
        a, b = b, a
    out = 0
    while b:
        low = b & -b
        out ^= a << (low.bit_length() - 1)
        b ^= low
    return out


def polymod(a: int, m: int) -> int:
    dm = degree(m)
    while a and degree(a) >= dm:
        a ^= m << (degree(a) - dm)
    return a


def mulmod(a: int, b: int, m: int) -> int:
    return polymod(clmul(a, b), m)


def polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, polymod(a, b)
    return a


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _x_pow_2k(k: int, m: int) -> int:
    """x**(2**k) mod m by repeated squaring."""
    r = polymod(0b10, m)
    for _ in range(k):
        r = mulmod(r, r, m)
    return r


def is_irreducible(m: int) -> bool:
    """Rabin's irreducibility test over GF(2)."""
    n = degree(m)
    if n < 1:
        return False
    if n == 1:
        return True
    x = 0b10
    if _x_pow_2k(n, m) != polymod(x, m):
        return False
    for p in _prime_factors(n):
        if polygcd(m, _x_pow_2k(n // p, m) ^ x) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def irreducible_polynomial(n: int) -> int:
    """Lowest-weight irreducible polynomial of degree ``n`` (trinomial, else pentanomial)."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    top = (1 << n) | 1
    if n == 1:
        return 0b11
    for k in range(1, n):
        cand = top | (1 << k)
        if is_irreducible(cand):
            return cand
    for ks in combinations(range(1, n), 3):
        cand = top | (1 << ks[0]) | (1 << ks[1]) | (1 << ks[2])
        if is_irreducible(cand):
            return cand
    raise RuntimeError(f"no irreducible trinomial or pentanomial of degree {n}")

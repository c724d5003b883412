"""Arithmetic over GF(2): bit-packed polynomials, the cyclic ring
GF(2)[X]/(X^W - 1), and dense linear-system solving.

Polynomials are plain nonnegative Python ints: bit i is the coefficient
of X^i, so the hex encoding of a polynomial is just the hex form of the
integer (lowest degree in the least-significant bit).  The zero
polynomial is 0 and has degree -1.

Everything here is a pure function of its inputs; values are ints and
freely shareable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

X = 2  # the monomial X as an int


class InconsistentSystemError(ValueError):
    """Raised by gf2_solve when no solution exists.

    `witness` is a row-combination bitmask w with w.M = 0 but w.rhs = 1,
    verifiable by the caller.
    """

    def __init__(self, witness: int):
        super().__init__("linear system over GF(2) is inconsistent")
        self.witness = witness


def degree(a: int) -> int:
    """Degree of a (-1 for the zero polynomial)."""
    return a.bit_length() - 1


def poly_add(a: int, b: int) -> int:
    """Coefficientwise sum; self-inverse (a + a = 0)."""
    return a ^ b


def poly_mul(a: int, b: int) -> int:
    """Schoolbook carry-less product."""
    if a < b:
        a, b = b, a
    c = 0
    while b:
        if b & 1:
            c ^= a
        a <<= 1
        b >>= 1
    return c


def poly_divmod(a: int, b: int) -> tuple[int, int]:
    """Quotient and remainder of a by nonzero b."""
    if b == 0:
        raise ZeroDivisionError("division by the zero polynomial")
    m = degree(a)
    n = degree(b)
    if m < n:
        return 0, a
    q = 0
    b <<= m - n
    for i in range(m - n, -1, -1):
        if (a >> (i + n)) & 1:
            a ^= b
            q |= 1 << i
        b >>= 1
    return q, a


def poly_mod(a: int, b: int) -> int:
    """Remainder of a modulo nonzero b."""
    return poly_divmod(a, b)[1]


def poly_mulmod(a: int, b: int, m: int) -> int:
    """(a * b) mod m, for nonzero m."""
    if m == 0:
        raise ZeroDivisionError("zero modulus")
    return poly_mod(poly_mul(a, b), m)


def poly_gcd(a: int, b: int) -> int:
    """Greatest common divisor; gcd(a, 0) = a, gcd(0, 0) is an error."""
    if a == 0 and b == 0:
        raise ValueError("gcd(0, 0) is undefined")
    while b:
        a, b = b, poly_mod(a, b)
    return a


def poly_gcdext(a: int, b: int) -> tuple[int, int, int]:
    """Extended GCD: returns (g, s, t) with s*a + t*b = g."""
    s, s1 = 1, 0
    t, t1 = 0, 1
    while b:
        q, r = poly_divmod(a, b)
        a, b = b, r
        s, s1 = s1, s ^ poly_mul(q, s1)
        t, t1 = t1, t ^ poly_mul(q, t1)
    return a, s, t


# 8-bit -> 16-bit squaring spread table: bit k of u maps to bit 2k.
_SQR_SPREAD = [sum(((u >> k) & 1) << (2 * k) for k in range(8)) for u in range(256)]


def poly_sqr(a: int) -> int:
    """Square of a (bit interleave; GF(2) squaring is linear)."""
    r = 0
    shift = 0
    while a:
        r |= _SQR_SPREAD[a & 0xFF] << shift
        a >>= 8
        shift += 16
    return r


class ModReducer:
    """Byte-strided reduction context for a fixed nonzero modulus.

    Precomputes, per modulus, the reductions of u(X)*X^deg(m) for all
    8-bit u, so reducing a double-width operand costs one table lookup
    per 8 coefficients instead of one XOR per coefficient.  Worth it
    whenever many reductions share one modulus (modular squaring chains,
    per-candidate residue checks).
    """

    def __init__(self, m: int):
        if m == 0:
            raise ZeroDivisionError("zero modulus")
        self.m = m
        self.deg = degree(m)
        self.mask = (1 << self.deg) - 1
        low = m & self.mask  # X^deg = low (mod m)
        basis = [low]
        for _ in range(7):
            t = basis[-1] << 1
            if t >> self.deg & 1:
                t = (t & self.mask) ^ low
            basis.append(t)
        table = [0] * 256
        for u in range(1, 256):
            lsb = u & -u
            table[u] = table[u ^ lsb] ^ basis[lsb.bit_length() - 1]
        self._table = table

    def reduce(self, a: int) -> int:
        """a mod m."""
        d = self.deg
        table = self._table
        bits = a.bit_length()
        # peel whole bytes of excess degree from the top
        k = bits - d
        if k <= 0:
            return a
        k = (k + 7) & ~7
        while k >= 8:
            k -= 8
            top = a >> (d + k)
            a ^= top << (d + k)
            a ^= table[top] << k if top else 0
        return a

    def sqr(self, a: int) -> int:
        """a^2 mod m."""
        return self.reduce(poly_sqr(a))

    def mul(self, a: int, b: int) -> int:
        """(a * b) mod m."""
        return self.reduce(poly_mul(a, b))


def pow_x2d_mod(d: int, m: int) -> int:
    """X^(2^d) mod m via d successive squarings."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    if degree(m) < 1:
        raise ValueError("modulus must have degree >= 1")
    red = ModReducer(m)
    t = red.reduce(X)
    for _ in range(d):
        t = red.sqr(t)
    return t


def is_irreducible(f: int) -> bool:
    """Irreducibility over GF(2) via gcd(X^(2^k) - X, f) probes.

    f is irreducible iff it has no irreducible factor of degree
    <= deg(f)/2, i.e. gcd(X^(2^k) + X, f) = 1 for k = 1..deg(f)//2.
    """
    d = degree(f)
    if d < 1:
        raise ValueError("degree must be >= 1")
    if d == 1:
        return True
    red = ModReducer(f)
    t = red.reduce(X)
    for _ in range(d // 2):
        t = red.sqr(t)
        if poly_gcd(t ^ X, f) != 1:
            return False
    return True


def _proper_divisors(d: int) -> list[int]:
    return [e for e in range(1, d) if d % e == 0]


def _trace_split(g: int, d: int, rng: random.Random) -> list[int]:
    """Split a product of >= 2 distinct degree-d irreducibles.

    Equal-degree factorization for characteristic 2 via the trace map
    T(u) = u + u^2 + ... + u^(2^(d-1)): gcd(T(u) mod g, g) is a proper
    factor with probability about 1/2 per random u.
    """
    if degree(g) == d:
        return [g]
    red = ModReducer(g)
    while True:
        u = rng.getrandbits(degree(g))
        if u == 0:
            continue
        t = 0
        v = red.reduce(u)
        for _ in range(d):
            t ^= v
            v = red.sqr(v)
        w = poly_gcd(t, g) if t else 0
        if w and 0 < degree(w) < degree(g):
            left = _trace_split(w, d, rng)
            right = _trace_split(poly_divmod(g, w)[0], d, rng)
            return left + right


def irreducible_factors_of_degree(f: int, d: int, seed: int = 0) -> list[int]:
    """All distinct irreducible degree-d divisors of nonzero f, sorted.

    Distinct-degree splitting restricted to degree d: take
    gcd(X^(2^d) + X, f) (the product of f's distinct irreducible factors
    with degree dividing d), strip the factors whose degree properly
    divides d, and split whatever remains.
    """
    if f == 0:
        raise ValueError("f must be nonzero")
    if degree(f) < d:
        return []
    g = poly_gcd(pow_x2d_mod(d, f) ^ X, f)
    if degree(g) < d:
        return []
    for e in _proper_divisors(d):
        if degree(g) < 1:
            break
        s = poly_gcd(pow_x2d_mod(e, g) ^ X, g)
        if degree(s) > 0:
            g = poly_divmod(g, s)[0]
    if degree(g) < d:
        return []
    return sorted(_trace_split(g, d, random.Random(seed)))


def random_irreducible(deg: int, seed: int) -> int:
    """Uniform irreducible monic polynomial of exact degree, per seed."""
    if deg < 1:
        raise ValueError("degree must be >= 1")
    rng = random.Random(seed)
    top = 1 << deg
    while True:
        f = top | rng.getrandbits(deg)
        if is_irreducible(f):
            return f


def to_hex(a: int) -> str:
    """Hex encoding: coefficient bits, lowest degree in the LSB."""
    return format(a, "x")


def from_hex(s: str) -> int:
    return int(s, 16)


# ---------------------------------------------------------------------------
# The cyclic ring R = GF(2)[X]/(X^W - 1)


def ring_mul(a: int, b: int, width: int) -> int:
    """Product in GF(2)[X]/(X^W - 1): multiply, then fold X^(W+k) -> X^k."""
    m = poly_mul(a, b)
    mask = (1 << width) - 1
    while m >> width:
        m = (m & mask) ^ (m >> width)
    return m


def ring_rotl(a: int, k: int, width: int) -> int:
    """Multiplication by X^k, i.e. a cyclic left rotation by k bits."""
    k %= width
    mask = (1 << width) - 1
    return ((a << k) | (a >> (width - k))) & mask if k else a


def ring_invertible(a: int, width: int) -> bool:
    """a is a unit iff gcd(a, X^W + 1) = 1."""
    return a != 0 and poly_gcd(a, (1 << width) | 1) == 1


def ring_invert(a: int, width: int) -> int:
    """Inverse of a unit in GF(2)[X]/(X^W - 1)."""
    mod = (1 << width) | 1
    g, s, _ = poly_gcdext(a, mod)
    if g != 1:
        raise ZeroDivisionError("element is not invertible in the ring")
    return poly_mod(s, mod) & ((1 << width) - 1)


@dataclass(frozen=True)
class RingElem:
    """Element of GF(2)[X]/(X^W - 1); value is a polynomial of degree < W."""

    value: int
    width: int = 32

    def __post_init__(self):
        object.__setattr__(self, "value", self.value & ((1 << self.width) - 1))

    def __add__(self, other: "RingElem") -> "RingElem":
        return RingElem(self.value ^ other.value, self.width)

    __sub__ = __add__

    def __mul__(self, other: "RingElem") -> "RingElem":
        return RingElem(ring_mul(self.value, other.value, self.width), self.width)

    def shift(self, k: int) -> "RingElem":
        """Multiply by X^k (cyclic rotation)."""
        return RingElem(ring_rotl(self.value, k, self.width), self.width)

    def inverse(self) -> "RingElem":
        return RingElem(ring_invert(self.value, self.width), self.width)

    def is_unit(self) -> bool:
        return ring_invertible(self.value, self.width)


# ---------------------------------------------------------------------------
# Dense GF(2) linear systems on int bitsets


@dataclass
class GF2Matrix:
    """Rows are int bitsets; bit c of a row is the coefficient of column c."""

    rows: list[int]
    n_cols: int

    def __post_init__(self):
        limit = 1 << self.n_cols
        for r in self.rows:
            if r >= limit or r < 0:
                raise ValueError("row has bits outside n_cols")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def mul_vec(self, v: int) -> int:
        """M . v as a column bitset (bit per row)."""
        out = 0
        for i, r in enumerate(self.rows):
            out |= ((r & v).bit_count() & 1) << i
        return out


@dataclass
class GF2Solution:
    particular: int
    kernel: list[int] = field(default_factory=list)

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel)


def _echelon(rows: list[int], rhs_bits: int, track: bool):
    """Leading-bit echelon basis: pivot column -> (row, rhs, combo)."""
    basis: dict[int, tuple[int, int, int]] = {}
    bad_combo = None
    for i, row in enumerate(rows):
        rhs = (rhs_bits >> i) & 1
        combo = (1 << i) if track else 0
        while row:
            p = row.bit_length() - 1
            hit = basis.get(p)
            if hit is None:
                basis[p] = (row, rhs, combo)
                break
            row ^= hit[0]
            rhs ^= hit[1]
            combo ^= hit[2]
        else:
            if rhs:
                bad_combo = combo
                if not track:
                    return basis, True, 0
                return basis, True, bad_combo
    return basis, False, 0


def gf2_solve(matrix: GF2Matrix, rhs: int = 0) -> GF2Solution:
    """Solve M.x = rhs over GF(2).

    Returns a particular solution and a kernel basis spanning the
    homogeneous solutions.  Raises InconsistentSystemError (with a
    verifiable witness combination) when no solution exists.
    """
    basis, bad, _ = _echelon(matrix.rows, rhs, track=False)
    if bad:
        # rare path: re-run with combination tracking for the certificate
        _, _, witness = _echelon(matrix.rows, rhs, track=True)
        raise InconsistentSystemError(witness)

    pivots = sorted(basis)
    pivot_set = set(pivots)
    free_cols = [c for c in range(matrix.n_cols) if c not in pivot_set]

    def back_substitute(v: int, use_rhs: bool) -> int:
        # rows only involve columns <= pivot, so ascending pivot order works
        for p in pivots:
            row, r, _ = basis[p]
            par = (row & v).bit_count() & 1
            if use_rhs:
                par ^= r
            if par:
                v |= 1 << p
        return v

    particular = back_substitute(0, use_rhs=True)
    kernel = [back_substitute(1 << f, use_rhs=False) for f in free_cols]
    return GF2Solution(particular, kernel)

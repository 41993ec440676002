"""Arbitrary-precision integer and integer-matrix kernel.

Factorization, modular powers and multiplicative orders, coprime splitting
against a prime support, and exact determinant / adjugate / matrix orders.
Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import DomainError, NotInvertibleError, ResourceError

#: Largest value :func:`factorize` accepts by default.
MAX_FACTOR_VALUE = 10**80
#: Trial division bound.
TRIAL_BOUND = 10**6
#: Total Pollard-Brent iterations allowed per composite before giving up.
RHO_ITERATION_CAP = 20_000_000
#: Iteration cap for the brute-force fallback of :func:`mat_order_mod`.
MATRIX_ORDER_CAP = 10**7

# Miller-Rabin with the first 13 prime bases is deterministic below this bound.
_MR_DETERMINISTIC_BOUND = 3_317_044_064_679_887_385_961_981
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


@lru_cache(maxsize=1)
def _small_primes() -> tuple[int, ...]:
    sieve = bytearray([1]) * (TRIAL_BOUND + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(TRIAL_BOUND) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, TRIAL_BOUND + 1, i)))
    return tuple(i for i, flag in enumerate(sieve) if flag)


def _miller_rabin(n: int, base: int) -> bool:
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    x = pow(base, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def _jacobi(a: int, n: int) -> int:
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _strong_lucas(n: int) -> bool:
    # Selfridge parameter choice: first D in 5, -7, 9, -11, ... with (D/n) = -1.
    D = 5
    while True:
        j = _jacobi(D, n)
        if j == -1:
            break
        if j == 0 and abs(D) != n:
            return False
        D = -D - 2 if D > 0 else -D + 2
        if D == 17 and math.isqrt(n) ** 2 == n:
            return False
    P, Q = 1, (1 - D) // 4
    d, s = n + 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # Binary ladder for U_d, V_d.
    U, V, Qk = 0, 2, 1
    inv2 = (n + 1) // 2
    for bit in bin(d)[2:]:
        U, V = U * V % n, (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if bit == "1":
            U, V = (P * U + V) * inv2 % n, (D * U + P * V) * inv2 % n
            Qk = Qk * Q % n
    if U == 0 or V == 0:
        return True
    for _ in range(s - 1):
        V = (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if V == 0:
            return True
    return False


def is_prime(n: int) -> bool:
    """Primality test.

    Deterministic Miller-Rabin below 3.3e24; Baillie-PSW above.
    """
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n < 43 * 43:
        return True
    if n < _MR_DETERMINISTIC_BOUND:
        return all(_miller_rabin(n, b) for b in _MR_BASES)
    return _miller_rabin(n, 2) and _strong_lucas(n)


def _brent_rho(n: int, budget: list[int]) -> int:
    """Return a nontrivial factor of the odd composite ``n``."""
    for c in range(1, 1000):
        y, r, q, g = 2, 1, 1, 1
        m = 128
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            budget[0] -= r
            if budget[0] < 0:
                raise ResourceError(f"rho iteration cap exceeded while factoring {n}")
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise ResourceError(f"rho failed to split {n}")


@dataclass(frozen=True)
class Factorization:
    """Prime factorization ``value = prod(p**e for p, e in factors)``."""

    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        prod = 1
        for p, e in self.factors:
            prod *= p**e
        if prod != self.value:
            raise ValueError("factors do not multiply to value")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def as_dict(self) -> dict[int, int]:
        return dict(self.factors)


def factorize(n: int, max_value: int = MAX_FACTOR_VALUE) -> Factorization:
    """Factor ``n >= 1`` into primes (sorted, deterministic)."""
    if n < 1:
        raise DomainError(f"factorize needs a positive integer, got {n}")
    if n > max_value:
        raise ResourceError(f"{n} exceeds the factorization bound {max_value}")
    return _factorize_cached(n)


# Large primes met while factoring structured numbers such as b**n - 1.
_KNOWN_PRIMES: set[int] = set()


def _pollard_pm1(n: int, bound: int = 50_000) -> int | None:
    """Stage-one ``p - 1`` method; a nontrivial factor of ``n`` or None."""
    a = 2
    for q in _small_primes():
        if q > bound:
            break
        qk = q
        while qk * q <= bound:
            qk *= q
        a = pow(a, qk, n)
    g = math.gcd(a - 1, n)
    return g if 1 < g < n else None


@lru_cache(maxsize=4096)
def _factorize_cached(n: int) -> Factorization:
    found: dict[int, int] = {}
    rest = n
    for p in _small_primes():
        if p * p > rest:
            break
        if rest % p == 0:
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            found[p] = e
    for p in sorted(_KNOWN_PRIMES):
        while rest > 1 and rest % p == 0:
            rest //= p
            found[p] = found.get(p, 0) + 1
    if rest > 1:
        budget = [RHO_ITERATION_CAP]
        stack = [rest]
        while stack:
            m = stack.pop()
            if m == 1:
                continue
            if is_prime(m):
                found[m] = found.get(m, 0) + 1
                continue
            root = math.isqrt(m)
            if root * root == m:
                stack.extend((root, root))
                continue
            d = _pollard_pm1(m) or _brent_rho(m, budget)
            stack.extend((d, m // d))
    return Factorization(n, tuple(sorted(found.items())))


def _root_and_power(b: int) -> tuple[int, int]:
    """``(r, e)`` with ``b = r**e`` and ``e`` maximal."""
    for e in range(b.bit_length(), 1, -1):
        r = round(b ** (1 / e))
        for c in (r - 1, r, r + 1):
            if c > 1 and c**e == b:
                return c, e
    return b, 1


def _mobius(n: int) -> int:
    f = factorize(n).factors
    return 0 if any(e > 1 for _, e in f) else (-1) ** len(f)


def cyclotomic_value(d: int, x: int) -> int:
    """``Phi_d(x)`` by Mobius inversion of ``x**d - 1 = prod_{k | d} Phi_k(x)``."""
    num = den = 1
    for k in range(1, d + 1):
        if d % k == 0:
            mu = _mobius(d // k)
            if mu == 1:
                num *= x**k - 1
            elif mu == -1:
                den *= x**k - 1
    value, rem = divmod(num, den)
    if rem:
        raise AssertionError("cyclotomic quotient is not exact")
    return value


def factor_power_minus_one(b: int, n: int, max_value: int = MAX_FACTOR_VALUE) -> Factorization:
    """Factor ``b**n - 1`` through its cyclotomic pieces.

    Each piece, not the whole, must respect ``max_value``. The primes found
    are remembered, so later factorizations of divisors of
    ``b**n - 1`` reduce to trial division.
    """
    if b < 2 or n < 1:
        raise DomainError("need b >= 2 and n >= 1")
    value = b**n - 1
    r, e = _root_and_power(b)
    N = e * n
    found: dict[int, int] = {}
    for d in range(1, N + 1):
        if N % d == 0:
            for p, k in factorize(cyclotomic_value(d, r), max_value).factors:
                found[p] = found.get(p, 0) + k
    _KNOWN_PRIMES.update(p for p in found if p > TRIAL_BOUND)
    return Factorization(value, tuple(sorted(found.items())))


def valuation(n: int, p: int) -> int:
    """Exponent of the prime ``p`` in the nonzero integer ``n``."""
    if n == 0:
        raise DomainError("valuation of zero is undefined")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def mod_pow(a: int, e: int, m: int) -> int:
    """``a**e mod m`` in [0, m)."""
    if m < 2:
        raise DomainError(f"modulus must be >= 2, got {m}")
    if e < 0:
        raise DomainError("exponent must be nonnegative")
    return pow(a, e, m)


def _lcm_merge(acc: dict[int, int], other: dict[int, int]) -> None:
    for p, e in other.items():
        if e > acc.get(p, 0):
            acc[p] = e


def _carmichael_factored(m: int) -> dict[int, int]:
    lam: dict[int, int] = {}
    for p, e in factorize(m).factors:
        if p == 2:
            part = {} if e == 1 else ({2: 1} if e == 2 else {2: e - 2})
        else:
            part = factorize(p - 1).as_dict()
            if e > 1:
                part[p] = part.get(p, 0) + e - 1
        _lcm_merge(lam, part)
    return lam


def multiplicative_order(a: int, m: int) -> int:
    """Smallest ``n >= 1`` with ``a**n = 1 mod m``.

    Strips prime factors off the Carmichael exponent. ``m = 1`` gives 1.
    """
    if m < 1:
        raise DomainError(f"modulus must be positive, got {m}")
    if m == 1:
        return 1
    if math.gcd(a, m) != 1:
        raise NotInvertibleError(f"{a} is not invertible modulo {m}")
    lam = _carmichael_factored(m)
    order = 1
    for p, e in lam.items():
        order *= p**e
    for p, e in lam.items():
        for _ in range(e):
            if pow(a, order // p, m) == 1:
                order //= p
            else:
                break
    return order


@dataclass(frozen=True)
class CoprimeSplit:
    """``value = h * r`` with every prime of ``h`` in the support and ``r`` coprime to it."""

    value: int
    h: int
    r: int
    prime_support: tuple[int, ...]
    valuations: tuple[int, ...]


def split_by_primes(n: int, primes: Iterable[int]) -> CoprimeSplit:
    """Divide every prime of ``primes`` out of ``n``; the sign stays in ``h``."""
    if n == 0:
        raise DomainError("cannot split zero")
    support = tuple(sorted(set(primes)))
    if not support:
        raise DomainError("prime support must be non-empty")
    for p in support:
        if not is_prime(p):
            raise DomainError(f"{p} is not prime")
    r = abs(n)
    vals = []
    for p in support:
        v = 0
        while r % p == 0:
            r //= p
            v += 1
        vals.append(v)
    return CoprimeSplit(n, n // r, r, support, tuple(vals))


# ---------------------------------------------------------------- matrices


@dataclass(frozen=True)
class IntMatrix:
    """Square matrix of Python integers, stored row-major."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        d = len(self.rows)
        if d < 1 or any(len(r) != d for r in self.rows):
            raise DomainError("IntMatrix must be square with dim >= 1")

    @classmethod
    def of(cls, rows: Sequence[Sequence[int]]) -> "IntMatrix":
        return cls(tuple(tuple(int(x) for x in r) for r in rows))

    @classmethod
    def identity(cls, d: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)))

    @classmethod
    def diag(cls, *entries: int) -> "IntMatrix":
        d = len(entries)
        return cls(tuple(tuple(entries[i] if i == j else 0 for j in range(d)) for i in range(d)))

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        cols = list(zip(*other.rows))
        return IntMatrix(tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.rows))

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def scale(self, k: int) -> "IntMatrix":
        return IntMatrix(tuple(tuple(k * a for a in r) for r in self.rows))

    def mod(self, m: int) -> "IntMatrix":
        return IntMatrix(tuple(tuple(a % m for a in r) for r in self.rows))

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.rows)))

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        return tuple(sum(a * b for a, b in zip(r, v)) for r in self.rows)

    def trace(self) -> int:
        return sum(self.rows[i][i] for i in range(self.dim))

    def is_upper_triangular(self) -> bool:
        return all(self.rows[i][j] == 0 for i in range(self.dim) for j in range(i))

    def is_lower_triangular(self) -> bool:
        return self.transpose().is_upper_triangular()

    def is_triangular(self) -> bool:
        return self.is_upper_triangular() or self.is_lower_triangular()

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.rows]


def mat_pow(A: IntMatrix, e: int) -> IntMatrix:
    """Exact ``A**e`` for ``e >= 0``."""
    if e < 0:
        raise DomainError("exponent must be nonnegative")
    result = IntMatrix.identity(A.dim)
    base = A
    while e:
        if e & 1:
            result = result @ base
        e >>= 1
        if e:
            base = base @ base
    return result


def mat_pow_mod(A: IntMatrix, e: int, m: int) -> IntMatrix:
    """``A**e`` with entries reduced into [0, m)."""
    if m < 2:
        raise DomainError(f"modulus must be >= 2, got {m}")
    if e < 0:
        raise DomainError("exponent must be nonnegative")
    result = IntMatrix.identity(A.dim).mod(m)
    base = A.mod(m)
    while e:
        if e & 1:
            result = (result @ base).mod(m)
        e >>= 1
        if e:
            base = (base @ base).mod(m)
    return result


def mat_det(A: IntMatrix) -> int:
    """Determinant by Bareiss fraction-free elimination."""
    M = [list(r) for r in A.rows]
    d = A.dim
    sign, prev = 1, 1
    for k in range(d - 1):
        if M[k][k] == 0:
            for i in range(k + 1, d):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = M[k][k]
        for i in range(k + 1, d):
            for j in range(k + 1, d):
                M[i][j] = (M[i][j] * pivot - M[i][k] * M[k][j]) // prev
        prev = pivot
    return sign * M[d - 1][d - 1]


def _faddeev_leverrier(A: IntMatrix) -> tuple[list[int], IntMatrix]:
    """Characteristic coefficients ``[1, c1, ..., cd]`` and the last auxiliary matrix."""
    d = A.dim
    I = IntMatrix.identity(d)
    coeffs = [1]
    Mk = IntMatrix(tuple((0,) * d for _ in range(d)))
    for k in range(1, d + 1):
        Mk = A @ Mk + I.scale(coeffs[-1])
        tr = (A @ Mk).trace()
        # Exact: the trace is always divisible by k.
        coeffs.append(-tr // k)
    return coeffs, Mk


def charpoly(A: IntMatrix) -> list[int]:
    """Coefficients of ``det(xI - A)``, leading coefficient first."""
    return _faddeev_leverrier(A)[0]


def mat_adjugate(A: IntMatrix) -> IntMatrix:
    """Adjugate (transposed cofactor matrix); valid for singular ``A`` too."""
    _, Md = _faddeev_leverrier(A)
    return Md.scale((-1) ** (A.dim + 1))


def _exponent_multiple(p: int, e: int, d: int) -> dict[int, int]:
    """Factored multiple of the exponent of GL_d(Z / p^e)."""
    acc: dict[int, int] = {}
    for i in range(1, d + 1):
        _lcm_merge(acc, factor_power_minus_one(p, i).as_dict())
    t = 0
    while p**t < d:
        t += 1
    extra = t + e - 1
    if extra:
        acc[p] = acc.get(p, 0) + extra
    return acc


def _strip_order(A: IntMatrix, m: int, multiple: dict[int, int]) -> int:
    ident = IntMatrix.identity(A.dim).mod(m)
    order = 1
    for p, e in multiple.items():
        order *= p**e
    for p, e in multiple.items():
        for _ in range(e):
            if mat_pow_mod(A, order // p, m) == ident:
                order //= p
            else:
                break
    return order


def mat_order_mod(A: IntMatrix, m: int, cap: int = MATRIX_ORDER_CAP) -> int:
    """Smallest ``n >= 1`` with ``A**n = I mod m``; ``m = 1`` gives 1.

    Uses the exponent of GL_d over each prime-power factor of ``m`` when the
    needed factorizations are available, else iterates up to ``cap`` steps.
    The result's minimality is certified against every maximal proper divisor.
    """
    if m < 1:
        raise DomainError(f"modulus must be positive, got {m}")
    if m == 1:
        return 1
    if math.gcd(mat_det(A), m) != 1:
        raise NotInvertibleError(f"matrix is not invertible modulo {m}")
    ident = IntMatrix.identity(A.dim).mod(m)
    try:
        order = 1
        for p, e in factorize(m).factors:
            pe = p**e
            local = 1 if pe == 1 else _strip_order(A, pe, _exponent_multiple(p, e, A.dim))
            order = order * local // math.gcd(order, local)
    except ResourceError:
        order = _iterate_order(A, m, cap)
    if mat_pow_mod(A, order, m) != ident:
        raise AssertionError("matrix order computation is inconsistent")
    for p, _ in factorize(order).factors:
        if mat_pow_mod(A, order // p, m) == ident:
            raise AssertionError("matrix order is not minimal")
    return order


def _iterate_order(A: IntMatrix, m: int, cap: int) -> int:
    ident = IntMatrix.identity(A.dim).mod(m)
    base = A.mod(m)
    cur = base
    n = 1
    while cur != ident:
        cur = (cur @ base).mod(m)
        n += 1
        if n > cap:
            raise ResourceError(f"matrix order modulo {m} exceeds {cap} iterations")
    return n


def companion(coeffs: Sequence[int]) -> IntMatrix:
    """Companion matrix of ``c_n = a_1 c_{n-1} + ... + a_L c_{n-L}``."""
    L = len(coeffs)
    rows = [tuple(coeffs)]
    for i in range(1, L):
        rows.append(tuple(int(j == i - 1) for j in range(L)))
    return IntMatrix.of(rows)

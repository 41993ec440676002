"""Periodic orbits of toral endomorphisms ``x -> A x mod 1`` and their Fourier certificates.

For a period ``N`` the points with ``(A**N - I) x = 0 mod 1`` are
``adj(A**N - I) l / q_N`` with ``q_N = det(A**N - I)`` and ``l`` integral.
Splitting ``q_N = h_N r_N`` against the primes of ``det B`` gives an
``m_N`` with ``h_N B**m_N = h_N I mod q_N``, so the coefficient of the
orbit measure at ``(h_N, ..., h_N)`` is unchanged by ``B**(s m_N)``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, SingularError
from .exactint import (
    IntMatrix,
    charpoly,
    factorize,
    mat_adjugate,
    mat_det,
    mat_order_mod,
    mat_pow,
    mat_pow_mod,
    split_by_primes,
)
from .measures1d import ExactResidues, FourierValue, _exact_value, choose_rho, zero_test
from .sequences import dec, fact32_excluded_periods

MAX_DIM = 8
DEFAULT_TOL = 1e-9

# ------------------------------------------------------------------ polynomials over Q
# Coefficient lists, constant term first.


def _trim(P: list[Fraction]) -> list[Fraction]:
    while P and P[-1] == 0:
        P.pop()
    return P


def _poly_rem(P: list[Fraction], D: list[Fraction]) -> list[Fraction]:
    P = list(P)
    while len(P) >= len(D) and P:
        c = P[-1] / D[-1]
        shift = len(P) - len(D)
        for i, d in enumerate(D):
            P[shift + i] -= c * d
        _trim(P)
    return P


def _poly_gcd(P: list[Fraction], Q: list[Fraction]) -> list[Fraction]:
    P, Q = _trim(list(P)), _trim(list(Q))
    while Q:
        P, Q = Q, _poly_rem(P, Q)
    return [c / P[-1] for c in P] if P else P


def _charpoly_q(A: IntMatrix) -> list[Fraction]:
    return [Fraction(c) for c in reversed(charpoly(A))]


# Every cyclotomic polynomial of degree <= 8 divides x**k - 1 for some k <= 30.
_CYCLOTOMIC_K = 30


def has_root_of_unity_eigenvalue(A: IntMatrix) -> bool:
    """Exact test: does the characteristic polynomial share a factor with some ``x**k - 1``?"""
    P = _charpoly_q(A)
    for k in range(1, max(_CYCLOTOMIC_K, 2 * A.dim * A.dim) + 1):
        xk = [Fraction(-1)] + [Fraction(0)] * (k - 1) + [Fraction(1)]
        if len(_poly_gcd(P, xk)) > 1:
            return True
    return False


@dataclass(frozen=True)
class AssumptionACheck:
    eigen_moduli: tuple[float, ...]
    squarefree_charpoly: bool
    verdict: str  # "pass" | "fail" | "indeterminate"
    reason: str


def assumption_a_check(A: IntMatrix, tol: float = DEFAULT_TOL) -> AssumptionACheck:
    """Diagonalizable with no eigenvalue of modulus 1?

    A squarefree characteristic polynomial certifies diagonalizability.
    Root-of-unity eigenvalues are excluded exactly; other moduli numerically.
    """
    if A.dim > MAX_DIM:
        raise DomainError(f"dimension {A.dim} exceeds {MAX_DIM}")
    P = _charpoly_q(A)
    dP = [i * c for i, c in enumerate(P)][1:]
    squarefree = len(_poly_gcd(P, dP)) <= 1
    eig = np.linalg.eigvals(np.array(A.rows, dtype=float))
    moduli = tuple(sorted(float(abs(z)) for z in eig))
    if has_root_of_unity_eigenvalue(A):
        return AssumptionACheck(moduli, squarefree, "fail", "an eigenvalue is a root of unity")
    if not squarefree:
        return AssumptionACheck(moduli, squarefree, "indeterminate", "characteristic polynomial has a repeated factor")
    if min(abs(m - 1) for m in moduli) <= tol:
        return AssumptionACheck(moduli, squarefree, "indeterminate", "an eigenvalue modulus is within tolerance of 1")
    return AssumptionACheck(moduli, squarefree, "pass", "diagonalizable, no eigenvalue on the unit circle")


# ------------------------------------------------------------------ period selection


@dataclass(frozen=True)
class Lemma411Result:
    primes: tuple[int, ...]
    gamma: int
    orders: tuple[int, ...]
    n0: int
    first_members: tuple[int, ...]

    def __contains__(self, N: int) -> bool:
        return N >= 1 and (N - 1) % self.n0 == 0


def det_power_minus_identity(A: IntMatrix, N: int) -> int:
    """``det(A**N - I)``."""
    return mat_det(mat_pow(A, N) - IntMatrix.identity(A.dim))


def lemma411_periods(A: IntMatrix, primes: Sequence[int], count: int = 5) -> Lemma411Result:
    """Periods ``N = n0 k + 1`` on which no ``p_i**gamma`` divides ``det(A**N - I)``."""
    detA = mat_det(A)
    if detA == 0:
        raise PreconditionError("hypothesis det A != 0 fails")
    d1 = det_power_minus_identity(A, 1)
    if d1 == 0:
        raise PreconditionError("hypothesis det(A - I) != 0 fails")
    primes = tuple(sorted(set(primes)))
    for q in primes:
        if detA % q == 0:
            raise PreconditionError(f"hypothesis gcd(p_i, det A) = 1 fails for p_i = {q}")
    gamma = 1
    while any(d1 % q**gamma == 0 for q in primes):
        gamma += 1
    orders = tuple(mat_order_mod(A, q**gamma) for q in primes)
    n0 = math.prod(orders)
    members = tuple(n0 * k + 1 for k in range(count))
    for N in members:
        dN = det_power_minus_identity(A, N)
        for q in primes:
            if dN % q**gamma == 0:
                raise AssertionError(f"p^gamma divides det(A^N - I) at N={N}")
    return Lemma411Result(primes, gamma, orders, n0, members)


@dataclass(frozen=True)
class SplitWitness:
    N: int
    q_N: int
    h_N: int
    r_N: int
    m_N: int
    h0: int
    path: str  # "unimodular" | "b" | "b_prime" | "none"
    primes: tuple[int, ...]
    valuations: tuple[int, ...]
    gamma: int | None
    within_bound: bool | None


def _path(A: IntMatrix, B: IntMatrix) -> str:
    detA, detB = mat_det(A), mat_det(B)
    if abs(detB) == 1:
        return "unimodular"
    if math.gcd(detA, detB) == 1:
        return "b"
    if A.is_triangular():
        return "b_prime"
    return "none"


@dataclass(frozen=True)
class EvenConstruction:
    """Period set for triangular ``A`` built from the diagonal entries."""

    primes: tuple[int, ...]
    gamma0: int
    gamma: int
    periods: tuple[int, ...]

    def __contains__(self, M: int) -> bool:
        return M >= 1 and all((2 * M) % n != 0 for n in self.periods)


def even_construction(A: IntMatrix, primes: Sequence[int]) -> EvenConstruction:
    diag = [A.rows[i][i] for i in range(A.dim)]
    if any(abs(a) < 2 for a in diag):
        raise PreconditionError("a diagonal entry of modulus <= 1 contradicts the eigenvalue hypothesis")
    gammas, periods = [], []
    for a in diag:
        g = 1
        while any((abs(a) ** v - 1) % q**g == 0 for q in primes for v in (1, 2)):
            g += 1
        gammas.append(g)
        for ep in fact32_excluded_periods(abs(a), primes, 2, g):
            if ep.period is not None:
                periods.append(ep.period)
    g0 = max(gammas)
    return EvenConstruction(tuple(primes), g0, A.dim * g0, tuple(periods))


def _gamma_for(A: IntMatrix, path: str, primes: tuple[int, ...]) -> int | None:
    if path == "b":
        return lemma411_periods(A, primes, count=1).gamma
    if path == "b_prime":
        return even_construction(A, primes).gamma
    return None


def fact412_split(A: IntMatrix, B: IntMatrix, N: int, tol: float = DEFAULT_TOL) -> SplitWitness:
    """Split ``q_N = det(A**N - I)`` against the primes of ``det B`` and find ``m_N``."""
    if N < 1:
        raise DomainError("N must be positive")
    if A.dim != B.dim:
        raise DomainError("A and B must have the same dimension")
    check = assumption_a_check(A, tol)
    if check.verdict != "pass":
        raise PreconditionError(f"eigenvalue hypothesis on A not certified: {check.reason}")
    detB = mat_det(B)
    if detB == 0:
        raise PreconditionError("hypothesis det B != 0 fails")
    path = _path(A, B)
    q = det_power_minus_identity(A, N)
    if q == 0:
        raise SingularError(f"det(A^{N} - I) = 0")
    if path == "unimodular":
        primes: tuple[int, ...] = ()
        h, r, vals = (1 if q > 0 else -1), abs(q), ()
    else:
        primes = factorize(abs(detB)).primes
        split = split_by_primes(q, primes)
        h, r, vals = split.h, split.r, split.valuations
    if math.gcd(r, detB) != 1:
        raise AssertionError("r_N shares a prime with det B")
    m = mat_order_mod(B, r)
    gamma = _gamma_for(A, path, primes) if path in ("b", "b_prime") else None
    if path == "unimodular":
        within: bool | None = True
    elif gamma is None:
        within = None
    else:
        within = all(v < gamma for v in vals)
    w = SplitWitness(N, q, h, r, m, h, path, primes, vals, gamma, within)
    _check_split(B, w)
    return w


def _check_split(B: IntMatrix, w: SplitWitness) -> None:
    if w.h_N * w.r_N != w.q_N:
        raise AssertionError("q_N != h_N r_N")
    if w.r_N > 1 and mat_pow_mod(B, w.m_N, w.r_N) != IntMatrix.identity(B.dim).mod(w.r_N):
        raise AssertionError("B^m_N is not I mod r_N")
    M = abs(w.q_N)
    if M > 1:
        lhs = mat_pow_mod(B, w.m_N, M).scale(w.h_N).mod(M)
        if lhs != IntMatrix.identity(B.dim).scale(w.h_N).mod(M):
            raise AssertionError("h_N B^m_N is not h_N I mod q_N")


def fact412_indices(A: IntMatrix, B: IntMatrix, count: int, mode: str = "scan", scan_limit: int = 10_000) -> dict[str, Any]:
    """First ``count`` periods with bounded valuations, by hypothesis path.

    ``mode`` only matters for triangular ``A`` sharing primes with ``det B``:
    "scan" accepts every ``N`` whose valuations stay below ``gamma``; "even"
    uses the explicit diagonal construction.
    """
    if mode not in ("scan", "even"):
        raise DomainError("mode must be 'scan' or 'even'")
    path = _path(A, B)
    if path == "unimodular":
        return {"path": path, "gamma": None, "N": list(range(1, count + 1))}
    primes = factorize(abs(mat_det(B))).primes
    if path == "b":
        res = lemma411_periods(A, primes, count)
        return {"path": path, "gamma": res.gamma, "N": list(res.first_members)}
    if path == "none":
        raise PreconditionError("neither coprime determinants nor triangular A: no period construction")
    ec = even_construction(A, primes)
    out = []
    N = 0
    while len(out) < count:
        N += 1
        if N > scan_limit:
            raise DomainError(f"fewer than {count} periods below {scan_limit}")
        if mode == "even":
            if N in ec:
                out.append(N)
            continue
        q = det_power_minus_identity(A, N)
        if q != 0 and all(q % p**ec.gamma != 0 for p in primes):
            out.append(N)
    return {"path": path, "gamma": ec.gamma, "N": out}


# ------------------------------------------------------------------ periodic points


@dataclass(frozen=True)
class RationalTorusPoint:
    """Point of the torus with rational coordinates in [0, 1)."""

    coords: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        c = tuple(Fraction(x) % 1 for x in self.coords)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def denominator(self) -> int:
        Q = 1
        for x in self.coords:
            Q = Q * x.denominator // math.gcd(Q, x.denominator)
        return Q

    def numerators(self) -> tuple[int, ...]:
        Q = self.denominator
        return tuple(int(x * Q) for x in self.coords)

    def image(self, M: IntMatrix) -> "RationalTorusPoint":
        return RationalTorusPoint(tuple(sum((a * x for a, x in zip(row, self.coords)), Fraction(0)) for row in M.rows))


def _is_integral(v: Sequence[Fraction]) -> bool:
    return all(Fraction(x).denominator == 1 for x in v)


def default_lattice_vector(d: int, N: int) -> tuple[int, ...]:
    """Standard basis vector ``e_{(N-1) mod d}``."""
    return tuple(int(i == (N - 1) % d) for i in range(d))


def periodic_point(A: IntMatrix, N: int, l: Sequence[int] | None = None) -> RationalTorusPoint:
    """``adj(A**N - I) l / det(A**N - I)`` reduced mod 1."""
    if l is None:
        l = default_lattice_vector(A.dim, N)
    if len(l) != A.dim:
        raise DomainError("lattice vector has the wrong dimension")
    C = mat_pow(A, N) - IntMatrix.identity(A.dim)
    q = mat_det(C)
    if q == 0:
        raise SingularError(f"det(A^{N} - I) = 0; the eigenvalue hypothesis fails")
    v = mat_adjugate(C).apply(l)
    x = RationalTorusPoint(tuple(Fraction(c, q) for c in v))
    if not _is_integral(C.apply(x.coords)):
        raise AssertionError("constructed point is not N-periodic")
    return x


@dataclass(frozen=True)
class ToralCOMeasure:
    """Uniform mass ``1/N`` on ``A**j x``, ``j < N``."""

    A: IntMatrix
    N: int
    x: RationalTorusPoint

    def __post_init__(self) -> None:
        if self.N < 1 or self.x.dim != self.A.dim:
            raise DomainError("bad orbit measure data")
        back = self.x.image(mat_pow(self.A, self.N))
        if back != self.x:
            raise DomainError("x is not fixed by A^N mod 1")

    def orbit(self) -> list[RationalTorusPoint]:
        pts = [self.x]
        for _ in range(self.N - 1):
            pts.append(pts[-1].image(self.A))
        return pts

    def max_atom_mass(self) -> Fraction:
        return Fraction(max(Counter(self.orbit()).values()), self.N)


def toral_fourier(mu: ToralCOMeasure, n: Sequence[int]) -> FourierValue:
    """Coefficient at the integer vector ``n``: exact residues ``<n, A**j x> mod 1``."""
    if len(n) != mu.A.dim:
        raise DomainError("frequency vector has the wrong dimension")
    Q = mu.x.denominator
    w = Fraction(1, mu.N)
    pairs = []
    for y in mu.orbit():
        s = sum((ni * c for ni, c in zip(n, y.coords)), Fraction(0))
        pairs.append((int(s * Q), w))
    return _exact_value(ExactResidues.build(Q, pairs))


def toral_mixture_fourier(weights: Sequence[Fraction], measures: Sequence[ToralCOMeasure], n: Sequence[int]) -> FourierValue:
    """Affine combination of orbit-measure coefficients."""
    weights = [Fraction(w) for w in weights]
    if len(weights) != len(measures) or sum(weights) != 1 or any(w <= 0 for w in weights):
        raise DomainError("weights must be positive, sum to 1, one per measure")
    parts = [toral_fourier(m, n) for m in measures]
    D = 1
    for v in parts:
        D = D * v.exact.modulus // math.gcd(D, v.exact.modulus)
    pairs = ((r, w * wt) for v, wt in zip(parts, weights) for r, w in v.exact.lift(D).terms)
    return _exact_value(ExactResidues.build(D, pairs))


# ------------------------------------------------------------------ certificates


@dataclass(frozen=True)
class ToralCertificate:
    A: IntMatrix
    B: IntMatrix
    N: int
    l: tuple[int, ...]
    split: SplitWitness
    x: RationalTorusPoint
    l_max: int
    fourier_at_h0: FourierValue
    rho: Fraction | None
    status: str  # "certified" | "certified_with_perturbation" | "refuted"
    failure: tuple[int, int] | None = None


def _congruence_failure(A, B, N, x, h, m, l_max) -> tuple[int, int] | None:
    """First ``(j, s)`` where ``h B**(s m) A**j x != h A**j x mod 1``."""
    Aj_x = [x.coords]
    for _ in range(N - 1):
        Aj_x.append(A.apply(Aj_x[-1]))
    for s in range(1, l_max + 1):
        Bs = mat_pow(B, s * m)
        for j, y in enumerate(Aj_x):
            diff = [h * (u - v) for u, v in zip(Bs.apply(y), y)]
            if not _is_integral(diff):
                return (j, s)
    return None


def fact413_certify(
    A: IntMatrix, B: IntMatrix, N: int, l: Sequence[int] | None = None, l_max: int = 10
) -> ToralCertificate:
    """Check ``h_N B**(s m_N) A**j x = h_N A**j x mod 1`` for ``j < N``, ``1 <= s <= l_max``."""
    if l_max < 1:
        raise DomainError("l_max must be positive")
    if l is None:
        l = default_lattice_vector(A.dim, N)
    l = tuple(int(v) for v in l)
    split = fact412_split(A, B, N)
    x = periodic_point(A, N, l)
    mu = ToralCOMeasure(A, N, x)
    h0 = (split.h_N,) * A.dim
    value = toral_fourier(mu, h0)
    fail = _congruence_failure(A, B, N, x, split.h_N, split.m_N, l_max)
    rho = None
    if fail is not None:
        status = "refuted"
    elif zero_test(value) == "nonzero":
        status = "certified"
    else:
        rho = choose_rho(value.approx)
        r = float(rho)
        value = FourierValue(r + (1 - r) * value.approx, value.error_bound + 4 * 2.0**-52, None)
        status = "certified_with_perturbation"
    return ToralCertificate(A, B, N, l, split, x, l_max, value, rho, status, fail)


def _mat_json(M: IntMatrix) -> list[list[str]]:
    return [[str(v) for v in row] for row in M.rows]


def _mat_parse(rows: Any) -> IntMatrix:
    return IntMatrix.of([[dec(v) for v in row] for row in rows])


def toral_certificate_to_json(c: ToralCertificate) -> dict[str, Any]:
    return {
        "type": "toral-certificate",
        "A": _mat_json(c.A),
        "B": _mat_json(c.B),
        "N": str(c.N),
        "l": [str(v) for v in c.l],
        "q_N": str(c.split.q_N),
        "h_N": str(c.split.h_N),
        "r_N": str(c.split.r_N),
        "m_N": str(c.split.m_N),
        "path": c.split.path,
        "x": {"denominator": str(c.x.denominator), "numerators": [str(v) for v in c.x.numerators()]},
        "checked": {"l_max": str(c.l_max), "j": str(c.N)},
        "fourier_at_h0": {"re": repr(c.fourier_at_h0.approx.real), "im": repr(c.fourier_at_h0.approx.imag)},
        "rho": None if c.rho is None else f"{c.rho.numerator}/{c.rho.denominator}",
        "status": c.status,
    }


@dataclass(frozen=True)
class ToralVerification:
    status: str  # "verified" | "refuted"
    reason: str


def verify_toral_certificate(obj: dict[str, Any]) -> ToralVerification:
    """Recompute every congruence of a toral certificate document from scratch."""
    bad = lambda why: ToralVerification("refuted", why)  # noqa: E731
    try:
        A, B = _mat_parse(obj["A"]), _mat_parse(obj["B"])
        N = dec(obj["N"])
        l = tuple(dec(v) for v in obj["l"])
        q, h, r, m = (dec(obj[k]) for k in ("q_N", "h_N", "r_N", "m_N"))
        Q = dec(obj["x"]["denominator"])
        nums = [dec(v) for v in obj["x"]["numerators"]]
        l_max = dec(obj["checked"]["l_max"])
        j_count = dec(obj["checked"]["j"])
        fre, fim = float(obj["fourier_at_h0"]["re"]), float(obj["fourier_at_h0"]["im"])
        status = obj["status"]
        rho = None if obj["rho"] is None else Fraction(obj["rho"])
    except (KeyError, TypeError, ValueError, DomainError, ZeroDivisionError) as exc:
        return bad(f"malformed certificate: {exc}")
    if A.dim != B.dim or len(l) != A.dim or len(nums) != A.dim or N < 1 or Q < 1:
        return bad("inconsistent dimensions")
    if status not in ("certified", "certified_with_perturbation"):
        return bad(f"certificate status is {status!r}")
    if j_count != N or l_max < 1:
        return bad("checked ranges do not cover the orbit")
    C = mat_pow(A, N) - IntMatrix.identity(A.dim)
    if mat_det(C) != q or q == 0:
        return bad("q_N is not det(A^N - I)")
    if h * r != q or h == 0 or r < 1:
        return bad("q_N != h_N r_N")
    if math.gcd(r, mat_det(B)) != 1:
        return bad("r_N is not coprime to det B")
    x = RationalTorusPoint(tuple(Fraction(v, Q) for v in nums))
    if x.denominator != Q or x.numerators() != tuple(nums):
        return bad("point is not in canonical form")
    expected = RationalTorusPoint(tuple(Fraction(c, q) for c in mat_adjugate(C).apply(l)))
    if x != expected:
        return bad("point is not adj(A^N - I) l / q_N")
    if not _is_integral(C.apply(x.coords)):
        return bad("point is not N-periodic")
    if m < 1:
        return bad("m_N must be positive")
    M = abs(q)
    if M > 1 and mat_pow_mod(B, m, M).scale(h).mod(M) != IntMatrix.identity(B.dim).scale(h).mod(M):
        return bad("h_N B^m_N is not h_N I mod q_N")
    fail = _congruence_failure(A, B, N, x, h, m, l_max)
    if fail is not None:
        return bad(f"congruence fails at j={fail[0]}, l={fail[1]}")
    mu = ToralCOMeasure(A, N, x)
    value = toral_fourier(mu, (h,) * A.dim).approx
    if rho is not None:
        value = float(rho) + (1 - float(rho)) * value
    if abs(value - complex(fre, fim)) > 1e-9:
        return bad("reported Fourier value does not match")
    if abs(value) <= 1e-9:
        return bad("Fourier value at h0 vanishes")
    return ToralVerification("verified", "all congruences hold")

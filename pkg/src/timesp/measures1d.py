"""Measures on the circle R/Z with exact or error-bounded Fourier coefficients.

Leaves are orbit measures of ``x -> p x`` on a periodic orbit, ``p``-Bernoulli
measures and rational Dirac masses; internal nodes are convex mixtures and
convolutions.  Purely atomic expressions keep an exact weighted residue map
``{r: w}`` meaning ``sum w * exp(2 pi i r / modulus)``.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Sequence, Union

from .errors import DomainError, PreconditionError
from .exactint import factorize
from .sequences import HCertificate, eval_mod, verify_certificate

DEFAULT_EPSILON = 1e-12
ZERO_THRESHOLD = 1e-9
_EPS = 2.0**-52
# Exact convolution is abandoned beyond this many residue terms.
MAX_EXACT_TERMS = 1 << 20


def _frac(x: Any) -> Fraction:
    if isinstance(x, float):
        raise DomainError("use exact rationals, not floats")
    return Fraction(x)


# ------------------------------------------------------------------ leaves


@dataclass(frozen=True)
class COMeasure:
    """Uniform mass ``1/N`` on ``m p**j / (p**N - 1)`` for ``j < N``."""

    p: int
    N: int
    m: int

    def __post_init__(self) -> None:
        if self.p < 2 or self.N < 1:
            raise DomainError("need p >= 2 and N >= 1")
        if not 0 <= self.m < max(1, self.modulus):
            raise DomainError(f"m must lie in [0, p^N - 1), got {self.m}")

    @property
    def modulus(self) -> int:
        return self.p**self.N - 1

    def orbit(self) -> list[int]:
        M = self.modulus
        if M == 1:
            return [0] * self.N
        return [self.m * pow(self.p, j, M) % M for j in range(self.N)]


@dataclass(frozen=True)
class BernoulliMeasure:
    """Law of ``sum d_n p**-n`` with i.i.d. digits ``P(d = j) = theta[j]``."""

    p: int
    theta: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        th = tuple(_frac(t) for t in self.theta)
        object.__setattr__(self, "theta", th)
        if self.p < 2 or len(th) != self.p:
            raise DomainError("theta must have exactly p entries")
        if any(t <= 0 for t in th) or sum(th) != 1:
            raise DomainError("theta entries must be positive and sum to 1")

    @property
    def uniform(self) -> bool:
        return len(set(self.theta)) == 1


@dataclass(frozen=True)
class Dirac:
    """Unit mass at a rational point of [0, 1)."""

    point: Fraction

    def __post_init__(self) -> None:
        x = _frac(self.point)
        if not 0 <= x < 1:
            raise DomainError("Dirac point must lie in [0, 1)")
        object.__setattr__(self, "point", x)


@dataclass(frozen=True)
class Mixture:
    weights: tuple[Fraction, ...]
    children: tuple["MeasureExpr", ...]

    def __post_init__(self) -> None:
        w = tuple(_frac(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "children", tuple(self.children))
        if len(w) != len(self.children) or not w:
            raise DomainError("mixture needs one weight per child")
        if any(x <= 0 for x in w) or sum(w) != 1:
            raise DomainError("mixture weights must be positive and sum to 1")


@dataclass(frozen=True)
class Convolution:
    children: tuple["MeasureExpr", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise DomainError("convolution needs at least one factor")


MeasureExpr = Union[COMeasure, BernoulliMeasure, Dirac, Mixture, Convolution]


def perturb_with_origin(expr: MeasureExpr, rho: Fraction) -> Mixture:
    """``rho * delta_0 + (1 - rho) * expr``."""
    rho = _frac(rho)
    if not 0 < rho < 1:
        raise DomainError("rho must lie in (0, 1)")
    return Mixture((rho, 1 - rho), (Dirac(Fraction(0)), expr))


def leaf_bases(expr: MeasureExpr) -> set[int]:
    if isinstance(expr, (COMeasure, BernoulliMeasure)):
        return {expr.p}
    if isinstance(expr, Dirac):
        return set()
    out: set[int] = set()
    for c in expr.children:
        out |= leaf_bases(c)
    return out


# ------------------------------------------------------------------ Fourier values


@dataclass(frozen=True)
class ExactResidues:
    """The value ``sum w * e(r / modulus)``, stored merged and sorted by residue."""

    modulus: int
    terms: tuple[tuple[int, Fraction], ...]

    @classmethod
    def build(cls, modulus: int, pairs: Iterable[tuple[int, Fraction]]) -> "ExactResidues":
        acc: dict[int, Fraction] = {}
        for r, w in pairs:
            r %= modulus
            acc[r] = acc.get(r, Fraction(0)) + w
        return cls(modulus, tuple(sorted((r, w) for r, w in acc.items() if w)))

    def lift(self, modulus: int) -> "ExactResidues":
        k = modulus // self.modulus
        return ExactResidues(modulus, tuple((r * k, w) for r, w in self.terms))

    def residues(self) -> set[int]:
        return {r for r, _ in self.terms}

    def multiset(self) -> list[int]:
        """Residues repeated proportionally to their weight (smallest common count)."""
        den = 1
        for _, w in self.terms:
            den = den * w.denominator // math.gcd(den, w.denominator)
        out = []
        for r, w in self.terms:
            out.extend([r] * int(w * den))
        return out

    def numeric(self) -> complex:
        M = self.modulus
        return sum((float(w) * cmath.exp(2j * math.pi * (r / M)) for r, w in self.terms), 0j)


@dataclass(frozen=True)
class FourierValue:
    approx: complex
    error_bound: float
    exact: ExactResidues | None = None

    @property
    def abs(self) -> float:
        return abs(self.approx)


def _exact_value(ex: ExactResidues) -> FourierValue:
    err = 8 * _EPS * max(1, len(ex.terms))
    return FourierValue(ex.numeric(), err, ex)


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


@lru_cache(maxsize=1 << 16)
def _bernoulli_fourier(mu: BernoulliMeasure, a: int, eps: float) -> FourierValue:
    if a == 0:
        return FourierValue(1 + 0j, 0.0, ExactResidues(1, ((0, Fraction(1)),)))
    if mu.uniform:
        # The factor at level v_p(a) + 1 is a full sum of p-th roots of unity.
        return FourierValue(0j, 0.0)
    p = mu.p
    th = [float(t) for t in mu.theta]
    # Truncation: sum_{n > n_max} |f_n - 1| <= 2 pi |a| p**-n_max. Pick n_max so
    # truncation plus rounding stays within eps whenever rounding alone allows it.
    trunc_at = lambda n: 2 * math.pi * abs(a) * float(p) ** -n  # noqa: E731
    round_at = lambda n: 16 * _EPS * p * n  # noqa: E731
    n_max = max(1, math.ceil(math.log(4 * math.pi * abs(a) / eps, p)))
    while trunc_at(n_max) > eps / 2 or (
        trunc_at(n_max) + round_at(n_max) > eps and round_at(n_max + 1) < eps
    ):
        n_max += 1
    prod = 1 + 0j
    pn = 1
    for _ in range(n_max):
        pn *= p
        r = a % pn
        if r == 0:
            continue
        f = th[0] + 0j
        for j in range(1, p):
            f += th[j] * cmath.exp(2j * math.pi * ((r * j % pn) / pn))
        prod *= f
    return FourierValue(prod, trunc_at(n_max) + round_at(n_max))


def fourier(expr: MeasureExpr, a: int, eps: float = DEFAULT_EPSILON) -> FourierValue:
    """Fourier coefficient ``integral e(a x) d expr(x)`` for an integer frequency ``a``."""
    if isinstance(expr, COMeasure):
        M = expr.modulus
        w = Fraction(1, expr.N)
        if M == 1:
            return _exact_value(ExactResidues(1, ((0, Fraction(1)),)))
        am = a * expr.m % M
        return _exact_value(ExactResidues.build(M, ((am * pow(expr.p, j, M), w) for j in range(expr.N))))
    if isinstance(expr, Dirac):
        x = expr.point
        return _exact_value(ExactResidues.build(x.denominator, [(a * x.numerator, Fraction(1))]))
    if isinstance(expr, BernoulliMeasure):
        return _bernoulli_fourier(expr, a, eps)
    parts = [fourier(c, a, eps) for c in expr.children]
    if isinstance(expr, Mixture):
        if all(v.exact is not None for v in parts):
            D = 1
            for v in parts:
                D = _lcm(D, v.exact.modulus)
            pairs = (
                (r, w * wt)
                for v, wt in zip(parts, expr.weights)
                for r, w in v.exact.lift(D).terms
            )
            return _exact_value(ExactResidues.build(D, pairs))
        approx = sum((float(w) * v.approx for w, v in zip(expr.weights, parts)), 0j)
        err = sum(float(w) * v.error_bound for w, v in zip(expr.weights, parts)) + 4 * _EPS
        return FourierValue(approx, err)
    if isinstance(expr, Convolution):
        if all(v.exact is not None for v in parts):
            size = 1
            for v in parts:
                size *= len(v.exact.terms)
            if size <= MAX_EXACT_TERMS:
                D = 1
                for v in parts:
                    D = _lcm(D, v.exact.modulus)
                acc = ExactResidues(D, ((0, Fraction(1)),))
                for v in parts:
                    lifted = v.exact.lift(D)
                    acc = ExactResidues.build(
                        D, ((r1 + r2, w1 * w2) for r1, w1 in acc.terms for r2, w2 in lifted.terms)
                    )
                return _exact_value(acc)
        approx = 1 + 0j
        upper = 1.0
        lower = 1.0
        for v in parts:
            approx *= v.approx
            upper *= abs(v.approx) + v.error_bound
            lower *= abs(v.approx)
        return FourierValue(approx, upper - lower + 4 * _EPS * len(parts))
    raise DomainError(f"unknown measure expression {expr!r}")


# ------------------------------------------------------------------ invariance


@dataclass(frozen=True)
class InvarianceReport:
    p: int
    a_max: int
    invariant: bool
    exact: bool
    witness_a: int | None
    max_deviation: float


def check_invariance(expr: MeasureExpr, a_max: int, p: int | None = None) -> InvarianceReport:
    """Test ``fourier(p a) == fourier(a)`` for ``|a| <= a_max``."""
    if p is None:
        bases = leaf_bases(expr)
        if len(bases) != 1:
            raise DomainError("pass p explicitly: the expression has no single base")
        (p,) = bases
    all_exact = True
    worst = 0.0
    for a in range(-a_max, a_max + 1):
        u, v = fourier(expr, a), fourier(expr, p * a)
        dev = abs(u.approx - v.approx)
        worst = max(worst, dev)
        if u.exact is not None and v.exact is not None:
            D = _lcm(u.exact.modulus, v.exact.modulus)
            same = u.exact.lift(D) == v.exact.lift(D)
        else:
            all_exact = False
            same = dev <= 2 * (u.error_bound + v.error_bound)
        if not same:
            return InvarianceReport(p, a_max, False, all_exact, a, worst)
    return InvarianceReport(p, a_max, True, all_exact, None, worst)


# ------------------------------------------------------------------ exact zero test


def zero_test(value: FourierValue) -> str:
    """Classify a Fourier value as "nonzero", "zero" or "undecided".

    An exact value is certified zero when its weighted residues peel off,
    greedily, as uniform masses on cosets of prime-order subgroups; each
    such coset sums to zero.
    """
    if value.abs - value.error_bound > ZERO_THRESHOLD:
        return "nonzero"
    if value.exact is None:
        return "undecided"
    ex = value.exact
    M = ex.modulus
    if M == 1:
        return "nonzero"
    primes = factorize(M).primes
    weights = dict(ex.terms)
    while weights:
        r = min(weights)
        for ell in primes:
            step = M // ell
            coset = [(r + i * step) % M for i in range(ell)]
            if all(weights.get(c, 0) > 0 for c in coset):
                w = min(weights[c] for c in coset)
                for c in coset:
                    weights[c] -= w
                    if weights[c] == 0:
                        del weights[c]
                break
        else:
            return "undecided"
    return "zero"


# ------------------------------------------------------------------ witness builder


@dataclass(frozen=True)
class WitnessReport:
    p: int
    N: int
    modulus: int
    h: int
    t_value: int
    expr: MeasureExpr
    rho: Fraction | None
    zero_test: str
    fourier_at_t: FourierValue
    lower_bound: float
    gamma: Fraction
    checked_ks: int


def choose_rho(value: complex) -> Fraction:
    """First ``rho`` in (1/4, 1/2) with ``|rho + (1 - rho) value| >= rho / 2``."""
    for rho in (Fraction(1, 4), Fraction(1, 2)):
        r = float(rho)
        if abs(r + (1 - r) * value) >= r / 2:
            return rho
    raise AssertionError("both perturbation weights cancel, which is impossible")


def build_witness(
    p: int,
    cert: HCertificate,
    witness_index: int = 0,
    gamma: Fraction = Fraction(1, 2),
    checked_ks: int = 100,
) -> WitnessReport:
    """Atomic invariant measure whose coefficients along ``h c_n`` stay at ``|mu(t)| > 0``.

    Starts from the orbit measure ``CO(p, N, 1)``; if its coefficient at
    ``t`` is not certified nonzero, mixes in a mass ``rho`` at the origin.
    Then rechecks exact equality of the coefficient at ``h c_n`` and at ``t``
    for the first ``checked_ks`` indices of the witness progression.
    """
    gamma = _frac(gamma)
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")
    if cert.p != p:
        raise PreconditionError(f"certificate is for p={cert.p}, not {p}")
    if not 0 <= witness_index < len(cert.witnesses):
        raise DomainError(f"witness index {witness_index} out of range")
    report = verify_certificate(cert, k_max=min(checked_ks, 20) or 1)
    if not report.ok:
        raise PreconditionError(f"certificate does not verify: {report.reason}")
    w = cert.witnesses[witness_index]
    t, h = cert.witness_t(w), cert.witness_h(w)
    mu = COMeasure(p, w.N, 1)
    base = fourier(mu, t)
    verdict = zero_test(base)
    rho = None
    expr: MeasureExpr = mu
    if verdict != "nonzero":
        rho = choose_rho(base.approx)
        expr = perturb_with_origin(mu, rho)
    at_t = fourier(expr, t)
    D = at_t.exact.modulus
    for k in range(checked_ks):
        n = w.n_progression.nth(k)
        # Exact coefficients of an atomic measure only see a mod D.
        a_k = h * eval_mod(cert.spec, n, D) if D >= 2 else 0
        if fourier(expr, a_k).exact != at_t.exact:
            raise AssertionError(f"coefficient along the progression changed at k={k}")
    return WitnessReport(
        p, w.N, w.modulus, h, t, expr, rho, verdict, at_t,
        max(0.0, at_t.abs - at_t.error_bound), gamma, checked_ks,
    )


# ------------------------------------------------------------------ long-period approximation


@dataclass(frozen=True)
class ApproxReport:
    source: COMeasure
    approx: COMeasure
    buffer: int
    digits: str
    per_j_bound: float
    j_limit: int

    def integral_bound(self, lipschitz: float, sup_norm: float) -> float:
        """Bound on the gap of integrals of ``f``.

        ``lipschitz`` is the Lipschitz constant of ``f`` on the unit circle in
        the chord metric; ``sup_norm`` its sup norm.
        """
        N, Nk = self.source.N, self.approx.N
        return 2 * math.pi * lipschitz * self.per_j_bound + 2 * sup_norm * (self.buffer + N) / Nk


def _digits(m: int, p: int, width: int) -> list[int]:
    out = []
    for _ in range(width):
        m, d = divmod(m, p)
        out.append(d)
    return out[::-1]


def approximate_longer_period(mu: COMeasure, N_k: int, buffer: int) -> ApproxReport:
    """Period-``N_k`` orbit measure following the orbit of ``m / (p**N - 1)``.

    The new point repeats the first ``N_k`` base-``p`` digits of the old one.
    """
    if buffer < 1:
        raise DomainError("buffer must be positive")
    if N_k < mu.N + buffer + 1:
        raise PreconditionError(f"N_k={N_k} must be at least N + buffer + 1 = {mu.N + buffer + 1}")
    p = mu.p
    block = _digits(mu.m, p, mu.N)
    prefix = [block[i % mu.N] for i in range(N_k)]
    m2 = 0
    for d in prefix:
        m2 = m2 * p + d
    approx = COMeasure(p, N_k, m2)
    return ApproxReport(mu, approx, buffer, "".join(str(d) for d in prefix), float(p) ** (1 - buffer), N_k - buffer)


def circle_distance(x: Fraction, y: Fraction) -> Fraction:
    d = (x - y) % 1
    return min(d, 1 - d)


def orbit_point(mu: COMeasure, j: int) -> Fraction:
    """``T_p**j`` of the base point, as an exact rational."""
    M = mu.modulus
    if M == 1:
        return Fraction(0)
    return Fraction(mu.m * pow(mu.p, j, M) % M, M)


@dataclass(frozen=True)
class WeakStarDistance:
    value: float
    tail_bound: float
    a_max: int

    def __float__(self) -> float:
        return self.value


def weakstar_distance(e1: MeasureExpr, e2: MeasureExpr, a_max: int) -> WeakStarDistance:
    """``sum_{0 < |a| <= a_max} 2**-|a| |e1(a) - e2(a)|``; the tail adds at most ``4 * 2**-a_max``."""
    if a_max < 1:
        raise DomainError("a_max must be positive")
    total = 0.0
    for a in range(1, a_max + 1):
        for s in (a, -a):
            total += 2.0**-a * abs(fourier(e1, s).approx - fourier(e2, s).approx)
    return WeakStarDistance(total, 4 * 2.0**-a_max, a_max)


def max_atom_mass(mu: COMeasure) -> Fraction:
    """Largest point mass of an orbit measure."""
    return Fraction(max(Counter(mu.orbit()).values()), mu.N)


# ------------------------------------------------------------------ serialization


def measure_to_json(expr: MeasureExpr) -> dict[str, Any]:
    if isinstance(expr, COMeasure):
        return {"type": "co", "p": str(expr.p), "N": str(expr.N), "m": str(expr.m)}
    if isinstance(expr, BernoulliMeasure):
        return {"type": "bernoulli", "p": str(expr.p), "theta": [_fstr(t) for t in expr.theta]}
    if isinstance(expr, Dirac):
        return {"type": "dirac", "point": _fstr(expr.point)}
    if isinstance(expr, Mixture):
        return {
            "type": "mixture",
            "weights": [_fstr(w) for w in expr.weights],
            "children": [measure_to_json(c) for c in expr.children],
        }
    return {"type": "convolution", "children": [measure_to_json(c) for c in expr.children]}


def _fstr(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _fparse(s: Any) -> Fraction:
    if not isinstance(s, str):
        raise DomainError(f"expected a rational string, got {s!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"bad rational {s!r}") from exc


def measure_from_json(obj: dict[str, Any]) -> MeasureExpr:
    from .sequences import dec

    kind = obj.get("type")
    if kind == "co":
        return COMeasure(dec(obj["p"]), dec(obj["N"]), dec(obj["m"]))
    if kind == "bernoulli":
        return BernoulliMeasure(dec(obj["p"]), tuple(_fparse(t) for t in obj["theta"]))
    if kind == "dirac":
        return Dirac(_fparse(obj["point"]))
    if kind == "mixture":
        return Mixture(tuple(_fparse(w) for w in obj["weights"]), tuple(measure_from_json(c) for c in obj["children"]))
    if kind == "convolution":
        return Convolution(tuple(measure_from_json(c) for c in obj["children"]))
    raise DomainError(f"unknown measure type {kind!r}")


def parse_measure(text: str) -> MeasureExpr:
    """``co:p,N,m``, ``bernoulli:p:t0,t1,...`` or ``dirac:x``."""
    kind, sep, body = text.partition(":")
    if not sep:
        raise DomainError(f"bad measure {text!r}")
    try:
        if kind == "co":
            p, N, m = (int(x) for x in body.split(","))
            return COMeasure(p, N, m)
        if kind == "bernoulli":
            p, _, th = body.partition(":")
            return BernoulliMeasure(int(p), tuple(Fraction(t) for t in th.split(",")))
        if kind == "dirac":
            return Dirac(Fraction(body))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"bad measure {text!r}: {exc}") from exc
    raise DomainError(f"unknown measure kind {kind!r}")


SWEEP_HEADER = ("a", "re", "im", "abs", "error_bound")


def fourier_sweep(expr: MeasureExpr, a_values: Sequence[int], eps: float = DEFAULT_EPSILON) -> list[tuple]:
    rows = []
    for a in a_values:
        v = fourier(expr, a, eps)
        rows.append((a, v.approx.real, v.approx.imag, v.abs, v.error_bound))
    return rows


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()

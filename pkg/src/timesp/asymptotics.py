"""Digit statistics, Bernoulli Fourier decay, density-one extraction and averages along sequences."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np
from scipy.stats import spearmanr

from .errors import DomainError, HypothesisError
from .measures1d import DEFAULT_EPSILON, BernoulliMeasure, MeasureExpr, fourier
from .sequences import SequenceSpec, eval_exact

# ------------------------------------------------------------------ digits


def to_base(x: int, p: int) -> list[int]:
    """Base-``p`` digits of ``|x|``, most significant first; 0 gives []."""
    if p < 2:
        raise DomainError("base must be >= 2")
    x = abs(x)
    if p == 2:
        return [int(c) for c in format(x, "b")] if x else []
    # Peel off chunks of k digits at a time to keep bignum divisions few.
    k = max(1, int(60 / math.log2(p)))
    pk = p**k
    out: list[int] = []
    while x:
        x, chunk = divmod(x, pk)
        for _ in range(k):
            chunk, d = divmod(chunk, p)
            out.append(d)
    while out and out[-1] == 0:
        out.pop()
    return out[::-1]


@dataclass(frozen=True)
class DigitStats:
    m: int
    p: int
    R0: int
    Rp1: int
    Nmid: int
    psi: int
    R: int


def digit_stats(m: int, p: int) -> DigitStats:
    """Run counts of the base-``p`` expansion of ``|m|`` in one left-to-right pass."""
    digits = to_base(m, p)
    R0 = Rp1 = Nmid = R = 0
    prev = None
    for d in digits:
        if d != prev:
            R += 1
            if d == 0:
                R0 += 1
            elif d == p - 1:
                Rp1 += 1
        if d not in (0, p - 1):
            Nmid += 1
        prev = d
    return DigitStats(m, p, R0, Rp1, Nmid, R0 + Rp1 + Nmid, R)


# ------------------------------------------------------------------ decay scan


def certify_nonvanishing(mu: BernoulliMeasure, grid: int = 1 << 12) -> str:
    """Reason why ``Q(z) = sum theta_j z**j`` has no zero on the unit circle.

    Either ``theta_0 > 1/2`` or a grid minimum that beats the Lipschitz
    bound ``sum j theta_j`` times the half-spacing ``pi / grid``.
    """
    if mu.theta[0] > Fraction(1, 2):
        return "theta_0 > 1/2"
    th = [float(t) for t in mu.theta]
    k = np.arange(grid)
    z = np.exp(2j * np.pi * k / grid)
    Q = np.zeros(grid, dtype=complex)
    for j in reversed(range(len(th))):
        Q = Q * z + th[j]
    lip = sum(j * t for j, t in enumerate(th))
    margin = float(np.min(np.abs(Q))) - lip * math.pi / grid - 1e-12
    if margin > 0:
        return f"grid minimum exceeds Lipschitz bound by {margin:.3g}"
    raise HypothesisError(
        "the digit polynomial is not certified nonvanishing on the unit circle "
        "(needs theta_0 > 1/2 or a positive grid margin)"
    )


DECAY_HEADER = ("m", "psi", "R0", "Rp1", "Nmid", "abs_fourier", "neg_log_ratio")


@dataclass(frozen=True)
class DecayScan:
    p: int
    theta: tuple[Fraction, ...]
    m_lo: int
    m_hi: int
    min_ratio: float
    max_ratio: float
    C1: float
    C2: float
    rank_correlation: float
    certificate: str
    rows: tuple[tuple, ...]


def decay_scan(mu: BernoulliMeasure, m_lo: int, m_hi: int, eps: float = DEFAULT_EPSILON) -> DecayScan:
    """Ratios ``-log|mu(m)| / psi(m)`` over ``m_lo <= m <= m_hi``.

    ``C1``/``C2`` widen the observed bracket by the truncation error of each
    coefficient, so they bound every true ratio in range.
    """
    if m_lo > m_hi:
        raise DomainError("empty range")
    reason = certify_nonvanishing(mu)
    rows = []
    ratios, C1, C2 = [], math.inf, 0.0
    psis, logs = [], []
    for m in range(m_lo, m_hi + 1):
        st = digit_stats(m, mu.p)
        if st.psi < 1:
            continue
        v = fourier(mu, m, eps)
        a = v.abs
        if a - v.error_bound <= 0:
            raise HypothesisError(f"coefficient at m={m} is not certified nonzero")
        ratio = -math.log(a) / st.psi
        ratios.append(ratio)
        C1 = min(C1, -math.log(a + v.error_bound) / st.psi)
        C2 = max(C2, -math.log(a - v.error_bound) / st.psi)
        psis.append(st.psi)
        logs.append(-math.log(a))
        rows.append((m, st.psi, st.R0, st.Rp1, st.Nmid, a, ratio))
    if not ratios:
        raise DomainError("no m in range with psi >= 1")
    rho = float(spearmanr(psis, logs).statistic) if len(psis) > 1 else float("nan")
    return DecayScan(mu.p, mu.theta, m_lo, m_hi, min(ratios), max(ratios), C1, C2, rho, reason, tuple(rows))


# ------------------------------------------------------------------ density-one extraction


@dataclass(frozen=True)
class Scale:
    k: int
    N_k: int
    count: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.count, self.N_k)


@dataclass(frozen=True)
class DensityExtraction:
    D: tuple[int, ...]
    scales: tuple[Scale, ...]
    k_max: int

    @property
    def achieved_k(self) -> int:
        return len(self.scales)

    @property
    def complete(self) -> bool:
        return self.achieved_k == self.k_max


def qualifying(data: np.ndarray, target: np.ndarray, k: int) -> np.ndarray:
    """Row ``i`` (index ``n = i + 1``) is within ``2**-k`` of the target for all ``|a| <= k``."""
    a_cap = (data.shape[1] - 1) // 2
    cols = slice(a_cap - k, a_cap + k + 1)
    return np.all(np.abs(data[:, cols] - target[cols]) < 2.0**-k, axis=1)


def extract_density1(data: Any, target: Any, k_max: int) -> DensityExtraction:
    """Greedy scales ``N_k`` and the index set ``D`` along which ``data`` tends to ``target``.

    ``data[i, c]`` is the coefficient at ``a = c - a_cap`` of the ``(i+1)``-th
    measure. Each ``N_k`` is the smallest integer with ``N_k >= 2**(k-1) N_{k-1}``
    (and ``> N_{k-1}``) whose qualifying fraction reaches ``1 - 2**-k``.
    Running out of rows returns the scales found so far.
    """
    data = np.asarray(data)
    target = np.asarray(target)
    if data.ndim != 2 or data.shape[1] % 2 == 0 or target.shape != (data.shape[1],):
        raise DomainError("data must be L x (2 a_cap + 1) with a matching target row")
    a_cap = (data.shape[1] - 1) // 2
    if not 1 <= k_max <= a_cap:
        raise DomainError(f"k_max must lie in [1, a_cap={a_cap}]")
    L = data.shape[0]
    D: list[int] = []
    scales: list[Scale] = []
    prev = 0
    for k in range(1, k_max + 1):
        ok = qualifying(data, target, k)
        cum = np.concatenate([[0], np.cumsum(ok, dtype=np.int64)])
        lower = 1 if k == 1 else max(prev + 1, 2 ** (k - 1) * prev)
        if lower > L:
            break
        Ns = np.arange(lower, L + 1, dtype=np.int64)
        # Exact integer form of count / N >= 1 - 2**-k.
        good = np.nonzero(cum[Ns] * 2**k >= (2**k - 1) * Ns)[0]
        if good.size == 0:
            break
        N_k = int(Ns[good[0]])
        D.extend(n for n in range(prev + 1, N_k + 1) if ok[n - 1])
        scales.append(Scale(k, N_k, int(cum[N_k])))
        prev = N_k
    return DensityExtraction(tuple(D), tuple(scales), k_max)


def upper_density_estimate(members: Sequence[int], N_max: int, n_windows: int = 8) -> tuple[float, list[tuple[int, int]]]:
    """Max of ``#(members <= N) / N`` over windows ``N = N_max / 2**i``; also returns every count."""
    arr = np.sort(np.asarray(members, dtype=np.int64))
    windows = sorted({max(1, N_max >> i) for i in range(n_windows)})
    counts = [(N, int(np.searchsorted(arr, N, side="right"))) for N in windows]
    return max(c / N for N, c in counts), counts


# ------------------------------------------------------------------ averages and scans along sequences


@dataclass(frozen=True)
class CesaroValue:
    N: int
    value: complex
    error_bound: float


def cesaro_fourier(
    source: MeasureExpr | Sequence[complex], spec: SequenceSpec | None, h: int, N: int, eps: float = DEFAULT_EPSILON
) -> CesaroValue:
    """``(1/N) sum_{n<N} mu(h c_n)``; for plain data, the mean of its first ``N`` entries."""
    return cesaro_sweep(source, spec, h, [N], eps)[0]


def cesaro_sweep(
    source: MeasureExpr | Sequence[complex], spec: SequenceSpec | None, h: int, N_values: Sequence[int],
    eps: float = DEFAULT_EPSILON,
) -> list[CesaroValue]:
    if not N_values or min(N_values) < 1:
        raise DomainError("every N must be positive")
    n_top = max(N_values)
    if isinstance(source, (list, tuple, np.ndarray)):
        if len(source) < n_top:
            raise DomainError("not enough data for the requested N")
        vals = [(complex(v), 0.0) for v in source[:n_top]]
    else:
        if h == 0:
            raise DomainError("h must be nonzero")
        if spec is None:
            raise DomainError("a sequence spec is required")
        vals = []
        for n in range(n_top):
            v = fourier(source, h * eval_exact(spec, n), eps)
            vals.append((v.approx, v.error_bound))
    out = []
    want = set(N_values)
    s, e = 0j, 0.0
    for i, (v, err) in enumerate(vals, start=1):
        s += v
        e += err
        if i in want:
            out.append(CesaroValue(i, s / i, e / i + 4 * 2.0**-52))
    order = {N: i for i, N in enumerate(N_values)}
    return sorted(out, key=lambda c: order[c.N])


CESARO_HEADER = ("N", "avg_re", "avg_im", "avg_abs")


def geometric_average(x: Fraction, N: int) -> complex:
    """Closed form of ``(1/N) sum_{n<N} e(n x)`` for ``x`` not an integer."""
    e = lambda t: cmath.exp(2j * math.pi * float(t % 1))  # noqa: E731
    return (1 - e(N * x)) / (N * (1 - e(x)))


def geometric_average_bound(x: Fraction, N: int) -> float:
    """``2 / (N |1 - e(x)|)``, which bounds ``|(1/N) sum_{n<N} e(n x)|``."""
    return 2.0 / (N * abs(1 - cmath.exp(2j * math.pi * float(x % 1))))


def word_density(p: int, q: int, a: int, word: str | Sequence[int], N: int) -> Fraction:
    """Fraction of ``0 <= n < N`` whose base-``p`` expansion of ``|a| q**n`` contains ``word``."""
    if a == 0:
        raise DomainError("a must be nonzero")
    if N < 1:
        raise DomainError("N must be positive")
    w = [int(c) for c in word] if isinstance(word, str) else list(word)
    if not w or any(not 0 <= d < p for d in w):
        raise DomainError("word must be non-empty with digits below p")
    if p > 256:
        raise DomainError("base too large for byte encoding")
    needle = bytes(w)
    hits = 0
    x = abs(a)
    for _ in range(N):
        if needle in bytes(to_base(x, p)):
            hits += 1
        x *= q
    return Fraction(hits, N)


@dataclass(frozen=True)
class PsiAlong:
    values: tuple[int, ...]
    threshold: int
    fraction_above: Fraction


def psi_along(spec: SequenceSpec, a: int, p: int, N: int, threshold: int) -> PsiAlong:
    """``psi(a c_n)`` for ``n < N``, and the fraction of them at or above ``threshold``."""
    vals = tuple(digit_stats(a * eval_exact(spec, n), p).psi for n in range(N))
    return PsiAlong(vals, threshold, Fraction(sum(v >= threshold for v in vals), N))


@dataclass(frozen=True)
class StarScan:
    a: int
    eps: float
    N_max: int
    upper_density: float
    window_counts: tuple[tuple[int, int], ...]


def star_condition_scan(
    mu: MeasureExpr, spec: SequenceSpec, a: int, eps: float, N_max: int, n_windows: int = 8
) -> StarScan:
    """Empirical density of ``{n : |mu(a c_n)| < eps}`` on a geometric grid of windows.

    Reports exact window counts; no limit is claimed.
    """
    small = [n for n in range(1, N_max + 1) if fourier(mu, a * eval_exact(spec, n)).abs < eps]
    est, counts = upper_density_estimate(small, N_max, n_windows)
    return StarScan(a, eps, N_max, est, tuple(counts))

"""Symbolic integer sequences and certificates of the (H) congruence property.

A certificate records, for a base ``p`` and infinitely many periods ``N``
(an arithmetic progression), a target ``t``, a nonzero multiplier ``h`` and
an arithmetic progression of indices ``n`` with ``h * c_n = t mod p**N - 1``.
Three generators cover geometric, polynomial-exponential and linear
recurrence sequences.  :func:`verify_certificate` rechecks the congruences
with nothing but :func:`eval_mod` and :func:`mod_pow`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence, Union

from .errors import CertificateInvalidError, DomainError, PreconditionError
from .exactint import (
    IntMatrix,
    companion,
    factorize,
    factor_power_minus_one,
    mat_order_mod,
    mat_pow,
    mat_pow_mod,
    mod_pow,
    multiplicative_order,
    split_by_primes,
)

# ------------------------------------------------------------ sequence descriptions


@dataclass(frozen=True)
class Geometric:
    """``c_n = q**n``."""

    q: int

    def __post_init__(self) -> None:
        if self.q < 2:
            raise DomainError(f"geometric base must be >= 2, got {self.q}")


@dataclass(frozen=True)
class PolyExp:
    """``c_n = sum_l f_l(n) * q_l**n``; polynomials are coefficient tuples, constant first."""

    terms: tuple[tuple[tuple[int, ...], int], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise DomainError("polynomial-exponential spec needs at least one term")
        for poly, base in self.terms:
            if base < 2:
                raise DomainError(f"exponential base must be >= 2, got {base}")
            if not poly:
                raise DomainError("empty polynomial")

    @property
    def bases(self) -> tuple[int, ...]:
        return tuple(b for _, b in self.terms)


@dataclass(frozen=True)
class LinearRecurrence:
    """``c_n = a_1 c_{n-1} + ... + a_L c_{n-L}`` with initial values ``c_0..c_{L-1}``."""

    coeffs: tuple[int, ...]
    initial: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise DomainError("recurrence needs at least one coefficient")
        if len(self.initial) != len(self.coeffs):
            raise DomainError("need exactly L initial values")
        if self.coeffs[-1] == 0:
            raise DomainError("last recurrence coefficient must be nonzero")

    @property
    def matrix(self) -> IntMatrix:
        return companion(self.coeffs)

    @property
    def initial_column(self) -> tuple[int, ...]:
        # Column (c_{L-1}, ..., c_0); A^n applied to it ends in c_n.
        return tuple(reversed(self.initial))


@dataclass(frozen=True)
class Polynomial:
    """``c_n = f(n)`` for an integer polynomial, constant coefficient first."""

    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise DomainError("empty polynomial")


SequenceSpec = Union[Geometric, PolyExp, LinearRecurrence, Polynomial]


def _poly_mod(coeffs: Sequence[int], n: int, M: int) -> int:
    x = n % M
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % M
    return acc


def _poly_exact(coeffs: Sequence[int], n: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = acc * n + c
    return acc


def eval_mod(spec: SequenceSpec, n: int, M: int) -> int:
    """``c_n mod M`` in [0, M), for arbitrarily large ``n``."""
    if M < 2:
        raise DomainError(f"modulus must be >= 2, got {M}")
    if n < 0:
        raise DomainError("index must be nonnegative")
    if isinstance(spec, Geometric):
        return mod_pow(spec.q, n, M)
    if isinstance(spec, Polynomial):
        return _poly_mod(spec.coeffs, n, M)
    if isinstance(spec, PolyExp):
        return sum(_poly_mod(f, n, M) * mod_pow(q, n, M) for f, q in spec.terms) % M
    if isinstance(spec, LinearRecurrence):
        An = mat_pow_mod(spec.matrix, n, M)
        return An.apply(spec.initial_column)[-1] % M
    raise DomainError(f"unknown sequence spec {spec!r}")


def eval_exact(spec: SequenceSpec, n: int) -> int:
    """Exact integer ``c_n``."""
    if n < 0:
        raise DomainError("index must be nonnegative")
    if isinstance(spec, Geometric):
        return spec.q**n
    if isinstance(spec, Polynomial):
        return _poly_exact(spec.coeffs, n)
    if isinstance(spec, PolyExp):
        return sum(_poly_exact(f, n) * q**n for f, q in spec.terms)
    if isinstance(spec, LinearRecurrence):
        return mat_pow(spec.matrix, n).apply(spec.initial_column)[-1]
    raise DomainError(f"unknown sequence spec {spec!r}")


# Text syntax:  geometric:2   poly:0,0,1   linrec:1,1/0,1   polyexp:0,1@2;1@3


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise DomainError(f"bad integer list {text!r}") from exc


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise DomainError(f"bad integer {text!r}") from exc


def parse_spec(text: str) -> SequenceSpec:
    """Parse the compact text form used on the command line."""
    kind, sep, body = text.partition(":")
    if not sep or not body:
        raise DomainError(f"bad sequence spec {text!r}")
    kind = kind.strip().lower()
    if kind == "geometric":
        qs = _ints(body)
        if len(qs) != 1:
            raise DomainError("geometric takes one base")
        return Geometric(qs[0])
    if kind in ("poly", "polynomial"):
        return Polynomial(_ints(body))
    if kind == "linrec":
        coeffs, sep, init = body.partition("/")
        if not sep:
            raise DomainError("linrec needs coefficients/initial values")
        return LinearRecurrence(_ints(coeffs), _ints(init))
    if kind == "polyexp":
        terms = []
        for part in body.split(";"):
            poly, sep, base = part.partition("@")
            if not sep:
                raise DomainError(f"polyexp term {part!r} needs poly@base")
            terms.append((_ints(poly), _int(base)))
        return PolyExp(tuple(terms))
    raise DomainError(f"unknown sequence kind {kind!r}")


def format_spec(spec: SequenceSpec) -> str:
    join = lambda xs: ",".join(str(x) for x in xs)  # noqa: E731
    if isinstance(spec, Geometric):
        return f"geometric:{spec.q}"
    if isinstance(spec, Polynomial):
        return f"poly:{join(spec.coeffs)}"
    if isinstance(spec, LinearRecurrence):
        return f"linrec:{join(spec.coeffs)}/{join(spec.initial)}"
    return "polyexp:" + ";".join(f"{join(f)}@{q}" for f, q in spec.terms)


def spec_to_json(spec: SequenceSpec) -> dict[str, Any]:
    s = lambda xs: [str(x) for x in xs]  # noqa: E731
    if isinstance(spec, Geometric):
        return {"kind": "geometric", "q": str(spec.q)}
    if isinstance(spec, Polynomial):
        return {"kind": "polynomial", "coeffs": s(spec.coeffs)}
    if isinstance(spec, LinearRecurrence):
        return {"kind": "linrec", "coeffs": s(spec.coeffs), "initial": s(spec.initial)}
    return {"kind": "polyexp", "terms": [{"poly": s(f), "base": str(q)} for f, q in spec.terms]}


def spec_from_json(obj: dict[str, Any]) -> SequenceSpec:
    kind = obj["kind"]
    if kind == "geometric":
        return Geometric(dec(obj["q"]))
    if kind == "polynomial":
        return Polynomial(tuple(dec(x) for x in obj["coeffs"]))
    if kind == "linrec":
        return LinearRecurrence(tuple(dec(x) for x in obj["coeffs"]), tuple(dec(x) for x in obj["initial"]))
    if kind == "polyexp":
        return PolyExp(tuple((tuple(dec(x) for x in t["poly"]), dec(t["base"])) for t in obj["terms"]))
    raise DomainError(f"unknown sequence kind {kind!r}")


def dec(x: Any) -> int:
    """Strictly parse a decimal-string integer."""
    if not isinstance(x, str):
        raise DomainError(f"expected a decimal string, got {x!r}")
    body = x[1:] if x.startswith("-") else x
    if not body.isdigit() or not body.isascii():
        raise DomainError(f"not a decimal integer: {x!r}")
    return int(x)


# ------------------------------------------------------------ progressions


@dataclass(frozen=True)
class Progression:
    """The integers ``x >= min`` with ``x = residue mod modulus``."""

    modulus: int
    residue: int
    min: int

    def first(self) -> int:
        return self.min + (self.residue - self.min) % self.modulus

    def nth(self, k: int) -> int:
        return self.first() + k * self.modulus

    def members(self, count: int) -> list[int]:
        return [self.nth(k) for k in range(count)]

    def __contains__(self, x: int) -> bool:
        return x >= self.min and (x - self.residue) % self.modulus == 0

    def to_json(self) -> dict[str, str]:
        return {"modulus": str(self.modulus), "residue": str(self.residue), "min": str(self.min)}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Progression":
        return cls(dec(obj["modulus"]), dec(obj["residue"]), dec(obj["min"]))

    @classmethod
    def starting_at(cls, start: int, step: int) -> "Progression":
        return cls(step, start % step, start)


def _index_set(N0: int) -> Progression:
    """``N0 * k + 1`` restricted to members > 1, stored in canonical form."""
    return Progression(N0, 1 % N0, N0 + 1)


# ------------------------------------------------------------ certificates


@dataclass(frozen=True)
class PerNWitness:
    """Congruence data for one period ``N``: ``h * c_n = t mod modulus`` for ``n`` in the progression."""

    N: int
    modulus: int
    t_index: int
    h_index: int
    anchor: int
    n_progression: Progression
    aux: tuple[tuple[str, int], ...]

    def aux_value(self, key: str) -> int:
        return dict(self.aux)[key]


@dataclass(frozen=True)
class HCertificate:
    construction: str
    p: int
    spec: SequenceSpec
    t_values: tuple[int, ...]
    h_values: tuple[int, ...]
    index_set: Progression
    witnesses: tuple[PerNWitness, ...]
    parameters: tuple[tuple[str, Any], ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", tuple(sorted(self.parameters)))

    def witness_t(self, w: PerNWitness) -> int:
        return self.t_values[w.t_index]

    def witness_h(self, w: PerNWitness) -> int:
        return self.h_values[w.h_index]


@dataclass(frozen=True)
class ExcludedPeriod:
    prime: int
    period: int | None


def fact32_excluded_periods(p: int, primes: Sequence[int], u: int, gamma: int) -> list[ExcludedPeriod]:
    """Periods ``N_i`` outside whose multiples ``p**N != 1 mod q_i**gamma``.

    ``period`` is the order of ``p`` modulo ``q_i**gamma``, or ``None`` when
    ``q_i`` divides ``p`` so that no power of ``p`` is 1 modulo it.
    """
    if p < 2 or u < 1 or gamma < 1:
        raise DomainError("need p >= 2, u >= 1, gamma >= 1")
    out = []
    for i, q in enumerate(primes):
        qg = q**gamma
        for v in range(1, u + 1):
            if (p**v - 1) % qg == 0:
                raise PreconditionError(f"q_{i}^gamma = {q}^{gamma} divides p^{v} - 1 (i={i}, v={v})")
        if p % q == 0:
            out.append(ExcludedPeriod(q, None))
        else:
            period = multiplicative_order(p, qg)
            assert period > u
            out.append(ExcludedPeriod(q, period))
    return out


@dataclass(frozen=True)
class GeometricPlan:
    """Per-base data for ``q**n``: exponent ``gamma`` (also the anchor) and the period product ``N0``."""

    q: int
    primes: tuple[int, ...]
    exponents: tuple[int, ...]
    a0: int
    gamma: int
    periods: tuple[ExcludedPeriod, ...]
    N0: int

    def r_N(self, M: int) -> int:
        """Product over primes of the order of ``q_i`` modulo the ``q_i``-free part of ``M``."""
        r = 1
        for qi in self.primes:
            s = split_by_primes(M, [qi]).r
            r *= multiplicative_order(qi, s)
        return r


def plan_geometric(p: int, q: int) -> GeometricPlan:
    if p < 2 or q < 2:
        raise DomainError("need p, q >= 2")
    fq = factorize(q)
    primes = fq.primes
    exps = tuple(e for _, e in fq.factors)
    a0 = 1
    while not all(qi ** (a0 * b) > p for qi, b in fq.factors):
        a0 += 1
    gamma = a0 * max(exps)
    periods = tuple(fact32_excluded_periods(p, primes, 1, gamma))
    N0 = 1
    for ep in periods:
        if ep.period is not None:
            N0 *= ep.period
    return GeometricPlan(q, primes, exps, a0, gamma, periods, N0)


def _choose_Ns(index_set: Progression, n_witnesses: int, N_values: Iterable[int] | None) -> list[int]:
    if N_values is None:
        if n_witnesses < 1:
            raise DomainError("need at least one witness")
        return index_set.members(n_witnesses)
    Ns = list(N_values)
    for N in Ns:
        if N not in index_set:
            raise PreconditionError(
                f"N={N} is outside the certified index set "
                f"{{{index_set.modulus}k + {index_set.residue} >= {index_set.min}}}"
            )
    return Ns


def _canonical_t(value: int, M: int) -> int:
    return value if value >= 0 else value % M


def _self_check(cert: HCertificate) -> HCertificate:
    report = verify_certificate(cert, k_max=4)
    if report.status != "verified":
        raise CertificateInvalidError(f"generated certificate failed its own check: {report.reason}")
    return cert


def certify_geometric(p: int, q: int, n_witnesses: int = 3, N_values: Iterable[int] | None = None) -> HCertificate:
    """Certificate for ``c_n = q**n``: ``q**(a + k r_N) = q**a mod p**N - 1``."""
    plan = plan_geometric(p, q)
    index_set = _index_set(plan.N0)
    a = plan.gamma
    t = q**a
    witnesses = []
    for N in _choose_Ns(index_set, n_witnesses, N_values):
        M = p**N - 1
        factor_power_minus_one(p, N)  # primes of M feed the order computations below
        r = plan.r_N(M)
        witnesses.append(
            PerNWitness(N, M, 0, 0, a, Progression.starting_at(a, r), (("r_N", r),))
        )
    params = (
        ("gamma", plan.gamma),
        ("excluded_periods", tuple((ep.prime, ep.period) for ep in plan.periods)),
    )
    return _self_check(
        HCertificate("geometric", p, Geometric(q), (t,), (1,), index_set, tuple(witnesses), params)
    )


def certify_polyexp(p: int, spec: PolyExp, n_witnesses: int = 3, N_values: Iterable[int] | None = None) -> HCertificate:
    """Certificate for ``sum f_l(n) q_l**n`` with index step ``(p**N - 1) * r_N``."""
    plans = [plan_geometric(p, q) for q in dict.fromkeys(spec.bases)]
    a = max(pl.gamma for pl in plans)
    N0 = 1
    for pl in plans:
        N0 = N0 * pl.N0 // math.gcd(N0, pl.N0)
    index_set = _index_set(N0)
    t_values: list[int] = []
    witnesses = []
    for N in _choose_Ns(index_set, n_witnesses, N_values):
        M = p**N - 1
        factor_power_minus_one(p, N)  # primes of M feed the order computations below
        r = 1
        for pl in plans:
            r *= pl.r_N(M)
        t = _canonical_t(eval_exact(spec, a), M)
        if t not in t_values:
            t_values.append(t)
        witnesses.append(
            PerNWitness(N, M, t_values.index(t), 0, a, Progression.starting_at(a, M * r), (("r_N", r),))
        )
    params = (("gamma", a), ("period_lcm", N0))
    return _self_check(
        HCertificate("polyexp", p, spec, tuple(t_values), (1,), index_set, tuple(witnesses), params)
    )


@dataclass(frozen=True)
class LinrecPlan:
    primes: tuple[int, ...]
    gamma: int
    periods: tuple[ExcludedPeriod, ...]
    N0: int

    def in_F(self, h: int) -> bool:
        """Membership in ``{+-prod q_i**a_i : a_i < gamma}``."""
        if h == 0:
            return False
        if not self.primes:
            return abs(h) == 1
        split = split_by_primes(h, self.primes)
        return split.r == 1 and all(v < self.gamma for v in split.valuations)


def plan_linrec(p: int, spec: LinearRecurrence) -> LinrecPlan:
    aL = spec.coeffs[-1]
    if math.gcd(aL, p) != 1:
        raise PreconditionError(
            f"the last recurrence coefficient a_L={aL} must be coprime to p={p}"
        )
    primes = factorize(abs(aL)).primes
    if not primes:
        return LinrecPlan((), 1, (), 1)
    gamma = 1
    while any((p - 1) % qi**gamma == 0 for qi in primes):
        gamma += 1
    periods = tuple(fact32_excluded_periods(p, primes, 1, gamma))
    N0 = 1
    for ep in periods:
        N0 *= ep.period  # never None: a_L is coprime to p
    return LinrecPlan(primes, gamma, periods, N0)


def certify_linrec(
    p: int, spec: LinearRecurrence, n_witnesses: int = 3, N_values: Iterable[int] | None = None
) -> HCertificate:
    """Certificate for a linear recurrence: ``h_N c_{j n_N} = h_N c_0 mod p**N - 1``."""
    plan = plan_linrec(p, spec)
    index_set = _index_set(plan.N0)
    A = spec.matrix
    t_values: list[int] = []
    h_values: list[int] = []
    witnesses = []
    for N in _choose_Ns(index_set, n_witnesses, N_values):
        M = p**N - 1
        factor_power_minus_one(p, N)  # primes of M feed the order computations below
        if plan.primes:
            split = split_by_primes(M, plan.primes)
            h, r = split.h, split.r
        else:
            h, r = 1, M
        if not plan.in_F(h):
            raise CertificateInvalidError(f"h_N={h} escaped the finite multiplier set")
        n_N = mat_order_mod(A, r)
        t = _canonical_t(h * spec.initial[0], M)
        for vals, v in ((t_values, t), (h_values, h)):
            if v not in vals:
                vals.append(v)
        witnesses.append(
            PerNWitness(
                N, M, t_values.index(t), h_values.index(h), 0,
                Progression.starting_at(0, n_N),
                (("h_N", h), ("n_N", n_N), ("r_N", r)),
            )
        )
    params = (
        ("gamma", plan.gamma),
        ("excluded_periods", tuple((ep.prime, ep.period) for ep in plan.periods)),
    )
    return _self_check(
        HCertificate("linrec", p, spec, tuple(t_values), tuple(h_values), index_set, tuple(witnesses), params)
    )


def certify(p: int, spec: SequenceSpec, n_witnesses: int = 3, N_values: Iterable[int] | None = None) -> HCertificate:
    """Dispatch to the generator matching the sequence kind."""
    if isinstance(spec, Geometric):
        return certify_geometric(p, spec.q, n_witnesses, N_values)
    if isinstance(spec, PolyExp):
        return certify_polyexp(p, spec, n_witnesses, N_values)
    if isinstance(spec, LinearRecurrence):
        return certify_linrec(p, spec, n_witnesses, N_values)
    if isinstance(spec, Polynomial):
        raise DomainError(
            "polynomial sequences have no congruence certificate; they equidistribute, "
            "use asymptotics.cesaro_fourier to study their averages"
        )
    raise DomainError(f"unknown sequence spec {spec!r}")


# ------------------------------------------------------------ verification


@dataclass(frozen=True)
class Counterexample:
    witness: int
    N: int
    k: int
    n: int
    lhs: int
    rhs: int


@dataclass(frozen=True)
class VerificationReport:
    status: str  # "verified" | "refuted"
    reason: str
    checked: tuple[int, ...]
    flags: tuple[str, ...] = ()
    counterexample: Counterexample | None = None

    @property
    def ok(self) -> bool:
        return self.status == "verified"


def _refute(reason: str, checked: Sequence[int], cx: Counterexample | None = None) -> VerificationReport:
    return VerificationReport("refuted", reason, tuple(checked), (), cx)


def _canonical_progression(pr: Progression) -> bool:
    return pr.modulus > 0 and 0 <= pr.residue < pr.modulus and pr.min % pr.modulus == pr.residue


def verify_certificate(cert: HCertificate, k_max: int = 100) -> VerificationReport:
    """Recheck every claimed congruence for the first ``k_max`` indices of each witness.

    Only :func:`eval_mod` and :func:`mod_pow` touch the sequence; the
    structural checks tie each stored number to the congruence it claims.
    """
    if k_max < 1:
        raise DomainError("k_max must be positive")
    checked: list[int] = []
    p = cert.p
    if p < 2:
        return _refute("p must be >= 2", checked)
    if cert.construction not in ("geometric", "polyexp", "linrec"):
        return _refute(f"unknown construction {cert.construction!r}", checked)
    if not cert.t_values or not cert.h_values:
        return _refute("t_values and h_values must be non-empty", checked)
    if any(h == 0 for h in cert.h_values):
        return _refute("a multiplier h is zero", checked)
    if any(t < 0 for t in cert.t_values):
        return _refute("targets must be nonnegative", checked)
    I = cert.index_set
    if not _canonical_progression(I) or I.min < 2 or I.min - I.modulus >= 2:
        return _refute("index set is not a canonical progression starting at its first member > 1", checked)
    if not cert.witnesses:
        return VerificationReport("verified", "no witnesses", (), ("no witnesses",))
    for wi, w in enumerate(cert.witnesses):
        where = f"witness {wi} (N={w.N})"
        M = p**w.N - 1
        if w.N < 1 or w.modulus != M:
            return _refute(f"{where}: modulus is not p^N - 1", checked)
        if M < 2:
            return _refute(f"{where}: modulus below 2", checked)
        if w.N not in I:
            return _refute(f"{where}: N is outside the index set", checked)
        if not (0 <= w.t_index < len(cert.t_values) and 0 <= w.h_index < len(cert.h_values)):
            return _refute(f"{where}: t/h index out of range", checked)
        t, h = cert.t_values[w.t_index], cert.h_values[w.h_index]
        pr = w.n_progression
        if not _canonical_progression(pr) or pr.min != w.anchor or w.anchor < 0:
            return _refute(f"{where}: index progression does not start at its anchor", checked)
        try:
            aux = dict(w.aux)
            if cert.construction == "geometric":
                ok = h == 1 and pr.modulus == aux["r_N"]
            elif cert.construction == "polyexp":
                ok = h == 1 and pr.modulus == M * aux["r_N"]
            else:
                ok = (
                    w.anchor == 0
                    and h == aux["h_N"]
                    and aux["h_N"] * aux["r_N"] == M
                    and pr.modulus == aux["n_N"]
                )
        except KeyError as exc:
            return _refute(f"{where}: missing auxiliary field {exc}", checked)
        if not ok:
            return _refute(f"{where}: auxiliary data disagrees with the claimed progression or multiplier", checked)
        if t != _canonical_t(h * eval_exact(cert.spec, w.anchor), M):
            return _refute(f"{where}: target is not h * c_anchor", checked)
        rhs = t % M
        for k in range(k_max):
            n = pr.nth(k)
            lhs = h * eval_mod(cert.spec, n, M) % M
            if lhs != rhs:
                checked.append(k)
                return _refute(
                    f"{where}: congruence fails at k={k}", checked, Counterexample(wi, w.N, k, n, lhs, rhs)
                )
        checked.append(k_max)
    return VerificationReport("verified", "all congruences hold", tuple(checked))


# ------------------------------------------------------------ JSON


def _jsonable(x: Any) -> Any:
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, int):
        return str(x)
    if isinstance(x, (tuple, list)):
        return [_jsonable(v) for v in x]
    return x


def certificate_to_json(cert: HCertificate) -> dict[str, Any]:
    return {
        "type": "h-certificate",
        "construction": cert.construction,
        "p": str(cert.p),
        "spec": spec_to_json(cert.spec),
        "t_values": [str(t) for t in cert.t_values],
        "h_values": [str(h) for h in cert.h_values],
        "index_set": cert.index_set.to_json(),
        "parameters": {k: _jsonable(v) for k, v in cert.parameters},
        "witnesses": [
            {
                "N": str(w.N),
                "modulus": str(w.modulus),
                "t_index": str(w.t_index),
                "h_index": str(w.h_index),
                "anchor": str(w.anchor),
                "n_progression": w.n_progression.to_json(),
                "aux": {k: str(v) for k, v in w.aux},
            }
            for w in cert.witnesses
        ],
    }


def _unjson(x: Any) -> Any:
    if isinstance(x, str):
        return dec(x)
    if isinstance(x, list):
        return tuple(_unjson(v) for v in x)
    return x


def certificate_from_json(obj: dict[str, Any]) -> HCertificate:
    """Parse a certificate; malformed input raises :class:`DomainError`."""
    try:
        if obj.get("type") != "h-certificate":
            raise DomainError("not an h-certificate document")
        witnesses = tuple(
            PerNWitness(
                dec(w["N"]),
                dec(w["modulus"]),
                dec(w["t_index"]),
                dec(w["h_index"]),
                dec(w["anchor"]),
                Progression.from_json(w["n_progression"]),
                tuple(sorted((k, dec(v)) for k, v in w["aux"].items())),
            )
            for w in obj["witnesses"]
        )
        return HCertificate(
            construction=obj["construction"],
            p=dec(obj["p"]),
            spec=spec_from_json(obj["spec"]),
            t_values=tuple(dec(t) for t in obj["t_values"]),
            h_values=tuple(dec(h) for h in obj["h_values"]),
            index_set=Progression.from_json(obj["index_set"]),
            witnesses=witnesses,
            parameters=tuple((k, _unjson(v)) for k, v in sorted(obj.get("parameters", {}).items())),
        )
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise DomainError(f"malformed certificate: {exc}") from exc

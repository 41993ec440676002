from __future__ import annotations

import dataclasses
import json

import pytest
from hypothesis import given, strategies as st

from timesp.errors import DomainError, PreconditionError
from timesp.exactint import factorize, mod_pow
from timesp.sequences import (
    Geometric,
    LinearRecurrence,
    PolyExp,
    Polynomial,
    Progression,
    certificate_from_json,
    certificate_to_json,
    certify,
    certify_geometric,
    certify_linrec,
    certify_polyexp,
    eval_exact,
    eval_mod,
    fact32_excluded_periods,
    format_spec,
    parse_spec,
    plan_geometric,
    plan_linrec,
    verify_certificate,
)

FIB = LinearRecurrence((1, 1), (0, 1))


def fib_mod(n: int, m: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, (a + b) % m
    return a % m


def pisano(m: int) -> int:
    a, b, n = 0, 1, 0
    while True:
        a, b = b, (a + b) % m
        n += 1
        if (a, b) == (0, 1 % m):
            return n


# ---------------------------------------------------------------- evaluation


def test_eval_mod_examples():
    assert eval_mod(Geometric(2), 14, 26) == 4
    assert eval_mod(Polynomial((0, 0, 1)), 10**9, 7) == 1
    assert eval_mod(FIB, 10, 100) == 55
    with pytest.raises(DomainError):
        eval_mod(Geometric(2), 3, 1)


SPECS = [
    Geometric(3),
    Polynomial((5, -2, 1)),
    FIB,
    LinearRecurrence((2, -1, 3), (1, 0, -2)),
    PolyExp((((0, 0, 1), 2), ((1,), 3))),
    PolyExp((((0, 1), 2),)),
]


@pytest.mark.parametrize("spec", SPECS, ids=format_spec)
def test_eval_mod_matches_exact(spec):
    for M in (2, 26, 97, 2**20 - 1):
        for n in list(range(0, 200)) + [1 << 10]:
            assert eval_mod(spec, n, M) == eval_exact(spec, n) % M


@pytest.mark.parametrize("spec", SPECS, ids=format_spec)
def test_spec_text_round_trip(spec):
    assert parse_spec(format_spec(spec)) == spec


@pytest.mark.parametrize("text", ["geometric:1", "poly:", "linrec:1,1/0", "polyexp:1@", "nonsense:3", "geometric:x"])
def test_parse_spec_rejects(text):
    with pytest.raises(DomainError):
        parse_spec(text)


# ---------------------------------------------------------------- Fact 3.2 and plans


def test_excluded_periods_examples():
    (e,) = fact32_excluded_periods(3, [2], 1, 2)
    assert e.period == 2
    (e,) = fact32_excluded_periods(2, [2], 1, 1)
    assert e.period is None
    (e,) = fact32_excluded_periods(2, [3], 1, 1)
    assert e.period == 2


def test_excluded_periods_precondition():
    # 2**1 divides 3 - 1, so gamma = 1 is not allowed for p = 3.
    with pytest.raises(PreconditionError):
        fact32_excluded_periods(3, [2], 1, 1)


@pytest.mark.parametrize("p,q", [(3, 2), (2, 3), (5, 6), (7, 4), (2, 4), (6, 4)])
def test_excluded_periods_guarantee(p, q):
    plan = plan_geometric(p, q)
    for N in range(1, 80):
        if any(e.period and N % e.period == 0 for e in plan.periods):
            continue
        for qi in plan.primes:
            assert (p**N - 1) % qi**plan.gamma != 0


def test_geometric_plan_trace():
    plan = plan_geometric(3, 2)
    assert plan.gamma == 2 and plan.N0 == 2
    cert = certify_geometric(3, 2)
    assert cert.index_set.members(3) == [3, 5, 7]
    w = cert.witnesses[0]
    assert (w.N, w.modulus, w.anchor, w.aux_value("r_N")) == (3, 26, 2, 12)
    assert mod_pow(2, 14, 26) == 4 == 2**2


def test_geometric_N5():
    cert = certify_geometric(3, 2, N_values=[5])
    w = cert.witnesses[0]
    assert w.modulus == 242 == 2 * 11**2
    assert w.aux_value("r_N") == 110
    for k in range(51):
        assert mod_pow(2, 2 + 110 * k, 242) == 4


def test_overlapping_prime_base():
    cert = certify_geometric(2, 4)
    for w in cert.witnesses:
        step = w.n_progression.modulus
        for k in range(51):
            assert mod_pow(4, w.anchor + k * step, w.modulus) == mod_pow(4, w.anchor, w.modulus)


def test_N_outside_index_set_rejected():
    with pytest.raises(PreconditionError):
        certify_geometric(3, 2, N_values=[4])


# ---------------------------------------------------------------- other generators


def test_polyexp_example():
    cert = certify_polyexp(3, PolyExp((((0, 1), 2),)), N_values=[3])
    w = cert.witnesses[0]
    assert w.n_progression.modulus == 312 and w.anchor == 2
    assert eval_mod(cert.spec, 2 + 312, 26) == eval_mod(cert.spec, 2, 26) == 8


def test_polyexp_degenerate_matches_geometric():
    g = certify_geometric(3, 2)
    pe = certify_polyexp(3, PolyExp((((1,), 2),)))
    for wg, wp in zip(g.witnesses, pe.witnesses):
        assert wg.N == wp.N and wg.anchor == wp.anchor
        assert wp.n_progression.modulus % wg.n_progression.modulus == 0
        assert pe.witness_t(wp) % wp.modulus == g.witness_t(wg) % wg.modulus


def test_polyexp_two_bases():
    cert = certify_polyexp(5, PolyExp((((0, 0, 1), 2), ((1,), 3))))
    assert verify_certificate(cert, k_max=21).ok


def test_linrec_fibonacci():
    cert = certify_linrec(2, FIB, N_values=[4, 6])
    w4, w6 = cert.witnesses
    assert (w4.modulus, w4.aux_value("h_N"), w4.aux_value("r_N"), w4.aux_value("n_N")) == (15, 1, 15, 40)
    assert pisano(15) == 40
    assert w6.aux_value("n_N") == pisano(63)
    for j in range(21):
        assert fib_mod(j * w6.aux_value("n_N"), 63) == 0


def test_linrec_one_term_matches_geometric():
    cert = certify_linrec(3, LinearRecurrence((2,), (1,)))
    for w in cert.witnesses:
        h = cert.witness_h(w)
        assert h == 2 ** (w.modulus.bit_length() and (w.modulus & -w.modulus).bit_length() - 1)
        for j in range(30):
            n = j * w.n_progression.modulus
            assert h * mod_pow(2, n, w.modulus) % w.modulus == h % w.modulus


def test_linrec_precondition():
    with pytest.raises(PreconditionError):
        certify_linrec(2, LinearRecurrence((1, 2), (0, 1)))


@pytest.mark.parametrize("coeffs,p", [((1, 6), 5), ((3, -4), 7), ((0, 0, 10), 7), ((1, 1), 3)])
def test_linrec_finite_multiplier_set(coeffs, p):
    spec = LinearRecurrence(coeffs, tuple(range(1, len(coeffs) + 1)))
    plan = plan_linrec(p, spec)
    cert = certify_linrec(p, spec, n_witnesses=3)
    s = max(1, len(plan.primes))
    biggest = max(plan.primes, default=2)
    for h in cert.h_values:
        assert h != 0 and plan.in_F(h)
        assert abs(h) < biggest ** (plan.gamma * s)
        # h divides a power of a_L
        assert abs(coeffs[-1]) ** 64 % h == 0
    assert verify_certificate(cert, 100).ok


def test_polynomial_has_no_certificate():
    with pytest.raises(DomainError, match="cesaro"):
        certify(3, Polynomial((0, 1)))


# ---------------------------------------------------------------- verification


@pytest.mark.parametrize("p", range(2, 8))
@pytest.mark.parametrize("q", range(2, 8))
def test_generator_verifier_agree(p, q):
    cert = certify(p, Geometric(q))
    assert verify_certificate(cert, 100).ok
    assert all(h != 0 for h in cert.h_values)
    assert cert.index_set.modulus > 0


def test_tampered_r_N_refuted():
    cert = certify_geometric(3, 2)
    w = cert.witnesses[0]
    r = w.aux_value("r_N") - 1
    bad_w = dataclasses.replace(w, aux=(("r_N", r),), n_progression=Progression.starting_at(w.anchor, r))
    bad = dataclasses.replace(cert, witnesses=(bad_w,) + cert.witnesses[1:])
    rep = verify_certificate(bad, 100)
    assert rep.status == "refuted"
    assert rep.counterexample is not None and rep.counterexample.k == 1


def test_tampered_structure_refuted():
    cert = certify_geometric(3, 2)
    w = cert.witnesses[0]
    for change in (
        {"modulus": w.modulus + 1},
        {"N": 4},
        {"aux": (("r_N", 13),)},
    ):
        bad = dataclasses.replace(cert, witnesses=(dataclasses.replace(w, **change),))
        assert not verify_certificate(bad, 20).ok
    assert not verify_certificate(dataclasses.replace(cert, t_values=(5,)), 20).ok


def test_empty_witnesses_flagged():
    cert = dataclasses.replace(certify_geometric(3, 2), witnesses=())
    rep = verify_certificate(cert, 100)
    assert rep.ok and "no witnesses" in rep.flags


def test_json_round_trip():
    for cert in (certify_geometric(5, 6), certify_linrec(2, FIB), certify_polyexp(3, PolyExp((((0, 1), 2),)))):
        doc = certificate_to_json(cert)
        text = json.dumps(doc, sort_keys=True)
        assert certificate_from_json(json.loads(text)) == cert
        assert all(not isinstance(v, (int, float)) for v in _leaves(doc))


def _leaves(obj):
    if isinstance(obj, dict):
        for v in obj.values():
            yield from _leaves(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _leaves(v)
    else:
        yield obj


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("p"),
    lambda d: d.__setitem__("p", "3.0"),
    lambda d: d["witnesses"][0].__setitem__("modulus", "0x1a"),
    lambda d: d["witnesses"][0]["n_progression"].__setitem__("modulus", "-12"),
])
def test_malformed_json_rejected(mutate):
    doc = certificate_to_json(certify_geometric(3, 2))
    mutate(doc)
    with pytest.raises(DomainError):
        cert = certificate_from_json(doc)
        if not verify_certificate(cert, 10).ok:
            raise DomainError("refuted")


@given(st.integers(1, 10**6), st.integers(0, 10**6), st.integers(0, 30))
def test_progression_members(modulus, start, k):
    pr = Progression.starting_at(start, modulus)
    assert pr.nth(k) == start + k * modulus
    assert pr.nth(k) in pr and pr.first() == start
    assert Progression.from_json(pr.to_json()) == pr


@given(st.integers(2, 9), st.integers(2, 9))
def test_certificate_congruence_property(p, q):
    cert = certify(p, Geometric(q), n_witnesses=2)
    for w in cert.witnesses:
        t = cert.witness_t(w)
        for k in range(10):
            assert eval_mod(cert.spec, w.n_progression.nth(k), w.modulus) == t % w.modulus
        assert factorize(w.modulus).primes  # modulus >= 2

"""Invariant measures for ``x -> p x`` on the circle and torus, with exact congruence certificates."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    CertificateInvalidError,
    DomainError,
    HypothesisError,
    NotInvertibleError,
    PreconditionError,
    ResourceError,
    SingularError,
    TimesPError,
)
from .exactint import (
    IntMatrix,
    charpoly,
    factorize,
    is_prime,
    mat_adjugate,
    mat_det,
    mat_order_mod,
    mod_pow,
    multiplicative_order,
    split_by_primes,
    valuation,
)
from .sequences import (
    Geometric,
    HCertificate,
    LinearRecurrence,
    PolyExp,
    Polynomial,
    Progression,
    certificate_from_json,
    certificate_to_json,
    certify,
    eval_exact,
    eval_mod,
    parse_spec,
    verify_certificate,
)
from .measures1d import (
    BernoulliMeasure,
    COMeasure,
    Dirac,
    Mixture,
    approximate_longer_period,
    build_witness,
    check_invariance,
    fourier,
    zero_test,
)
from .toral import (
    assumption_a_check,
    fact412_indices,
    fact412_split,
    fact413_certify,
    lemma411_periods,
    verify_toral_certificate,
)
from .asymptotics import (
    cesaro_fourier,
    decay_scan,
    digit_stats,
    extract_density1,
    word_density,
)

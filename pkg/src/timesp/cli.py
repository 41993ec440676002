"""Command-line front end.

Exit codes: 0 success or verified, 1 refuted, 2 usage or domain error,
3 resource bound exceeded.  JSON output is canonical (sorted keys, integers
as decimal strings).  Relative output paths resolve against
``$TIMESP_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .asymptotics import (
    CESARO_HEADER,
    DECAY_HEADER,
    cesaro_sweep,
    decay_scan,
    extract_density1,
    word_density,
)
from .errors import CertificateInvalidError, DomainError, ResourceError, TimesPError
from .exactint import IntMatrix
from .measures1d import (
    COMeasure,
    SWEEP_HEADER,
    BernoulliMeasure,
    Mixture,
    approximate_longer_period,
    build_witness,
    fourier,
    measure_from_json,
    measure_to_json,
    parse_measure,
    perturb_with_origin,
    rows_to_csv,
    weakstar_distance,
)
from .sequences import (
    Geometric,
    certificate_from_json,
    certificate_to_json,
    certify,
    dec,
    eval_exact,
    eval_mod,
    parse_spec,
    verify_certificate,
)
from .toral import fact413_certify, toral_certificate_to_json, verify_toral_certificate

OUTPUT_ENV = "TIMESP_OUTPUT_DIR"

EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class Refuted(Exception):
    pass


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, path: str | None, argv: Sequence[str], seed: int) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    p = _out_path(path)
    p.write_text(text)
    meta = {
        "argv": list(argv),
        "created_unix": repr(time.time()),
        "seed": str(seed),
        "sha256": hashlib.sha256(text.encode()).hexdigest(),
        "version": __version__,
    }
    p.with_name(p.name + ".meta.json").write_text(canonical_json(meta))


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise DomainError(f"bad integer list {text!r}") from exc


def _matrix(text: str) -> IntMatrix:
    return IntMatrix.of([_ints(row) for row in text.split(";")])


def _fractions(text: str) -> tuple[Fraction, ...]:
    try:
        return tuple(Fraction(x) for x in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"bad rational list {text!r}") from exc


def _measure(text: str):
    if text.startswith("@"):
        return measure_from_json(json.loads(Path(text[1:]).read_text()))
    return parse_measure(text)


def _fv_json(v) -> dict[str, Any]:
    out = {"re": repr(v.approx.real), "im": repr(v.approx.imag), "abs": repr(v.abs), "error_bound": repr(v.error_bound)}
    if v.exact is not None:
        out["modulus"] = str(v.exact.modulus)
        out["residues"] = [[str(r), f"{w.numerator}/{w.denominator}"] for r, w in v.exact.terms]
    return out


# ------------------------------------------------------------------ subcommands


def cmd_certify(args) -> str:
    spec = parse_spec(args.seq)
    Ns = _ints(args.N) if args.N else None
    cert = certify(args.p, spec, args.witnesses, Ns)
    report = verify_certificate(cert, args.k_max)
    if not report.ok:
        raise CertificateInvalidError(report.reason)
    return canonical_json(certificate_to_json(cert))


def _witness_json(report, cert, witness_index: int) -> dict[str, Any]:
    return {
        "type": "witness-report",
        "certificate": certificate_to_json(cert),
        "witness_index": str(witness_index),
        "N": str(report.N),
        "modulus": str(report.modulus),
        "t": str(report.t_value),
        "h": str(report.h),
        "expr": measure_to_json(report.expr),
        "rho": None if report.rho is None else f"{report.rho.numerator}/{report.rho.denominator}",
        "zero_test": report.zero_test,
        "fourier_at_t": _fv_json(report.fourier_at_t),
        "lower_bound": repr(report.lower_bound),
        "gamma": f"{report.gamma.numerator}/{report.gamma.denominator}",
        "checked_ks": str(report.checked_ks),
    }


def cmd_witness(args) -> str:
    spec = parse_spec(args.seq) if args.seq else Geometric(args.q)
    cert = certify(args.p, spec, args.N_index + 1)
    report = build_witness(args.p, cert, args.N_index, Fraction(args.gamma), args.checked_ks)
    if args.csv:
        rows = []
        for n in range(args.n_min, args.n_max + 1):
            a = report.h * eval_exact(spec, n)
            v = fourier(report.expr, a)
            rows.append((a, v.approx.real, v.approx.imag, v.abs, v.error_bound))
        _emit(rows_to_csv(SWEEP_HEADER, rows), args.csv, args.argv, args.seed)
    return canonical_json(_witness_json(report, cert, args.N_index))


def cmd_bernoulli_decay(args) -> str:
    mu = BernoulliMeasure(args.p, _fractions(args.theta))
    spec = parse_spec(args.seq)
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        a = eval_exact(spec, n)
        v = fourier(mu, a, args.epsilon)
        rows.append((a, v.approx.real, v.approx.imag, v.abs, v.error_bound))
    if args.csv:
        _emit(rows_to_csv(SWEEP_HEADER, rows), args.csv, args.argv, args.seed)
    return canonical_json(
        {
            "type": "bernoulli-decay-summary",
            "measure": measure_to_json(mu),
            "seq": args.seq,
            "n_range": [str(args.n_min), str(args.n_max)],
            "mean_abs": repr(float(np.mean([r[3] for r in rows]))),
            "max_error_bound": repr(max(r[4] for r in rows)),
        }
    )


def cmd_psi_scan(args) -> str:
    mu = BernoulliMeasure(args.p, _fractions(args.theta))
    scan = decay_scan(mu, args.m_min, args.m_max, args.epsilon)
    if args.csv:
        _emit(rows_to_csv(DECAY_HEADER, scan.rows), args.csv, args.argv, args.seed)
    return canonical_json(
        {
            "type": "psi-scan-summary",
            "measure": measure_to_json(mu),
            "m_range": [str(args.m_min), str(args.m_max)],
            "min_ratio": repr(scan.min_ratio),
            "max_ratio": repr(scan.max_ratio),
            "C1": repr(scan.C1),
            "C2": repr(scan.C2),
            "rank_correlation": repr(scan.rank_correlation),
            "nonvanishing": scan.certificate,
        }
    )


def cmd_toral_witness(args) -> str:
    A, B = _matrix(args.A), _matrix(args.B)
    l = _ints(args.l) if args.l else None
    cert = fact413_certify(A, B, args.N, l, args.l_max)
    if cert.status == "refuted":
        raise Refuted(canonical_json(toral_certificate_to_json(cert)))
    return canonical_json(toral_certificate_to_json(cert))


def _approx_json(mu: COMeasure, Nk: int, buffer: int) -> dict[str, Any]:
    rep = approximate_longer_period(mu, Nk, buffer)
    gap = abs(fourier(rep.approx, 1).approx - fourier(mu, 1).approx)
    dist = weakstar_distance(rep.approx, mu, 32)
    return {
        "type": "approx-report",
        "source": measure_to_json(mu),
        "approx": measure_to_json(rep.approx),
        "buffer": str(buffer),
        "digits": rep.digits,
        "per_j_bound": repr(rep.per_j_bound),
        "j_limit": str(rep.j_limit),
        "integral_bound_unit_exponential": repr(rep.integral_bound(1.0, 1.0)),
        "integral_gap_unit_exponential": repr(gap),
        "weakstar_distance": repr(dist.value),
        "weakstar_tail_bound": repr(dist.tail_bound),
    }


def cmd_approx(args) -> str:
    mu = _measure(args.measure)
    if not isinstance(mu, COMeasure):
        raise DomainError("approx needs an orbit measure (co:p,N,m)")
    return canonical_json(_approx_json(mu, args.Nk, args.buffer))


def _synthetic(kind: str, L: int, a_cap: int) -> tuple[np.ndarray, np.ndarray]:
    data = np.zeros((L, 2 * a_cap + 1))
    n = np.arange(1, L + 1)
    if kind == "squares":
        root = np.sqrt(n).round().astype(np.int64)
        data[root * root == n, a_cap + 1] = 1.0
    elif kind == "alternating":
        # Blocks [4^j, 2 * 4^j) are far from the target: no density-one scale beyond small k.
        j = np.floor(np.log(n) / np.log(4))
        bad = n < 2 * 4**j
        data[bad, a_cap + 1] = 1.0
    elif kind != "exact":
        raise DomainError(f"unknown synthetic data {kind!r}")
    return data, np.zeros(2 * a_cap + 1)


def cmd_density_extract(args) -> str:
    if args.data:
        data = np.load(args.data)
        target = np.load(args.target) if args.target else np.zeros(data.shape[1], dtype=data.dtype)
    else:
        data, target = _synthetic(args.synthetic, args.length, args.a_cap)
    res = extract_density1(data, target, args.k_max)
    if args.csv:
        last = res.scales[-1].N_k if res.scales else 0
        inD = set(res.D)
        _emit(rows_to_csv(("n", "in_D"), ((n, int(n in inD)) for n in range(1, last + 1))), args.csv, args.argv, args.seed)
    return canonical_json(
        {
            "type": "density-summary",
            "achieved_k": str(res.achieved_k),
            "k_max": str(res.k_max),
            "scales": [
                {"k": str(s.k), "N_k": str(s.N_k), "count": str(s.count)} for s in res.scales
            ],
            "size_D": str(len(res.D)),
        }
    )


def cmd_cesaro(args) -> str:
    mu = _measure(args.measure)
    spec = parse_spec(args.seq)
    Ns = _ints(args.N_values)
    vals = cesaro_sweep(mu, spec, args.h, Ns, args.epsilon)
    rows = [(c.N, c.value.real, c.value.imag, abs(c.value)) for c in vals]
    if args.csv:
        _emit(rows_to_csv(CESARO_HEADER, rows), args.csv, args.argv, args.seed)
    return canonical_json(
        {
            "type": "cesaro-summary",
            "values": [
                {"N": str(c.N), "re": repr(c.value.real), "im": repr(c.value.imag), "error_bound": repr(c.error_bound)}
                for c in vals
            ],
        }
    )


def cmd_word_density(args) -> str:
    frac = word_density(args.p, args.q, args.a, args.word, args.N)
    return canonical_json(
        {"type": "word-density", "fraction": f"{frac.numerator}/{frac.denominator}", "value": repr(float(frac))}
    )


# ------------------------------------------------------------------ verification


def verify_document(obj: Any, k_max: int = 100) -> tuple[bool, dict[str, Any]]:
    """Re-derive every checkable claim in a JSON document; never trusts stored conclusions."""
    if not isinstance(obj, dict):
        return False, {"status": "refuted", "reason": "not a JSON object"}
    kind = obj.get("type")
    try:
        if kind == "h-certificate":
            cert = certificate_from_json(obj)
            rep = verify_certificate(cert, k_max)
            out = {"status": rep.status, "reason": rep.reason, "checked": [str(c) for c in rep.checked]}
            if rep.flags:
                out["flags"] = list(rep.flags)
            if rep.counterexample:
                cx = rep.counterexample
                out["counterexample"] = {"witness": str(cx.witness), "N": str(cx.N), "k": str(cx.k), "n": str(cx.n)}
            return rep.ok, out
        if kind == "toral-certificate":
            rep = verify_toral_certificate(obj)
            return rep.status == "verified", {"status": rep.status, "reason": rep.reason}
        if kind == "witness-report":
            return _verify_witness(obj, k_max)
        if kind == "approx-report":
            return _verify_approx(obj)
    except (DomainError, KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        return False, {"status": "refuted", "reason": f"malformed document: {exc}"}
    return False, {"status": "refuted", "reason": f"unknown document type {kind!r}"}


def _verify_witness(obj: dict[str, Any], k_max: int) -> tuple[bool, dict[str, Any]]:
    bad = lambda why: (False, {"status": "refuted", "reason": why})  # noqa: E731
    cert = certificate_from_json(obj["certificate"])
    rep = verify_certificate(cert, k_max)
    if not rep.ok:
        return bad(f"embedded certificate: {rep.reason}")
    wi = dec(obj["witness_index"])
    if not 0 <= wi < len(cert.witnesses):
        return bad("witness index out of range")
    w = cert.witnesses[wi]
    t, h = cert.witness_t(w), cert.witness_h(w)
    if (dec(obj["N"]), dec(obj["modulus"]), dec(obj["t"]), dec(obj["h"])) != (w.N, w.modulus, t, h):
        return bad("report fields disagree with the certificate")
    expr = measure_from_json(obj["expr"])
    base = COMeasure(cert.p, w.N, 1)
    if obj["rho"] is None:
        if expr != base:
            return bad("expression is not the orbit measure of 1/(p^N - 1)")
    elif expr != perturb_with_origin(base, Fraction(obj["rho"])):
        return bad("expression is not the stated perturbation")
    at_t = fourier(expr, t)
    stored = obj["fourier_at_t"]
    if dec(stored["modulus"]) != at_t.exact.modulus or stored["residues"] != _fv_json(at_t)["residues"]:
        return bad("stored residues at t differ from recomputation")
    if at_t.abs - at_t.error_bound <= 0:
        return bad("coefficient at t is not bounded away from zero")
    if abs(float(obj["lower_bound"]) - max(0.0, at_t.abs - at_t.error_bound)) > 1e-12:
        return bad("lower bound does not match")
    D = at_t.exact.modulus
    ks = dec(obj["checked_ks"])
    for k in range(ks):
        a_k = h * eval_mod(cert.spec, w.n_progression.nth(k), D)
        if fourier(expr, a_k).exact != at_t.exact:
            return bad(f"coefficient along the progression differs at k={k}")
    return True, {"status": "verified", "reason": "coefficient along the progression equals the one at t", "checked_ks": str(ks)}


def _verify_approx(obj: dict[str, Any]) -> tuple[bool, dict[str, Any]]:
    src = measure_from_json(obj["source"])
    approx = measure_from_json(obj["approx"])
    if not isinstance(src, COMeasure) or not isinstance(approx, COMeasure):
        return False, {"status": "refuted", "reason": "source and approx must be orbit measures"}
    redo = _approx_json(src, approx.N, dec(obj["buffer"]))
    for key in ("approx", "digits", "per_j_bound", "j_limit", "integral_bound_unit_exponential"):
        if redo[key] != obj[key]:
            return False, {"status": "refuted", "reason": f"field {key} does not match recomputation"}
    gap = float(redo["integral_gap_unit_exponential"])
    if gap > float(redo["integral_bound_unit_exponential"]):
        return False, {"status": "refuted", "reason": "integral gap exceeds its bound"}
    if abs(float(obj["integral_gap_unit_exponential"]) - gap) > 1e-12:
        return False, {"status": "refuted", "reason": "reported gap does not match"}
    return True, {"status": "verified", "reason": "approximation and bound recomputed"}


def cmd_verify(args) -> str:
    try:
        obj = json.loads(Path(args.cert).read_text())
    except (OSError, ValueError) as exc:
        if isinstance(exc, OSError):
            raise DomainError(f"cannot read {args.cert}: {exc}") from exc
        obj = None
    ok, report = verify_document(obj, args.k_max) if obj is not None else (
        False, {"status": "refuted", "reason": "not valid JSON"})
    text = canonical_json(report)
    if not ok:
        raise Refuted(text)
    return text


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="timesp",
        description="Invariant measures for x -> p x, congruence certificates along (c_n), toral orbits.",
        epilog=(
            "Sequence syntax: geometric:Q | poly:c0,c1,... | linrec:a1,...,aL/c0,...,c_{L-1} | "
            "polyexp:f0,f1,...@Q;g0,...@Q2.  Measure syntax: co:p,N,m | bernoulli:p:t0,t1,... | "
            "dirac:x | @file.json.  Matrices: rows separated by ';', entries by ','."
        ),
    )
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--seed", type=int, default=0, help="seed recorded in provenance (default 0)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("certify", help="build and self-verify a congruence certificate")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--seq", required=True)
    s.add_argument("--witnesses", type=int, default=3)
    s.add_argument("--N", help="explicit comma-separated periods (must lie in the index set)")
    s.add_argument("--k-max", type=int, default=100)
    s.add_argument("--out")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("verify", help="re-check a JSON certificate or report")
    s.add_argument("--cert", required=True)
    s.add_argument("--k-max", type=int, default=100)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("witness", help="measure whose coefficients along (h c_n) stay large")
    s.add_argument("--p", type=int, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--q", type=int)
    g.add_argument("--seq")
    s.add_argument("--N-index", dest="N_index", type=int, default=0)
    s.add_argument("--n-min", type=int, default=0)
    s.add_argument("--n-max", type=int, default=60)
    s.add_argument("--gamma", default="1/2")
    s.add_argument("--checked-ks", type=int, default=100)
    s.add_argument("--csv", help="CSV a,re,im,abs,error_bound for a = h c_n, n = n-min..n-max")
    s.add_argument("--out")
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("bernoulli-decay", help="coefficients of a Bernoulli measure along c_n")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--theta", required=True)
    s.add_argument("--seq", required=True)
    s.add_argument("--n-min", type=int, default=0)
    s.add_argument("--n-max", type=int, default=60)
    s.add_argument("--epsilon", type=float, default=1e-12)
    s.add_argument("--csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bernoulli_decay)

    s = sub.add_parser("psi-scan", help="digit statistic versus Bernoulli coefficient decay")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--theta", required=True)
    s.add_argument("--m-min", type=int, default=1)
    s.add_argument("--m-max", type=int, default=4096)
    s.add_argument("--epsilon", type=float, default=1e-12)
    s.add_argument("--csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_psi_scan)

    s = sub.add_parser("toral-witness", help="periodic orbit of x -> A x with a certificate against B")
    s.add_argument("--A", required=True)
    s.add_argument("--B", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--l", help="lattice vector (default: standard basis vector e_{(N-1) mod d})")
    s.add_argument("--l-max", type=int, default=10)
    s.add_argument("--out")
    s.set_defaults(func=cmd_toral_witness)

    s = sub.add_parser("approx", help="longer-period approximation of an orbit measure")
    s.add_argument("--measure", required=True)
    s.add_argument("--Nk", type=int, required=True)
    s.add_argument("--buffer", type=int, default=8)
    s.add_argument("--out")
    s.set_defaults(func=cmd_approx)

    s = sub.add_parser("density-extract", help="density-one subsequence along which data converges")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help=".npy array, rows n = 1..L, columns a = -a_cap..a_cap")
    src.add_argument("--synthetic", choices=("squares", "alternating", "exact"))
    s.add_argument("--target", help=".npy target row (default zeros)")
    s.add_argument("--length", type=int, default=1 << 18)
    s.add_argument("--a-cap", type=int, default=8)
    s.add_argument("--k-max", type=int, default=8)
    s.add_argument("--csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_density_extract)

    s = sub.add_parser("cesaro", help="averages of coefficients along h c_n")
    s.add_argument("--measure", required=True)
    s.add_argument("--seq", required=True)
    s.add_argument("--h", type=int, default=1)
    s.add_argument("--N-values", dest="N_values", default="1,2,4,8,16,32,64")
    s.add_argument("--epsilon", type=float, default=1e-12)
    s.add_argument("--csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_cesaro)

    s = sub.add_parser("word-density", help="fraction of n whose base-p digits of a q^n contain a word")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--a", type=int, default=1)
    s.add_argument("--word", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_word_density)
    return ap


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    args.argv = argv
    try:
        text = args.func(args)
    except Refuted as exc:
        sys.stdout.write(str(exc))
        return EXIT_REFUTED
    except ResourceError as exc:
        print(f"resource bound exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except CertificateInvalidError as exc:
        print(f"internal certificate check failed: {exc}", file=sys.stderr)
        return EXIT_REFUTED
    except (DomainError, TimesPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(text, getattr(args, "out", None), argv, args.seed)
    return EXIT_OK


def main() -> None:
    sys.exit(run())

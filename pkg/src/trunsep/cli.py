"""Command-line interface.

Exit codes: 0 success, 1 domain or validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from fractions import Fraction

from .hn_simulator import (
    Circuit,
    NotSimulable,
    build_decomposition_table,
    compare_to_oracle,
    estimate,
    exact_distribution,
    MAX_ORACLE_QUBITS,
)
from .lp_engine import LPError, SeparableCertificate
from .pauli_algebra import DomainError, format_decimal, format_scalar
from .state_sets import TruncatedCube, cz_output_classes
from .threshold_analysis import (
    CASES,
    FormulaViolation,
    case_threshold,
    certificate_violation,
    certify,
    decimal_grid,
    sweep,
    sweep_records,
    write_sweep_csv,
)

log = logging.getLogger("trunsep")


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _r_value(text: str) -> Fraction:
    r = _rational(text)
    if not 0 < r <= 1:
        raise argparse.ArgumentTypeError(f"r must lie in (0, 1], got {text}")
    return r


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _both(q: Fraction) -> str:
    return f"{format_scalar(q)} ({format_decimal(q)})"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(data) -> str:
    return json.dumps(data, indent=2) + "\n"


def cmd_threshold(args) -> int:
    cases = [args.case] if args.case else list(CASES)
    rows = [case_threshold(k, args.r) for k in cases]
    if args.format == "json":
        _emit(_dump(sweep_records(rows)), args.out)
        return 0
    lines = [f"r = {_both(args.r)}"]
    for row in rows:
        lines.append(
            f"case {row.case}: lambda_lp = {_both(row.lambda_lp)}  "
            f"lambda_witness = {_both(row.lambda_witness)}  gap = {_both(row.gap)}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    if args.grid:
        grid = [_r_value(x) for x in args.grid.split(",")]
    else:
        grid = decimal_grid(args.start, args.stop, args.step)
        for r in grid:
            _r_value(str(r))
    rows = sweep(grid, jobs=args.jobs)
    if args.format == "json":
        text = _dump(sweep_records(rows))
    else:
        buf = io.StringIO()
        write_sweep_csv(rows, buf)
        text = buf.getvalue()
    _emit(text, args.out)
    return 0


def cmd_orbits(args) -> int:
    classes = cz_output_classes(TruncatedCube(args.r))
    sizes = sorted((len(m) for m in classes.values()), reverse=True)
    if args.format == "json":
        data = {
            "r": format_scalar(args.r),
            "classes": len(classes),
            "sizes": sizes,
            "total": sum(sizes),
            "representatives": [op.to_json() for op in classes],
        }
        _emit(_dump(data), args.out)
    else:
        _emit(
            f"r = {format_scalar(args.r)}: {len(classes)} classes, sizes {sizes}, total {sum(sizes)}\n",
            args.out,
        )
    return 0


def cmd_certify(args) -> int:
    try:
        cert = certify(args.case, args.r)
    except FormulaViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(_dump(cert.to_json()), args.out)
    return 0


def cmd_verify(args) -> int:
    try:
        with open(args.path) as fh:
            cert = SeparableCertificate.from_json(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid: cannot read certificate: {exc}", file=sys.stderr)
        return 1
    problem = certificate_violation(cert)
    if problem:
        print(f"invalid: {problem}")
        return 1
    print(
        f"valid: case {cert.case}, r = {format_scalar(cert.r)}, lambda = {_both(cert.lam)}, "
        f"{len(cert.terms)} terms"
    )
    return 0


def cmd_simulate(args) -> int:
    circuit = Circuit.load(args.circuit)
    table = build_decomposition_table(circuit.r)
    try:
        est = estimate(circuit, table, args.shots, args.seed, jobs=args.jobs)
    except NotSimulable as exc:
        print(f"error: {exc}; required lambda*(r={format_scalar(circuit.r)}) = {_both(exc.lam_star)}", file=sys.stderr)
        return 1
    data = est.to_json()
    data["r"] = format_scalar(circuit.r)
    data["seed"] = args.seed
    data["lambda_star"] = format_scalar(table.lam_star)
    if args.oracle:
        if circuit.n > MAX_ORACLE_QUBITS:
            print(f"error: --oracle supports at most {MAX_ORACLE_QUBITS} qubits", file=sys.stderr)
            return 1
        probs = exact_distribution(circuit)
        cmp = compare_to_oracle(est, probs)
        for entry in data["outcomes"]:
            o = tuple(entry["outcome"])
            entry["exact"] = probs[o]
            entry["z"] = cmp["z"].get(o, 0.0)
        data["chi2_pvalue"] = cmp["pvalue"]
    if args.format == "json":
        _emit(_dump(data), args.out)
        return 0
    lines = [
        f"r = {data['r']}  lambda* = {data['lambda_star']}  shots = {est.shots}  seed = {args.seed}",
        "measured qubits: " + " ".join(str(k) for k in est.measured),
    ]
    for entry in data["outcomes"]:
        label = "".join("+" if s > 0 else "-" for s in entry["outcome"])
        line = f"{label}  count {entry['count']:>8d}  freq {entry['frequency']:.6f} +- {entry['stderr']:.6f}"
        if args.oracle:
            line += f"  exact {entry['exact']:.6f}  z {entry['z']:+.3f}"
        lines.append(line)
    if args.oracle:
        lines.append(f"chi-square p-value: {data['chi2_pvalue']:.6g}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--r", type=_r_value, default=Fraction(1, 2), help="truncation parameter, e.g. 1/2")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("text", "json", "csv"), default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--shots", type=_positive_int, default=10000)
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="trunsep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", parents=[common], help="LP thresholds and Pauli bounds at one r")
    p.add_argument("--case", type=int, choices=CASES)
    p.set_defaults(func=cmd_threshold, default_format="text")

    p = sub.add_parser("sweep", parents=[common], help="thresholds over a grid of r (CSV)")
    p.add_argument("--start", default="0.30")
    p.add_argument("--stop", default="1.00")
    p.add_argument("--step", default="0.05")
    p.add_argument("--grid", help="explicit comma-separated list of r values")
    p.set_defaults(func=cmd_sweep, default_format="csv")

    p = sub.add_parser("orbits", parents=[common], help="classify the 576 extremal CZ outputs")
    p.set_defaults(func=cmd_orbits, default_format="text")

    p = sub.add_parser("certify", parents=[common], help="write a separability certificate")
    p.add_argument("--case", type=int, choices=CASES, required=True)
    p.set_defaults(func=cmd_certify, default_format="json")

    p = sub.add_parser("verify", parents=[common], help="check a certificate file")
    p.add_argument("path")
    p.set_defaults(func=cmd_verify, default_format="text")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo simulation of a circuit file")
    p.add_argument("circuit")
    p.add_argument("--oracle", action="store_true", help="compare with the dense simulation")
    p.set_defaults(func=cmd_simulate, default_format="text")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (DomainError, LPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

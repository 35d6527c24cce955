"""Noise thresholds of the four canonical cases, lower bounds and certificates."""

from __future__ import annotations

import csv
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .lp_engine import (
    SeparableCertificate,
    min_noise,
    rank,
)
from .pauli_algebra import (
    MAXIMALLY_MIXED,
    BlochVector,
    TwoQubitOperator,
    apply_cz,
    apply_noisy_cz,
    format_decimal,
    format_scalar,
    pauli_outcome_probability,
    product_operator,
    to_scalar,
)
from .state_sets import TruncatedCube, canonical_cases, extrema

log = logging.getLogger(__name__)

CASES = (1, 2, 3, 4)
REGENERATION_WINDOW = (Fraction(2, 5), Fraction(3, 5))


class FormulaViolation(AssertionError):
    """The LP optimum disagrees with the closed-form threshold."""


class BreakpointNotFound(LookupError):
    pass


@dataclass(frozen=True)
class CaseThreshold:
    case: int
    r: Fraction
    lambda_lp: Fraction
    lambda_witness: Fraction

    @property
    def gap(self) -> Fraction:
        return self.lambda_lp - self.lambda_witness


@dataclass(frozen=True)
class WitnessEntry:
    p: int
    q: int
    s: int
    t: int
    bound: Fraction | None  # None: the probability stays positive for all noise


@dataclass(frozen=True)
class WitnessReport:
    entries: tuple[WitnessEntry, ...]

    @property
    def binding(self) -> tuple[WitnessEntry, ...]:
        best = max((e.bound for e in self.entries if e.bound is not None), default=None)
        return tuple(e for e in self.entries if best is not None and e.bound == best)


def _case_input(case: int, r) -> TwoQubitOperator:
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}, got {case}")
    return canonical_cases(r)[case]


# --- lower bounds ---------------------------------------------------------


def witness_bound_for(rho: TwoQubitOperator) -> tuple[Fraction, WitnessReport]:
    """Pauli-positivity lower bound on the noise for the noisy CZ image of ``rho``.

    Each outcome probability of ``C_lam(rho)`` is ``base * (1 + (1-lam) S)``,
    affine in ``lam``; a negative slope term ``S`` forces
    ``lam >= 1 + 1/S``.
    """
    out = apply_cz(rho)
    entries = []
    settings = [(p, q) for p in range(1, 4) for q in range(1, 4)]
    settings += [(p, 0) for p in range(1, 4)] + [(0, q) for q in range(1, 4)]
    for p, q in settings:
        for s, t in itertools.product((1, -1), repeat=2):
            if (p == 0 and s == -1) or (q == 0 and t == -1):
                continue  # the ignored outcome would duplicate the entry
            base = Fraction(1, 4) if p and q else Fraction(1, 2)
            # probability at lam=0 is base * (1 + S)
            S = pauli_outcome_probability(out, p, q, s, t) / base - 1
            bound = 1 + 1 / S if S < 0 else None
            entries.append(WitnessEntry(p, q, s, t, bound))
    best = max((e.bound for e in entries if e.bound is not None), default=Fraction(0))
    return max(best, Fraction(0)), WitnessReport(tuple(entries))


def pauli_witness_bound(case: int, cube: TruncatedCube) -> tuple[Fraction, WitnessReport]:
    return witness_bound_for(_case_input(case, cube.r))


def facet_witness_bound(rho: TwoQubitOperator, cube: TruncatedCube) -> Fraction:
    """Lower bound from products of facet functionals of TRUN(r).

    For separable operators ``(b_A - a_A.v_A)(b_B - a_B.v_B)`` has a
    nonnegative expectation for every pair of facets.  This is stronger than
    Pauli positivity and is offered only as an extra diagnostic.
    """
    out = apply_cz(rho)
    c = out.coeffs
    best = Fraction(0)
    for (aa, ba), (ab, bb) in itertools.product(cube.facets(), repeat=2):
        # value = const + (1 - lam) * slope
        const = ba * bb
        slope = (
            -bb * sum(aa[i] * c[i + 1][0] for i in range(3))
            - ba * sum(ab[j] * c[0][j + 1] for j in range(3))
            + sum(aa[i] * ab[j] * c[i + 1][j + 1] for i in range(3) for j in range(3))
        )
        # const + (1-lam) slope >= 0
        if slope < 0:
            best = max(best, 1 + const / slope)
    return best


# --- closed forms ---------------------------------------------------------


def analytic_threshold(case: int, r) -> Fraction:
    """Closed-form noise levels; only advisory away from ``r = 1/2`` for Cases 1-3."""
    r = to_scalar(r)
    if case == 1:
        return (4 * r**2 + 8 * r + 12) / (r**4 + 2 * r**3 + 9 * r**2 + 16 * r + 20)
    if case in (2, 4):
        return 1 - 1 / (2 + r**2)
    if case == 3:
        return 1 - 1 / (1 + 2 * r)
    raise ValueError(f"case must be one of {CASES}, got {case}")


def case1_threshold_complement_form(r) -> Fraction:
    r = to_scalar(r)
    return 1 - (r**4 + 2 * r**3 + 5 * r**2 + 8 * r + 8) / (r**4 + 2 * r**3 + 9 * r**2 + 16 * r + 20)


def witness_formula(case: int, r) -> Fraction:
    r = to_scalar(r)
    if case in (1, 3):
        return 1 - 1 / (1 + 2 * r)
    return 1 - 1 / (2 + r**2)


# --- LP thresholds --------------------------------------------------------


def case_threshold(case: int, r) -> CaseThreshold:
    cube = TruncatedCube(r)
    rho = _case_input(case, cube.r)
    lam, _ = min_noise(rho, cube, case)
    witness, _ = witness_bound_for(rho)
    return CaseThreshold(case, cube.r, lam, witness)


def _threshold_task(args):
    case, r = args
    return case_threshold(case, r)


def sweep(grid: Iterable, cases: Sequence[int] = CASES, jobs: int = 1) -> list[CaseThreshold]:
    """Thresholds for every ``(r, case)``, sorted by ``(r, case)``."""
    tasks = sorted({(to_scalar(r), k) for r in grid for k in cases}, key=lambda t: (t[0], t[1]))
    tasks = [(k, r) for r, k in tasks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_threshold_task, tasks))
    else:
        rows = [_threshold_task(t) for t in tasks]
    return sorted(rows, key=lambda row: (row.r, row.case))


def decimal_grid(start, stop, step) -> list[Fraction]:
    """Inclusive grid; decimal strings are read exactly."""
    start, stop, step = (to_scalar(x) for x in (start, stop, step))
    if step <= 0:
        raise ValueError("grid step must be positive")
    out = []
    x = start
    while x <= stop:
        out.append(x)
        x += step
    return out


SWEEP_COLUMNS = (
    "r",
    "r_exact",
    "case",
    "lambda_lp",
    "lambda_lp_exact",
    "lambda_witness",
    "lambda_witness_exact",
    "gap",
    "gap_exact",
)


def sweep_records(rows: Iterable[CaseThreshold]) -> list[dict]:
    return [
        {
            "r": format_decimal(row.r),
            "r_exact": format_scalar(row.r),
            "case": row.case,
            "lambda_lp": format_decimal(row.lambda_lp),
            "lambda_lp_exact": format_scalar(row.lambda_lp),
            "lambda_witness": format_decimal(row.lambda_witness),
            "lambda_witness_exact": format_scalar(row.lambda_witness),
            "gap": format_decimal(row.gap),
            "gap_exact": format_scalar(row.gap),
        }
        for row in rows
    ]


def write_sweep_csv(rows: Iterable[CaseThreshold], stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(sweep_records(rows))


def read_sweep_csv(stream) -> list[CaseThreshold]:
    return [
        CaseThreshold(
            int(rec["case"]),
            Fraction(rec["r_exact"]),
            Fraction(rec["lambda_lp_exact"]),
            Fraction(rec["lambda_witness_exact"]),
        )
        for rec in csv.DictReader(stream)
    ]


def breakdown_scan(case: int, lo, hi, resolution) -> tuple[Fraction, Fraction]:
    """Bracket an ``r`` where the LP threshold departs from the Pauli bound.

    Needs a positive gap at ``lo`` and a zero gap at ``hi``; bisects until
    the bracket is no wider than ``resolution``.
    """
    lo, hi, resolution = to_scalar(lo), to_scalar(hi), to_scalar(resolution)
    if not 0 < lo < hi <= 1:
        raise ValueError("window must satisfy 0 < lo < hi <= 1")

    def gap(r):
        return case_threshold(case, r).gap

    if gap(lo) <= 0 or gap(hi) > 0:
        raise BreakpointNotFound(
            f"no gap sign change for case {case} on [{format_scalar(lo)}, {format_scalar(hi)}]"
        )
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


# --- certificates ---------------------------------------------------------


def certificate_violation(cert: SeparableCertificate, case=None) -> str | None:
    """First violated condition of ``cert`` as a message, or None if valid."""
    case = cert.case if case is None else case
    try:
        cube = TruncatedCube(cert.r)
    except ValueError as exc:
        return str(exc)
    if not 0 <= cert.lam <= 1:
        return f"noise level {format_scalar(cert.lam)} outside [0, 1]"
    if case == "custom":
        if cert.input is None:
            return "custom certificate lacks an input operator"
        rho = cert.input
    else:
        try:
            rho = _case_input(int(case), cube.r)
        except ValueError as exc:
            return str(exc)
    ext = set(extrema(cube))
    if not cert.terms:
        return "certificate has no terms"
    for n, (p, a, b) in enumerate(cert.terms):
        if p <= 0:
            return f"term {n}: weight {format_scalar(p)} is not positive"
        if a not in ext:
            return f"term {n}: e_A {a!r} is not an extremum of TRUN({format_scalar(cube.r)})"
        if b not in ext:
            return f"term {n}: e_B {b!r} is not an extremum of TRUN({format_scalar(cube.r)})"
    total = sum((p for p, _, _ in cert.terms), Fraction(0))
    if total != 1:
        return f"weights sum to {format_scalar(total)}, not 1"
    if cert.operator() != apply_noisy_cz(rho, cert.lam):
        return "weighted products do not reproduce the noisy CZ output"
    return None


def verify_certificate(cert: SeparableCertificate, case=None) -> bool:
    return certificate_violation(cert, case) is None


def case4_family(r) -> list[tuple[BlochVector, BlochVector]]:
    """Product extrema with unit x, y magnitudes, z magnitude r and x_A = -y_B, x_B = -y_A."""
    r = TruncatedCube(r).r
    out = []
    for xa, ya, za, zb in itertools.product((1, -1), repeat=4):
        a = BlochVector(xa, ya, za * r)
        b = BlochVector(-ya, -xa, zb * r)
        out.append((a, b))
    return out


def build_case4_certificate(r) -> SeparableCertificate:
    cube = TruncatedCube(r)
    r = cube.r
    head = (Fraction(1), Fraction(1), Fraction(1))
    lead = BlochVector(r, *head[:2]), BlochVector(head[0], r, head[1])
    assert product_operator(*lead) == canonical_cases(r)[4]
    family = case4_family(r)
    each = (1 + r**2) / (2 + r**2) / len(family)
    terms = [(1 / (2 + r**2), *lead)] + [(each, a, b) for a, b in family]
    return SeparableCertificate(r, 1 - 1 / (2 + r**2), 4, tuple(terms))


def regenerate_appendix_certificate(case: int, r) -> SeparableCertificate:
    """LP-derived certificate for Cases 1-3, checked against the closed form."""
    if case not in (1, 2, 3):
        raise ValueError("regeneration covers Cases 1-3; use build_case4_certificate for Case 4")
    cube = TruncatedCube(r)
    lam, cert = min_noise(_case_input(case, cube.r), cube, case)
    expected = analytic_threshold(case, cube.r)
    if lam != expected:
        lo, hi = REGENERATION_WINDOW
        where = "inside" if lo <= cube.r <= hi else "outside"
        raise FormulaViolation(
            f"case {case} at r={format_scalar(cube.r)} ({where} the validity window): "
            f"LP gives {format_scalar(lam)}, formula gives {format_scalar(expected)}"
        )
    return cert


def certify(case: int, r) -> SeparableCertificate:
    if case == 4:
        return build_case4_certificate(r)
    return regenerate_appendix_certificate(case, r)


def support_is_independent(cert: SeparableCertificate) -> bool:
    """Product columns plus the noise column (if used) are linearly independent."""
    cols = [product_operator(a, b).vector() for _, a, b in cert.terms]
    if cert.lam and cert.case != "custom":
        target = apply_cz(_case_input(int(cert.case), cert.r))
        cols.append([x - y for x, y in zip(target.vector(), MAXIMALLY_MIXED.vector())])
    return rank(cols) == len(cols)

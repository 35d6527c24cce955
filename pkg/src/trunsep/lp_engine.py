"""Exact rational linear programming for separability questions.

The solver is a dense two-phase primal simplex with an anti-cycling pivot
rule.  The separability problems it is used for have 16 equality rows and
577 columns, so a dense tableau is adequate; the tableau uses ``gmpy2.mpq``
when available and everything crossing the module boundary is a
:class:`fractions.Fraction`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .pauli_algebra import (
    MAXIMALLY_MIXED,
    BlochVector,
    TwoQubitOperator,
    apply_cz,
    format_scalar,
    mix,
    parse_scalar,
    product_operator,
)
from .state_sets import TruncatedCube, extrema

log = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)

DEGENERATE_STREAK = 50

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


def _F(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class LPError(ArithmeticError):
    pass


class LPInfeasible(LPError):
    """No nonnegative solution exists.

    ``farkas`` holds ``y`` with ``y.A <= 0`` and ``y.b > 0`` when available.
    """

    def __init__(self, message: str, farkas: list[Fraction] | None = None):
        super().__init__(message)
        self.farkas = farkas


class LPUnbounded(LPError):
    pass


class ReconstructionError(LPError):
    """A support set does not determine valid nonnegative weights."""

    def __init__(self, message: str, negative: dict[int, Fraction] | None = None):
        super().__init__(message)
        self.negative = negative or {}


@dataclass
class LinearProgram:
    """minimize ``objective . x`` subject to ``rows x = rhs`` and ``x >= 0``."""

    objective: list[Fraction]
    rows: list[list[Fraction]]
    rhs: list[Fraction]
    labels: list | None = None

    def __post_init__(self):
        self.objective = [Fraction(c) for c in self.objective]
        self.rows = [[Fraction(a) for a in row] for row in self.rows]
        self.rhs = [Fraction(b) for b in self.rhs]
        n = len(self.objective)
        if any(len(row) != n for row in self.rows) or len(self.rows) != len(self.rhs):
            raise ValueError("inconsistent LP dimensions")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.objective)

    def column(self, j: int) -> list[Fraction]:
        return [row[j] for row in self.rows]

    def restrict(self, cols: Sequence[int]) -> LinearProgram:
        return LinearProgram(
            objective=[self.objective[j] for j in cols],
            rows=[[row[j] for j in cols] for row in self.rows],
            rhs=list(self.rhs),
            labels=[self.labels[j] for j in cols] if self.labels is not None else None,
        )


@dataclass
class BasicSolution:
    value: Fraction
    weights: dict[int, Fraction]
    basis: list[int] = field(default_factory=list)

    @property
    def support(self) -> list[int]:
        return sorted(self.weights)


class _Tableau:
    """Dense tableau over ``mpq``; reduced costs live in ``cost``/``cost_rhs``."""

    def __init__(self, rows, rhs, basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.pivots = 0

    def pivot(self, p: int, j: int, cost, cost_rhs):
        prow = self.rows[p]
        inv = 1 / prow[j]
        nz = [k for k, a in enumerate(prow) if a]
        for k in nz:
            prow[k] *= inv
        self.rhs[p] *= inv
        for q, row in enumerate(self.rows):
            if q != p and row[j]:
                f = row[j]
                for k in nz:
                    row[k] -= f * prow[k]
                self.rhs[q] -= f * self.rhs[p]
        if cost[j]:
            f = cost[j]
            for k in nz:
                cost[k] -= f * prow[k]
            cost_rhs[0] -= f * self.rhs[p]
        self.basis[p] = j
        self.pivots += 1

    def run(self, cost, cost_rhs, allowed: int):
        """Minimize over columns ``< allowed``.

        Entering columns follow the most-negative-reduced-cost rule until
        DEGENERATE_STREAK consecutive degenerate pivots occur; from then on
        Bland's rule is used, which cannot cycle.
        """
        bland = False
        streak = 0
        while True:
            if bland:
                entering = next((j for j in range(allowed) if cost[j] < 0), None)
            else:
                entering, best_cost = None, 0
                for j in range(allowed):
                    if cost[j] < best_cost:
                        entering, best_cost = j, cost[j]
            if entering is None:
                return
            best = None
            for p, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (self.rhs[p] / a, self.basis[p])
                    if best is None or key < best[0]:
                        best = (key, p)
            if best is None:
                raise LPUnbounded(f"column {entering} is an unbounded direction")
            if best[0][0] == 0:
                streak += 1
                if streak >= DEGENERATE_STREAK:
                    bland = True
            else:
                streak = 0
            self.pivot(best[1], entering, cost, cost_rhs)


def simplex_solve(lp: LinearProgram) -> BasicSolution:
    """Exact optimal basic solution of ``lp`` (two-phase primal simplex)."""
    m, n = lp.n_rows, lp.n_cols
    zero, one = _Q(0), _Q(1)
    flips = [-1 if b < 0 else 1 for b in lp.rhs]
    rows = []
    for i in range(m):
        art = [zero] * m
        art[i] = one
        rows.append([_Q(flips[i] * a) for a in lp.rows[i]] + art)
    rhs = [_Q(flips[i] * lp.rhs[i]) for i in range(m)]
    tab = _Tableau(rows, rhs, [n + i for i in range(m)])

    # phase 1: minimize the sum of artificials
    cost = [-sum((rows[i][j] for i in range(m)), zero) for j in range(n)] + [zero] * m
    cost_rhs = [-sum(rhs, zero)]
    tab.run(cost, cost_rhs, n)
    infeasibility = -cost_rhs[0]
    if infeasibility > 0:
        # reduced cost of artificial i is 1 - y_i
        y = [_F(flips[i] * (one - cost[n + i])) for i in range(m)]
        raise LPInfeasible(f"infeasible (phase-1 residual {_F(infeasibility)})", farkas=y)

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = []
    for p in range(m):
        if tab.basis[p] >= n:
            j = next((j for j in range(n) if tab.rows[p][j]), None)
            if j is None:
                continue
            tab.pivot(p, j, [zero] * (n + m), [zero])
        keep.append(p)
    tab.rows = [tab.rows[p][:n] for p in keep]
    tab.rhs = [tab.rhs[p] for p in keep]
    tab.basis = [tab.basis[p] for p in keep]

    # phase 2
    objective = [_Q(c) for c in lp.objective]
    cost = list(objective)
    cost_rhs = [zero]
    for p, j in enumerate(tab.basis):
        cj = objective[j]
        if cj:
            row = tab.rows[p]
            for k in range(n):
                if row[k]:
                    cost[k] -= cj * row[k]
            cost_rhs[0] -= cj * tab.rhs[p]
    tab.run(cost, cost_rhs, n)
    log.debug("simplex finished after %d pivots", tab.pivots)

    weights = {j: _F(tab.rhs[p]) for p, j in enumerate(tab.basis) if tab.rhs[p]}
    return BasicSolution(value=_F(-cost_rhs[0]), weights=weights, basis=list(tab.basis))


def check_optimality(lp: LinearProgram, sol: BasicSolution) -> bool:
    """Re-derive duals from ``sol.basis`` and test feasibility and reduced costs."""
    basis = sol.basis
    for j, w in sol.weights.items():
        if w <= 0 or j not in basis:
            return False
    x = [ZERO] * lp.n_cols
    for j, w in sol.weights.items():
        x[j] = w
    for row, b in zip(lp.rows, lp.rhs):
        if sum((a * xj for a, xj in zip(row, x) if xj), ZERO) != b:
            return False
    # duals: y^T B = c_B
    try:
        y = solve_exact([[row[j] for j in basis] for row in lp.rows], [lp.objective[j] for j in basis], unique=False)
    except ReconstructionError:
        return False
    for j in range(lp.n_cols):
        reduced = lp.objective[j] - sum((yi * a for yi, a in zip(y, lp.column(j))), ZERO)
        if reduced < 0:
            return False
    return sum((c * xj for c, xj in zip(lp.objective, x)), ZERO) == sol.value


# --- exact linear algebra -------------------------------------------------


def _row_reduce(matrix: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    mat = [list(row) for row in matrix]
    pivots = []
    r = 0
    n_cols = len(mat[0]) if mat else 0
    for c in range(n_cols):
        p = next((i for i in range(r, len(mat)) if mat[i][c]), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [a * inv for a in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c]:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return mat, pivots


def rank(columns: Sequence[Sequence[Fraction]]) -> int:
    """Exact rank of a set of column vectors."""
    if not columns:
        return 0
    rows = [list(r) for r in zip(*columns)]
    return len(_row_reduce(rows)[1])


def solve_exact(columns, target, unique: bool = True) -> list[Fraction]:
    """Solve ``sum_k w_k columns[k] = target`` exactly.

    With ``unique=False`` a dependent system is allowed and free
    unknowns are set to zero.
    """
    cols = [[Fraction(a) for a in c] for c in columns]
    k = len(cols)
    system = [[c[i] for c in cols] + [Fraction(b)] for i, b in enumerate(target)]
    reduced, pivots = _row_reduce(system)
    if k in pivots:
        raise ReconstructionError("inconsistent system: target not in the span of the support")
    if unique and len(pivots) < k:
        raise ReconstructionError("singular system: support columns are linearly dependent")
    w = [ZERO] * k
    for row, c in zip(reduced, pivots):
        w[c] = row[k]
    return w


# --- separability ---------------------------------------------------------


def product_pairs(cube: TruncatedCube) -> list[tuple[BlochVector, BlochVector]]:
    ext = extrema(cube)
    return [(a, b) for a in ext for b in ext]


def build_separability_lp(target: TwoQubitOperator, cube: TruncatedCube) -> LinearProgram:
    """Column 0 is ``target - mixed`` (its weight is the noise level); columns
    1..576 are the product extrema; the right-hand side is ``target``.
    """
    pairs = product_pairs(cube)
    noise = [a - b for a, b in zip(target.vector(), MAXIMALLY_MIXED.vector())]
    cols = [noise] + [product_operator(a, b).vector() for a, b in pairs]
    objective = [ONE] + [ZERO] * len(pairs)
    rows = [[c[i] for c in cols] for i in range(16)]
    return LinearProgram(objective, rows, list(target.vector()), labels=["noise", *pairs])


@dataclass(frozen=True)
class SeparableCertificate:
    """``(1 - lam) CZ(input) + lam * mixed = sum_n p_n e_A(n) (x) e_B(n)``."""

    r: Fraction
    lam: Fraction
    case: int | str
    terms: tuple[tuple[Fraction, BlochVector, BlochVector], ...]
    input: TwoQubitOperator | None = None

    def operator(self) -> TwoQubitOperator:
        return mix((p, product_operator(a, b)) for p, a, b in self.terms)

    def to_json(self) -> dict:
        data = {
            "r": format_scalar(self.r),
            "lambda": format_scalar(self.lam),
            "case": self.case,
            "terms": [
                {"p": format_scalar(p), "eA": a.to_json(), "eB": b.to_json()}
                for p, a, b in self.terms
            ],
        }
        if self.case == "custom" and self.input is not None:
            data["input"] = self.input.to_json()
        return data

    @classmethod
    def from_json(cls, data: dict) -> SeparableCertificate:
        case = data["case"]
        return cls(
            r=parse_scalar(data["r"]),
            lam=parse_scalar(data["lambda"]),
            case=case if case == "custom" else int(case),
            terms=tuple(
                (parse_scalar(t["p"]), BlochVector.from_json(t["eA"]), BlochVector.from_json(t["eB"]))
                for t in data["terms"]
            ),
            input=TwoQubitOperator.from_json(data["input"]) if "input" in data else None,
        )


def sparsify_support(sol: BasicSolution, lp: LinearProgram) -> BasicSolution:
    """Shrink an optimal solution to one on linearly independent columns.

    Support columns are removed one at a time (largest weight first); a
    removal is undone whenever the restricted problem can no longer reach
    the optimum.
    """
    support = sol.support
    if rank([lp.column(j) for j in support]) == len(support):
        return sol
    cols = list(support)
    for j in sorted(support, key=lambda j: (-sol.weights[j], j)):
        trial = [c for c in cols if c != j]
        try:
            value = simplex_solve(lp.restrict(trial)).value
        except LPInfeasible:
            continue
        if value == sol.value:
            cols = trial
            if rank([lp.column(c) for c in cols]) == len(cols):
                break
    sub = simplex_solve(lp.restrict(cols))
    return BasicSolution(
        value=sub.value,
        weights={cols[j]: w for j, w in sub.weights.items()},
        basis=[cols[j] for j in sub.basis],
    )


def rational_certificate(columns, target) -> list[Fraction]:
    """Exact weights of ``target`` on linearly independent ``columns``.

    Raises :class:`ReconstructionError` if the system is singular or
    inconsistent, or if any weight is negative.
    """
    target = target.vector() if isinstance(target, TwoQubitOperator) else list(target)
    columns = [c.vector() if isinstance(c, TwoQubitOperator) else list(c) for c in columns]
    w = solve_exact(columns, target)
    negative = {k: x for k, x in enumerate(w) if x < 0}
    if negative:
        raise ReconstructionError(f"negative weights at positions {sorted(negative)}", negative)
    return w


def certificate_from_solution(
    sol: BasicSolution, lp: LinearProgram, target: TwoQubitOperator, cube: TruncatedCube, case, rho=None
) -> SeparableCertificate:
    support = sol.support
    w = rational_certificate([lp.column(j) for j in support], target)
    lam = ZERO
    terms = []
    for j, p in zip(support, w):
        if j == 0:
            lam = p
        elif p:
            a, b = lp.labels[j]
            terms.append((p, a, b))
    total = sum((p for p, _, _ in terms), ZERO)
    if total != 1:
        raise LPError(f"product weights sum to {total}, not 1")
    return SeparableCertificate(cube.r, lam, case, tuple(terms), input=rho)


def min_noise(rho: TwoQubitOperator, cube: TruncatedCube, case="custom") -> tuple[Fraction, SeparableCertificate]:
    """Least depolarizing noise making the noisy-CZ image of ``rho`` separable."""
    target = apply_cz(rho)
    lp = build_separability_lp(target, cube)
    sol = sparsify_support(simplex_solve(lp), lp)
    cert = certificate_from_solution(sol, lp, target, cube, case, rho=rho)
    if cert.lam != sol.value:
        raise LPError(f"reconstructed noise {cert.lam} differs from LP optimum {sol.value}")
    return sol.value, cert


def is_separable(op: TwoQubitOperator, cube: TruncatedCube):
    """Feasibility of a product-extrema decomposition of ``op``.

    Returns ``(True, terms)`` with ``terms`` a list of ``(p, e_A, e_B)``, or
    ``(False, None)``.
    """
    pairs = product_pairs(cube)
    cols = [product_operator(a, b).vector() for a, b in pairs]
    lp = LinearProgram(
        objective=[ZERO] * len(cols),
        rows=[[c[i] for c in cols] for i in range(16)],
        rhs=list(op.vector()),
    )
    try:
        sol = simplex_solve(lp)
    except LPInfeasible:
        return False, None
    return True, [(w, *pairs[j]) for j, w in sorted(sol.weights.items())]

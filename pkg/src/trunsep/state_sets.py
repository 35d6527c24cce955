"""Truncated cubes of Bloch vectors and the symmetries that preserve them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm

import numpy as np

from .pauli_algebra import (
    BlochVector,
    DomainError,
    TwoQubitOperator,
    apply_cz,
    format_scalar,
    parse_scalar,
    product_operator,
    to_scalar,
)


class InfeasibleError(ValueError):
    """Raised when a point cannot be written as a mixture of extrema."""


@dataclass(frozen=True)
class TruncatedCube:
    """TRUN(r): convex hull of the sign/position patterns of (1, 1, r)."""

    r: Fraction

    def __post_init__(self):
        r = to_scalar(self.r)
        if not 0 < r <= 1:
            raise DomainError(f"truncation parameter must lie in (0, 1], got {r}")
        object.__setattr__(self, "r", r)

    def extrema(self) -> tuple[BlochVector, ...]:
        return extrema(self)

    def facets(self) -> tuple[tuple[tuple[int, int, int], Fraction], ...]:
        """Half-spaces ``a . v <= b`` as ``(a, b)`` pairs."""
        out = []
        for k in range(3):
            for s in (1, -1):
                a = [0, 0, 0]
                a[k] = s
                out.append((tuple(a), Fraction(1)))
        for signs in itertools.product((1, -1), repeat=3):
            out.append((signs, 2 + self.r))
        return tuple(out)

    def contains(self, v: BlochVector) -> bool:
        return contains(self, v)


@lru_cache(maxsize=None)
def extrema(cube: TruncatedCube) -> tuple[BlochVector, ...]:
    """The 24 extremal patterns, ordered by position of ``r`` then signs.

    At ``r = 1`` the patterns coincide in groups of three; they are kept so
    that the column layout of the separability LP is independent of ``r``.
    """
    out = []
    for pos in range(3):
        mags = [Fraction(1)] * 3
        mags[pos] = cube.r
        for signs in itertools.product((1, -1), repeat=3):
            out.append(BlochVector(*(s * m for s, m in zip(signs, mags))))
    return tuple(out)


def facet_slacks(cube: TruncatedCube, v: BlochVector) -> list[Fraction]:
    return [b - sum(ak * vk for ak, vk in zip(a, v)) for a, b in cube.facets()]


def contains(cube: TruncatedCube, v: BlochVector) -> bool:
    return all(s >= 0 for s in facet_slacks(cube, v))


def contains_dual_cube(v: BlochVector) -> bool:
    """Membership in the Pauli-measurement dual set (the cube |x|,|y|,|z| <= 1)."""
    return all(abs(c) <= 1 for c in v)


@dataclass(frozen=True)
class ConvexCombination:
    r: Fraction
    terms: tuple[tuple[Fraction, BlochVector], ...]

    def point(self) -> BlochVector:
        return BlochVector(*(sum(w * v[k] for w, v in self.terms) for k in range(3)))

    def to_json(self) -> dict:
        return {
            "r": format_scalar(self.r),
            "terms": [{"w": format_scalar(w), "v": v.to_json()} for w, v in self.terms],
        }

    @classmethod
    def from_json(cls, data: dict) -> ConvexCombination:
        return cls(
            parse_scalar(data["r"]),
            tuple((parse_scalar(t["w"]), BlochVector.from_json(t["v"])) for t in data["terms"]),
        )


def decompose_single(cube: TruncatedCube, v: BlochVector) -> ConvexCombination:
    """Write ``v`` as a mixture of at most four extrema (a basic feasible solution)."""
    from .lp_engine import LinearProgram, LPInfeasible, simplex_solve

    if not contains(cube, v):
        raise InfeasibleError(f"{v!r} lies outside TRUN({format_scalar(cube.r)})")
    points = _distinct_extrema(cube)
    for e in points:
        if e == v:
            return ConvexCombination(cube.r, ((Fraction(1), e),))
    rows = [[Fraction(1)] * len(points)] + [[e[k] for e in points] for k in range(3)]
    lp = LinearProgram(
        objective=[Fraction(0)] * len(points), rows=rows, rhs=[Fraction(1), *v]
    )
    try:
        sol = simplex_solve(lp)
    except LPInfeasible as exc:  # pragma: no cover - excluded by the facet test
        raise InfeasibleError(str(exc)) from exc
    terms = tuple((w, points[j]) for j, w in sorted(sol.weights.items()))
    return ConvexCombination(cube.r, terms)


@lru_cache(maxsize=None)
def _distinct_extrema(cube: TruncatedCube) -> tuple[BlochVector, ...]:
    return tuple(dict.fromkeys(extrema(cube)))


# --- symmetries -----------------------------------------------------------


@dataclass(frozen=True)
class SignedPermutation:
    """``v -> w`` with ``w[k] = signs[k] * v[perm[k]]``."""

    perm: tuple[int, int, int]
    signs: tuple[int, int, int]

    def __post_init__(self):
        if sorted(self.perm) != [0, 1, 2] or any(s not in (1, -1) for s in self.signs):
            raise DomainError(f"not a signed permutation: {self.perm}, {self.signs}")

    @classmethod
    def identity(cls) -> SignedPermutation:
        return cls((0, 1, 2), (1, 1, 1))

    @classmethod
    def from_matrix(cls, m) -> SignedPermutation:
        m = [[int(x) for x in row] for row in m]
        perm, signs = [], []
        for row in m:
            (col,) = [j for j, x in enumerate(row) if x]
            perm.append(col)
            signs.append(row[col])
        return cls(tuple(perm), tuple(signs))

    def matrix(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(self.signs[k] if j == self.perm[k] else 0 for j in range(3)) for k in range(3)
        )

    def padded_matrix(self) -> np.ndarray:
        """4x4 action on Pauli indices (identity index fixed)."""
        out = np.zeros((4, 4), dtype=np.int64)
        out[0, 0] = 1
        out[1:, 1:] = self.matrix()
        return out

    def determinant(self) -> int:
        return int(round(np.linalg.det(np.array(self.matrix()))))

    def __call__(self, v: BlochVector) -> BlochVector:
        return BlochVector(*(self.signs[k] * v[self.perm[k]] for k in range(3)))

    def compose(self, other: SignedPermutation) -> SignedPermutation:
        """``self o other`` (apply ``other`` first)."""
        return SignedPermutation(
            tuple(other.perm[self.perm[k]] for k in range(3)),
            tuple(self.signs[k] * other.signs[self.perm[k]] for k in range(3)),
        )

    def inverse(self) -> SignedPermutation:
        perm = [0] * 3
        signs = [0] * 3
        for k in range(3):
            perm[self.perm[k]] = k
            signs[self.perm[k]] = self.signs[k]
        return SignedPermutation(tuple(perm), tuple(signs))


@lru_cache(maxsize=None)
def signed_permutations() -> tuple[SignedPermutation, ...]:
    return tuple(
        SignedPermutation(perm, signs)
        for perm in itertools.permutations(range(3))
        for signs in itertools.product((1, -1), repeat=3)
    )


@dataclass(frozen=True)
class TwoQubitSymmetry:
    """Row action ``g_a``, column action ``g_b``, then an optional transpose."""

    g_a: SignedPermutation
    g_b: SignedPermutation
    swap: bool = False

    @classmethod
    def identity(cls) -> TwoQubitSymmetry:
        e = SignedPermutation.identity()
        return cls(e, e, False)

    def compose(self, other: TwoQubitSymmetry) -> TwoQubitSymmetry:
        """``self o other`` (apply ``other`` first)."""
        if other.swap:
            g_a, g_b = self.g_b.compose(other.g_a), self.g_a.compose(other.g_b)
        else:
            g_a, g_b = self.g_a.compose(other.g_a), self.g_b.compose(other.g_b)
        return TwoQubitSymmetry(g_a, g_b, self.swap != other.swap)

    def inverse(self) -> TwoQubitSymmetry:
        if self.swap:
            return TwoQubitSymmetry(self.g_b.inverse(), self.g_a.inverse(), True)
        return TwoQubitSymmetry(self.g_a.inverse(), self.g_b.inverse(), False)

    def on_product(self, a: BlochVector, b: BlochVector) -> tuple[BlochVector, BlochVector]:
        """Image of ``a (x) b`` as a pair of Bloch vectors."""
        if self.swap:
            return self.g_b(b), self.g_a(a)
        return self.g_a(a), self.g_b(b)


def apply_symmetry(sym: TwoQubitSymmetry, op: TwoQubitOperator) -> TwoQubitOperator:
    perm_a, sign_a = (0, *(k + 1 for k in sym.g_a.perm)), (1, *sym.g_a.signs)
    perm_b, sign_b = (0, *(k + 1 for k in sym.g_b.perm)), (1, *sym.g_b.signs)
    c = op.coeffs
    out = [
        [sign_a[i] * sign_b[j] * c[perm_a[i]][perm_b[j]] for j in range(4)] for i in range(4)
    ]
    if sym.swap:
        out = [list(col) for col in zip(*out)]
    return TwoQubitOperator.from_rows(out)


@lru_cache(maxsize=None)
def symmetry_group() -> tuple[TwoQubitSymmetry, ...]:
    """All 4608 elements, ordered (swap, g_a, g_b) with swap=False first."""
    sp = signed_permutations()
    return tuple(
        TwoQubitSymmetry(a, b, swap) for swap in (False, True) for a in sp for b in sp
    )


@lru_cache(maxsize=None)
def _group_matrices() -> np.ndarray:
    return np.stack([g.padded_matrix() for g in signed_permutations()])


def _orbit_vectors(table: np.ndarray) -> np.ndarray:
    """Flattened (column-stacked) images of an integer 4x4 table under the group.

    Row order matches :func:`symmetry_group`.
    """
    mats = _group_matrices()
    # images[a, b] = P_a @ T @ P_b^T
    images = np.einsum("aik,kl,bjl->abij", mats, table, mats)
    plain = images.reshape(-1, 4, 4)
    swapped = plain.transpose(0, 2, 1)
    both = np.concatenate([plain, swapped])
    # column-stacked layout: index 4*j + i
    return both.transpose(0, 2, 1).reshape(-1, 16)


def _integer_table(op: TwoQubitOperator) -> tuple[np.ndarray, int]:
    den = lcm(*(c.denominator for row in op.coeffs for c in row))
    ints = [[int(c * den) for c in row] for row in op.coeffs]
    bound = max(abs(x) for row in ints for x in row)
    dtype = np.int64 if bound < 2**40 else object
    return np.array(ints, dtype=dtype), den


def _lexmin_row(vectors: np.ndarray) -> int:
    keys = tuple(vectors[:, k] for k in reversed(range(vectors.shape[1])))
    if vectors.dtype == object:
        return min(range(len(vectors)), key=lambda n: tuple(vectors[n]))
    return int(np.lexsort(keys)[0])


@lru_cache(maxsize=65536)
def canonical_form(op: TwoQubitOperator) -> tuple[TwoQubitOperator, TwoQubitSymmetry]:
    """Lexicographically smallest orbit element and a symmetry reaching it.

    The ordering compares the column-stacked coefficient vectors entrywise.
    Ties between symmetries go to the first in :func:`symmetry_group`
    order, so the identity wins for operators already in canonical form.
    """
    table, den = _integer_table(op)
    vectors = _orbit_vectors(table)
    best = _lexmin_row(vectors)
    sym = symmetry_group()[best]
    canon = TwoQubitOperator.from_vector([Fraction(int(x), den) for x in vectors[best]])
    return canon, sym


def canonical_cases(r) -> dict[int, TwoQubitOperator]:
    """Representative extremal product inputs of the four CZ-output classes.

    Case 3 is ``(r,1,1) (x) (r,1,1)``.  The pattern ``(1,1,r) (x) (1,r,1)``
    lies in the same class as Case 2, and the Case 3 noisy output with
    noise ``1 - 1/(1+2r)`` is exactly the one produced by this input.
    """
    r = TruncatedCube(r).r
    one = Fraction(1)
    a = BlochVector(one, one, r)
    b = BlochVector(r, one, one)
    c = BlochVector(one, r, one)
    return {
        1: product_operator(a, a),
        2: product_operator(b, a),
        3: product_operator(b, b),
        4: product_operator(b, c),
    }


def cz_output_classes(cube: TruncatedCube) -> dict[TwoQubitOperator, list[tuple[int, int]]]:
    """Group all extremal input pairs by the canonical form of their CZ output."""
    ext = extrema(cube)
    classes: dict[TwoQubitOperator, list[tuple[int, int]]] = {}
    for ia, ea in enumerate(ext):
        for ib, eb in enumerate(ext):
            canon, _ = canonical_form(apply_cz(product_operator(ea, eb)))
            classes.setdefault(canon, []).append((ia, ib))
    return classes

"""Exact Pauli-expansion algebra for one and two qubits.

A two-qubit operator is stored as its 4x4 table of Pauli coefficients
``coeffs[i][j]`` (row ``i`` = qubit A, column ``j`` = qubit B) so that the
operator equals ``1/4 * sum_ij coeffs[i][j] sigma_i (x) sigma_j``.  All
arithmetic is done with :class:`fractions.Fraction`; floating point only
appears in the dense-matrix oracle used for testing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

PAULI_LABELS = ("I", "X", "Y", "Z")

_PAULI_DENSE = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

CZ_DENSE = np.diag([1, 1, 1, -1]).astype(complex)


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


def to_scalar(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"``/decimal strings to a Fraction.

    Floats are accepted and converted exactly (binary expansion).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    return Fraction(value)


def format_scalar(q: Fraction) -> str:
    """Serialize a rational as ``"num/den"``; ``den`` omitted when 1."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_scalar(text: str) -> Fraction:
    return Fraction(text)


def format_decimal(q: Fraction, digits: int = 12) -> str:
    """Exact round-half-even rendering of ``q`` with ``digits`` decimals."""
    scaled = round(Fraction(q) * 10**digits)
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


@dataclass(frozen=True)
class BlochVector:
    """Single-qubit Pauli coefficients ``(x, y, z)``; may leave the unit ball."""

    x: Fraction
    y: Fraction
    z: Fraction

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, to_scalar(getattr(self, name)))

    @classmethod
    def of(cls, values: Iterable) -> BlochVector:
        x, y, z = values
        return cls(x, y, z)

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def __getitem__(self, k: int) -> Fraction:
        return (self.x, self.y, self.z)[k]

    def __neg__(self) -> BlochVector:
        return BlochVector(-self.x, -self.y, -self.z)

    def padded(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """Coefficients indexed by Pauli index, with the identity entry 1."""
        return (Fraction(1), self.x, self.y, self.z)

    def to_json(self) -> list[str]:
        return [format_scalar(c) for c in self]

    @classmethod
    def from_json(cls, data: Sequence[str]) -> BlochVector:
        return cls.of(parse_scalar(str(c)) for c in data)

    def __repr__(self) -> str:
        return "BlochVector(" + ", ".join(format_scalar(c) for c in self) + ")"


ORIGIN = BlochVector(0, 0, 0)


@dataclass(frozen=True)
class TwoQubitOperator:
    """Pauli coefficient table of a trace-normalized two-qubit operator."""

    coeffs: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(to_scalar(c) for c in row) for row in self.coeffs)
        if len(rows) != 4 or any(len(row) != 4 for row in rows):
            raise DomainError("coefficient table must be 4x4")
        if rows[0][0] != 1:
            raise DomainError(f"coeffs[0][0] must be 1, got {rows[0][0]}")
        object.__setattr__(self, "coeffs", rows)

    @classmethod
    def from_rows(cls, rows) -> TwoQubitOperator:
        return cls(tuple(tuple(row) for row in rows))

    @classmethod
    def from_vector(cls, vec: Sequence) -> TwoQubitOperator:
        """Inverse of :meth:`vector` (column-stacked layout)."""
        vec = list(vec)
        return cls(tuple(tuple(vec[4 * j + i] for j in range(4)) for i in range(4)))

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.coeffs[i][j]

    def vector(self) -> tuple[Fraction, ...]:
        """Columns of the table concatenated: (r00, r10, r20, r30, r01, ...)."""
        return tuple(self.coeffs[i][j] for j in range(4) for i in range(4))

    def transpose(self) -> TwoQubitOperator:
        return TwoQubitOperator(tuple(zip(*self.coeffs)))

    def marginal_a(self) -> BlochVector:
        return BlochVector(self.coeffs[1][0], self.coeffs[2][0], self.coeffs[3][0])

    def marginal_b(self) -> BlochVector:
        return BlochVector(*self.coeffs[0][1:])

    def to_json(self) -> dict:
        return {"coeffs": [[format_scalar(c) for c in row] for row in self.coeffs]}

    @classmethod
    def from_json(cls, data: dict) -> TwoQubitOperator:
        return cls.from_rows([[parse_scalar(str(c)) for c in row] for row in data["coeffs"]])

    def __repr__(self) -> str:
        body = "; ".join(" ".join(format_scalar(c) for c in row) for row in self.coeffs)
        return f"TwoQubitOperator([{body}])"


MAXIMALLY_MIXED = TwoQubitOperator(
    tuple(tuple(Fraction(1 if i == j == 0 else 0) for j in range(4)) for i in range(4))
)


def product_operator(a: BlochVector, b: BlochVector) -> TwoQubitOperator:
    pa, pb = a.padded(), b.padded()
    return TwoQubitOperator(tuple(tuple(x * y for y in pb) for x in pa))


def mix(weighted: Iterable[tuple[Fraction, TwoQubitOperator]]) -> TwoQubitOperator:
    """Affine combination ``sum w_k op_k``; the weights must sum to 1."""
    acc = [[Fraction(0)] * 4 for _ in range(4)]
    total = Fraction(0)
    for w, op in weighted:
        w = to_scalar(w)
        total += w
        for i in range(4):
            row = op.coeffs[i]
            for j in range(4):
                if row[j]:
                    acc[i][j] += w * row[j]
    if total != 1:
        raise DomainError(f"mixing weights sum to {total}, not 1")
    return TwoQubitOperator.from_rows(acc)


def pauli_product_dense(i: int, j: int) -> np.ndarray:
    return np.kron(_PAULI_DENSE[i], _PAULI_DENSE[j])


@lru_cache(maxsize=None)
def cz_conjugation_table() -> dict[tuple[int, int], tuple[int, int, int]]:
    """Map ``(i, j)`` to ``(sign, i', j')`` with CZ s_i(x)s_j CZ = sign s_i'(x)s_j'.

    Derived by conjugating the dense Pauli products and matching the result
    against the 16 Pauli products.
    """
    table = {}
    for i in range(4):
        for j in range(4):
            conj = CZ_DENSE @ pauli_product_dense(i, j) @ CZ_DENSE.conj().T
            match = None
            for k in range(4):
                for l in range(4):
                    # Pauli products are trace-orthogonal with norm 4
                    overlap = np.trace(pauli_product_dense(k, l).conj().T @ conj) / 4
                    if abs(overlap) > 1e-9:
                        for sign in (1, -1):
                            if np.allclose(conj, sign * pauli_product_dense(k, l), atol=1e-12):
                                match = (sign, k, l)
            if match is None:
                raise RuntimeError(f"CZ conjugate of sigma_{i} x sigma_{j} is not a signed Pauli")
            table[(i, j)] = match
    return table


def apply_cz(op: TwoQubitOperator) -> TwoQubitOperator:
    out = [[Fraction(0)] * 4 for _ in range(4)]
    for (i, j), (sign, k, l) in cz_conjugation_table().items():
        out[k][l] = sign * op.coeffs[i][j]
    return TwoQubitOperator.from_rows(out)


def depolarize(op: TwoQubitOperator, lam) -> TwoQubitOperator:
    """Replace ``op`` by the maximally mixed state with probability ``lam``."""
    lam = to_scalar(lam)
    if not 0 <= lam <= 1:
        raise DomainError(f"noise level must lie in [0, 1], got {lam}")
    keep = 1 - lam
    return TwoQubitOperator(
        tuple(
            tuple(Fraction(1) if i == j == 0 else keep * c for j, c in enumerate(row))
            for i, row in enumerate(op.coeffs)
        )
    )


def apply_noisy_cz(op: TwoQubitOperator, lam) -> TwoQubitOperator:
    """Ideal CZ followed by joint depolarizing noise of strength ``lam``."""
    return depolarize(apply_cz(op), lam)


def pauli_outcome_probability(op: TwoQubitOperator, p: int, q: int, s: int, t: int) -> Fraction:
    """Probability of outcomes ``(s, t)`` when measuring ``sigma_p (x) sigma_q``.

    ``p == 0`` (or ``q == 0``) means qubit A (or B) is not measured and
    the corresponding outcome is ignored.  The value may be negative for
    operators that are not quantum states.
    """
    if p not in range(4) or q not in range(4):
        raise DomainError("Pauli indices must be in 0..3")
    if (p, q) == (0, 0):
        raise DomainError("at least one qubit must be measured")
    if s not in (1, -1) or t not in (1, -1):
        raise DomainError("outcomes must be +1 or -1")
    c = op.coeffs
    if p == 0:
        return Fraction(1, 2) * (1 + t * c[0][q])
    if q == 0:
        return Fraction(1, 2) * (1 + s * c[p][0])
    return Fraction(1, 4) * (1 + s * c[p][0] + t * c[0][q] + s * t * c[p][q])


def bloch_to_dense(v: BlochVector) -> np.ndarray:
    out = _PAULI_DENSE[0].copy()
    for k, comp in enumerate(v, start=1):
        out = out + float(comp) * _PAULI_DENSE[k]
    return out / 2


def to_dense(op: TwoQubitOperator) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            c = op.coeffs[i][j]
            if c:
                out += float(c) * pauli_product_dense(i, j)
    return out / 4


def dense_to_coeffs(rho: np.ndarray) -> np.ndarray:
    """Real Pauli coefficient table of a dense 4x4 operator (float)."""
    return np.array(
        [[np.trace(pauli_product_dense(i, j) @ rho).real for j in range(4)] for i in range(4)]
    )

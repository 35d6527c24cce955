"""Monte Carlo simulation of magic-state circuits by sampling product states.

Each shot stores one Bloch vector per qubit.  A noisy CZ replaces the pair
of vectors by a product pair drawn from a TRUN(r)-separable decomposition
of the gate output, so the stored vectors never leave TRUN(r) and terminal
Pauli measurements always have probabilities in [0, 1].

Random choices use exact rational cumulative weights compared against a
uniform 64-bit integer draw, so each discrete distribution is reproduced
up to a granularity of 2**-64.
"""

from __future__ import annotations

import bisect
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Sequence

import numpy as np

from .lp_engine import SeparableCertificate, min_noise
from .pauli_algebra import (
    ORIGIN,
    BlochVector,
    DomainError,
    TwoQubitOperator,
    apply_cz,
    format_scalar,
    parse_scalar,
    product_operator,
    to_scalar,
)
from .state_sets import (
    SignedPermutation,
    TruncatedCube,
    TwoQubitSymmetry,
    canonical_cases,
    canonical_form,
    contains,
    decompose_single,
    extrema,
    signed_permutations,
)
from .threshold_analysis import certify

TWO64 = 1 << 64
AXES = {"X": 0, "Y": 1, "Z": 2}
MAX_ORACLE_QUBITS = 6


class NotSimulable(ValueError):
    """The requested noise level is below the separability threshold."""

    def __init__(self, lam: Fraction, lam_star: Fraction):
        super().__init__(
            f"noise {format_scalar(lam)} is below the threshold "
            f"lambda* = {format_scalar(lam_star)} required for simulation"
        )
        self.lam = lam
        self.lam_star = lam_star


class InvariantViolation(RuntimeError):
    pass


# --- single-qubit Cliffords -----------------------------------------------


def _axis_label(axis: Sequence[int]) -> str:
    first = next(a for a in axis if a)
    if first < 0:
        axis = [-a for a in axis]
    return "".join(("+" if a > 0 else "-") + "xyz"[k] for k, a in enumerate(axis) if a)


def rotation_name(g: SignedPermutation) -> str:
    """Axis-angle name, e.g. ``R[+x]90`` or ``R[+x+y+z]120``; ``I`` for identity."""
    m = np.array(g.matrix())
    tr = int(np.trace(m))
    if tr == 3:
        return "I"
    if tr == -1:
        # half turn: axis spans the image of (m + I)
        sym = m + np.eye(3, dtype=int)
        col = next(sym[:, k] for k in range(3) if sym[:, k].any())
        axis = [int(np.sign(c)) for c in col]
        return f"R[{_axis_label(axis)}]180"
    raw = [m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]
    axis = [int(np.sign(c)) for c in raw]
    angle = {1: 90, 0: 120}[tr]
    first = next(a for a in axis if a)
    if first < 0:
        angle = 360 - angle
    return f"R[{_axis_label(axis)}]{angle}"


@lru_cache(maxsize=None)
def clifford_rotations() -> dict[str, SignedPermutation]:
    """The 24 proper signed permutations keyed by name (with aliases)."""
    table = {rotation_name(g): g for g in signed_permutations() if g.determinant() == 1}
    aliases = {
        "X": "R[+x]180",
        "Y": "R[+y]180",
        "Z": "R[+z]180",
        "H": "R[+x+z]180",
        "S": "R[+z]90",
        "Sdg": "R[+z]270",
    }
    for alias, name in aliases.items():
        table[alias] = table[name]
    return table


def parse_rotation(spec) -> SignedPermutation:
    if isinstance(spec, str):
        try:
            return clifford_rotations()[spec]
        except KeyError:
            raise DomainError(f"unknown Clifford rotation {spec!r}") from None
    g = SignedPermutation.from_matrix(spec)
    if g.determinant() != 1:
        raise DomainError("Clifford rotations must have determinant +1")
    return g


# --- circuits -------------------------------------------------------------


@dataclass(frozen=True)
class CliffordGate:
    q: int
    rot: SignedPermutation


@dataclass(frozen=True)
class NoisyCZ:
    q: tuple[int, int]
    lam: Fraction


@dataclass(frozen=True)
class Circuit:
    r: Fraction
    init: tuple[BlochVector, ...]
    gates: tuple = ()
    measure: tuple[str | None, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "r", to_scalar(self.r))
        n = self.n
        cube = TruncatedCube(self.r)
        if len(self.measure) != n:
            raise DomainError("need one measurement entry per qubit")
        for k, v in enumerate(self.init):
            if not contains(cube, v):
                raise DomainError(f"initial state {v!r} of qubit {k} lies outside TRUN(r)")
        for gate in self.gates:
            qubits = (gate.q,) if isinstance(gate, CliffordGate) else gate.q
            if any(not 0 <= q < n for q in qubits):
                raise DomainError(f"gate {gate} addresses a qubit outside 0..{n - 1}")
            if isinstance(gate, NoisyCZ):
                if gate.q[0] == gate.q[1]:
                    raise DomainError("a CZ needs two distinct qubits")
                if not 0 <= gate.lam <= 1:
                    raise DomainError("noise levels must lie in [0, 1]")
        for m in self.measure:
            if m is not None and m not in AXES:
                raise DomainError(f"measurement axis must be X, Y, Z or null, got {m!r}")

    @property
    def n(self) -> int:
        return len(self.init)

    @property
    def measured(self) -> tuple[int, ...]:
        return tuple(k for k, m in enumerate(self.measure) if m is not None)

    @classmethod
    def from_json(cls, data: dict) -> Circuit:
        gates = []
        for g in data.get("gates", []):
            if g["type"] == "clifford":
                gates.append(CliffordGate(int(g["q"]), parse_rotation(g["rot"])))
            elif g["type"] == "cz":
                i, j = g["q"]
                gates.append(NoisyCZ((int(i), int(j)), parse_scalar(str(g["lambda"]))))
            else:
                raise DomainError(f"unknown gate type {g['type']!r}")
        init = tuple(BlochVector.from_json(v) for v in data["init"])
        if "qubits" in data and int(data["qubits"]) != len(init):
            raise DomainError("'qubits' does not match the number of initial states")
        return cls(parse_scalar(str(data["r"])), init, tuple(gates), tuple(data["measure"]))

    def to_json(self) -> dict:
        gates = []
        for g in self.gates:
            if isinstance(g, CliffordGate):
                gates.append({"type": "clifford", "q": g.q, "rot": rotation_name(g.rot)})
            else:
                gates.append({"type": "cz", "q": list(g.q), "lambda": format_scalar(g.lam)})
        return {
            "r": format_scalar(self.r),
            "qubits": self.n,
            "init": [v.to_json() for v in self.init],
            "gates": gates,
            "measure": list(self.measure),
        }

    @classmethod
    def load(cls, path) -> Circuit:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# --- exact samplers -------------------------------------------------------


class ExactSampler:
    """Draws ``outcomes[i]`` with probability ``weights[i]`` (rationals summing to 1)."""

    def __init__(self, weights: Sequence[Fraction], outcomes: Sequence):
        weights = [Fraction(w) for w in weights]
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise ValueError("weights must be nonnegative and sum to 1")
        self.den = lcm(*(w.denominator for w in weights))
        cum = list(itertools.accumulate(w.numerator * (self.den // w.denominator) for w in weights))
        # outcome i is chosen when u * den < cum[i] * 2**64
        self.thresholds = [c * TWO64 for c in cum]
        self.outcomes = list(outcomes)

    def draw(self, u: int):
        return self.outcomes[bisect.bisect_right(self.thresholds, u * self.den)]


def bernoulli(p: Fraction, u: int) -> bool:
    return u * p.denominator < p.numerator * TWO64


# --- decomposition table --------------------------------------------------


def raise_noise(cert: SeparableCertificate, lam) -> SeparableCertificate:
    """Certificate for a higher noise level via the convex split with the mixed state.

    The mixed state is written as the uniform mixture of the four products
    of +-(1, 1, r), so every term stays extremal.
    """
    lam = to_scalar(lam)
    if lam < cert.lam:
        raise ValueError("can only raise the noise level")
    if lam == cert.lam:
        return cert
    keep = (1 - lam) / (1 - cert.lam)
    e = BlochVector(1, 1, cert.r)
    weights: dict[tuple[BlochVector, BlochVector], Fraction] = {}
    for p, a, b in cert.terms:
        weights[(a, b)] = weights.get((a, b), Fraction(0)) + keep * p
    for a, b in itertools.product((e, -e), repeat=2):
        weights[(a, b)] = weights.get((a, b), Fraction(0)) + (1 - keep) / 4
    terms = tuple((p, a, b) for (a, b), p in weights.items() if p)
    return SeparableCertificate(cert.r, lam, cert.case, terms, cert.input)


@dataclass
class _ClassEntry:
    cert: SeparableCertificate  # certificate at lambda*
    sym: TwoQubitSymmetry  # maps the certified CZ output to its canonical form


@dataclass
class DecompositionTable:
    r: Fraction
    lam_star: Fraction
    certificates: dict[int, SeparableCertificate]
    classes: dict[TwoQubitOperator, _ClassEntry] = field(repr=False)
    _pair_cache: dict = field(default_factory=dict, repr=False)
    _single_cache: dict = field(default_factory=dict, repr=False)

    @property
    def cube(self) -> TruncatedCube:
        return TruncatedCube(self.r)

    def decomposition(self, a: BlochVector, b: BlochVector) -> tuple[tuple[Fraction, BlochVector, BlochVector], ...]:
        """Terms whose mixture equals the noisy CZ output (noise lambda*) of ``a (x) b``."""
        key = (a, b)
        hit = self._pair_cache.get(key)
        if hit is not None:
            return hit[0]
        canon, g = canonical_form(apply_cz(product_operator(a, b)))
        entry = self.classes.get(canon)
        if entry is None:
            # class not covered by the four canonical cases at this r
            lam, cert = min_noise(product_operator(a, b), self.cube)
            entry = _ClassEntry(raise_noise(cert, self.lam_star), g)
            self.classes[canon] = entry
        transport = g.inverse().compose(entry.sym)
        terms = tuple((p, *transport.on_product(x, y)) for p, x, y in entry.cert.terms)
        sampler = ExactSampler([p for p, _, _ in terms], [(x, y) for _, x, y in terms])
        self._pair_cache[key] = (terms, sampler)
        return terms

    def pair_sampler(self, a: BlochVector, b: BlochVector) -> ExactSampler:
        self.decomposition(a, b)
        return self._pair_cache[(a, b)][1]

    def single_sampler(self, v: BlochVector) -> ExactSampler:
        hit = self._single_cache.get(v)
        if hit is None:
            combo = decompose_single(self.cube, v)
            hit = ExactSampler([w for w, _ in combo.terms], [e for _, e in combo.terms])
            self._single_cache[v] = hit
        return hit

    def warm(self) -> None:
        """Populate the pair cache for every extremal pair."""
        ext = extrema(self.cube)
        for a in ext:
            for b in ext:
                self.decomposition(a, b)


def build_decomposition_table(r) -> DecompositionTable:
    cube = TruncatedCube(r)
    certs = {k: certify_exact_case(k, cube.r) for k in (1, 2, 3, 4)}
    lam_star = max(c.lam for c in certs.values())
    classes = {}
    for k, rho in canonical_cases(cube.r).items():
        canon, sym = canonical_form(apply_cz(rho))
        if canon not in classes:
            classes[canon] = _ClassEntry(raise_noise(certs[k], lam_star), sym)
    return DecompositionTable(cube.r, lam_star, certs, classes)


def certify_exact_case(case: int, r) -> SeparableCertificate:
    """LP-optimal certificate for a canonical case (Case 4 via its closed form)."""
    if case == 4:
        return certify(4, r)
    cube = TruncatedCube(r)
    _, cert = min_noise(canonical_cases(cube.r)[case], cube, case)
    return cert


# --- sampling -------------------------------------------------------------


def _u64(rng) -> int:
    return int(rng.random_raw())


def sample_noisy_cz(table: DecompositionTable, a: BlochVector, b: BlochVector, lam, rng) -> tuple[BlochVector, BlochVector]:
    """One draw of a product pair whose expectation is the noisy CZ output.

    ``rng`` is a numpy bit generator (anything with ``random_raw()``).
    """
    lam = to_scalar(lam)
    if lam < table.lam_star:
        raise NotSimulable(lam, table.lam_star)
    if lam == 1:
        return ORIGIN, ORIGIN
    ea = table.single_sampler(a).draw(_u64(rng))
    eb = table.single_sampler(b).draw(_u64(rng))
    extra = (lam - table.lam_star) / (1 - table.lam_star)
    if extra and bernoulli(extra, _u64(rng)):
        return ORIGIN, ORIGIN
    return table.pair_sampler(ea, eb).draw(_u64(rng))


def shot_rng(seed: int, shot: int):
    return np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(shot,)))


def simulate_shot(circuit: Circuit, table: DecompositionTable, rng) -> tuple[int, ...]:
    """Outcomes (+1/-1) of the measured qubits, in qubit order."""
    if circuit.r != table.r:
        raise DomainError("circuit and decomposition table use different r")
    state = list(circuit.init)
    for gate in circuit.gates:
        if isinstance(gate, CliffordGate):
            state[gate.q] = gate.rot(state[gate.q])
        else:
            i, j = gate.q
            state[i], state[j] = sample_noisy_cz(table, state[i], state[j], gate.lam, rng)
    out = []
    for k in circuit.measured:
        comp = state[k][AXES[circuit.measure[k]]]
        p_plus = (1 + comp) / 2
        if not 0 <= p_plus <= 1:
            raise InvariantViolation(f"qubit {k} state {state[k]!r} gives probability {p_plus}")
        out.append(1 if bernoulli(p_plus, _u64(rng)) else -1)
    return tuple(out)


def _check_thresholds(circuit: Circuit, table: DecompositionTable) -> None:
    for gate in circuit.gates:
        if isinstance(gate, NoisyCZ) and gate.lam < table.lam_star:
            raise NotSimulable(gate.lam, table.lam_star)


@dataclass(frozen=True)
class Estimate:
    shots: int
    measured: tuple[int, ...]
    counts: dict[tuple[int, ...], int]

    def frequency(self, outcome) -> float:
        return self.counts.get(tuple(outcome), 0) / self.shots

    def stderr(self, outcome) -> float:
        f = self.frequency(outcome)
        return math.sqrt(f * (1 - f) / self.shots)

    def outcomes(self) -> list[tuple[int, ...]]:
        return all_outcomes(len(self.measured))

    def to_json(self) -> dict:
        return {
            "shots": self.shots,
            "measured": list(self.measured),
            "outcomes": [
                {
                    "outcome": list(o),
                    "count": self.counts.get(o, 0),
                    "frequency": self.frequency(o),
                    "stderr": self.stderr(o),
                }
                for o in self.outcomes()
            ],
        }


def all_outcomes(m: int) -> list[tuple[int, ...]]:
    return list(itertools.product((1, -1), repeat=m))


def _run_chunk(args) -> dict:
    circuit, table, seed, start, stop = args
    counts: dict[tuple[int, ...], int] = {}
    for shot in range(start, stop):
        o = simulate_shot(circuit, table, shot_rng(seed, shot))
        counts[o] = counts.get(o, 0) + 1
    return counts


def estimate(circuit: Circuit, table: DecompositionTable, shots: int, seed: int, jobs: int = 1) -> Estimate:
    """Outcome counts over ``shots`` independent shots; deterministic in ``seed``."""
    if shots < 1:
        raise DomainError("shots must be at least 1")
    _check_thresholds(circuit, table)
    if jobs > 1:
        table.warm()
        bounds = np.linspace(0, shots, jobs + 1).astype(int)
        chunks = [(circuit, table, seed, int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, chunks))
    else:
        parts = [_run_chunk((circuit, table, seed, 0, shots))]
    counts: dict[tuple[int, ...], int] = {}
    for part in parts:
        for o, c in part.items():
            counts[o] = counts.get(o, 0) + c
    ordered = {o: counts[o] for o in all_outcomes(len(circuit.measured)) if o in counts}
    return Estimate(shots, circuit.measured, ordered)


# --- dense oracle ---------------------------------------------------------

_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _adjoint_rotation(u: np.ndarray) -> tuple[tuple[int, ...], ...]:
    m = [
        [np.trace(_PAULI[j] @ u @ _PAULI[k] @ u.conj().T).real / 2 for k in range(1, 4)]
        for j in range(1, 4)
    ]
    return tuple(tuple(int(round(x)) for x in row) for row in m)


@lru_cache(maxsize=None)
def clifford_unitaries() -> dict[tuple[tuple[int, ...], ...], np.ndarray]:
    """Unitary for each signed-permutation rotation, generated from H and S."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])
    found = {_adjoint_rotation(np.eye(2, dtype=complex)): np.eye(2, dtype=complex)}
    frontier = list(found.values())
    while frontier:
        nxt = []
        for u in frontier:
            for gen in (h, s):
                v = gen @ u
                key = _adjoint_rotation(v)
                if key not in found:
                    found[key] = v
                    nxt.append(v)
        frontier = nxt
    return found


def _apply_1q(rho: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    full = np.array([[1]], dtype=complex)
    for k in range(n):
        full = np.kron(full, u if k == q else np.eye(2))
    return full @ rho @ full.conj().T


def _embed(ops: dict[int, np.ndarray], n: int) -> np.ndarray:
    full = np.array([[1]], dtype=complex)
    for k in range(n):
        full = np.kron(full, ops.get(k, np.eye(2)))
    return full


def dense_state(circuit: Circuit) -> np.ndarray:
    """Final density matrix (before measurement) of a circuit with n <= 6."""
    n = circuit.n
    if n > MAX_ORACLE_QUBITS:
        raise DomainError(f"dense oracle limited to {MAX_ORACLE_QUBITS} qubits")
    rho = np.array([[1]], dtype=complex)
    for v in circuit.init:
        single = (_PAULI[0] + sum(float(c) * _PAULI[k + 1] for k, c in enumerate(v))) / 2
        rho = np.kron(rho, single)
    unitaries = clifford_unitaries()
    for gate in circuit.gates:
        if isinstance(gate, CliffordGate):
            rho = _apply_1q(rho, unitaries[gate.rot.matrix()], gate.q, n)
        else:
            i, j = gate.q
            cz = _embed({i: np.diag([1, 0]), j: np.eye(2)}, n) + _embed({i: np.diag([0, 1]), j: _PAULI[3]}, n)
            ideal = cz @ rho @ cz.conj().T
            # Pauli twirl on (i, j) = replace the pair by I/4 (x) Tr_ij
            twirl = sum(
                _embed({i: _PAULI[a], j: _PAULI[b]}, n) @ ideal @ _embed({i: _PAULI[a], j: _PAULI[b]}, n)
                for a in range(4)
                for b in range(4)
            ) / 16
            lam = float(gate.lam)
            rho = (1 - lam) * ideal + lam * twirl
    return rho


def exact_distribution(circuit: Circuit) -> dict[tuple[int, ...], float]:
    rho = dense_state(circuit)
    if abs(np.trace(rho).real - 1) > 1e-10:
        raise InvariantViolation("dense state lost normalization")
    measured = circuit.measured
    out = {}
    for outcome in all_outcomes(len(measured)):
        ops = {
            k: (_PAULI[0] + s * _PAULI[AXES[circuit.measure[k]] + 1]) / 2
            for k, s in zip(measured, outcome)
        }
        out[outcome] = float(np.trace(_embed(ops, circuit.n) @ rho).real)
    total = sum(out.values())
    if abs(total - 1) > 1e-10:
        raise InvariantViolation(f"outcome probabilities sum to {total}")
    return out


def compare_to_oracle(est: Estimate, probs: dict[tuple[int, ...], float]) -> dict:
    """Per-outcome z-scores and a chi-square goodness-of-fit p-value."""
    from scipy.stats import chisquare

    observed, expected, z = [], [], {}
    for o in est.outcomes():
        p = probs.get(o, 0.0)
        c = est.counts.get(o, 0)
        if p <= 1e-12:
            if c:
                return {"pvalue": 0.0, "z": {o: math.inf}, "impossible": o}
            continue
        observed.append(c)
        expected.append(p * est.shots)
        z[o] = (c - p * est.shots) / math.sqrt(est.shots * p * (1 - p)) if p < 1 else 0.0
    expected = np.array(expected) * (sum(observed) / sum(expected))
    if len(observed) < 2:
        pvalue = 1.0
    else:
        pvalue = float(chisquare(observed, expected).pvalue)
    return {"pvalue": pvalue, "z": z}

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trunsep.pauli_algebra import (
    CZ_DENSE,
    MAXIMALLY_MIXED,
    BlochVector,
    DomainError,
    TwoQubitOperator,
    apply_cz,
    apply_noisy_cz,
    bloch_to_dense,
    cz_conjugation_table,
    dense_to_coeffs,
    format_decimal,
    format_scalar,
    mix,
    parse_scalar,
    pauli_outcome_probability,
    product_operator,
    to_dense,
)
from trunsep.state_sets import canonical_cases

R = Fraction(1, 2)

rationals = st.fractions(min_value=-2, max_value=2, max_denominator=50)


@st.composite
def operators(draw):
    entries = [draw(rationals) for _ in range(15)]
    return TwoQubitOperator.from_vector([Fraction(1), *entries])


def random_operator(rng: random.Random) -> TwoQubitOperator:
    vals = [Fraction(rng.randint(-200, 200), 100) for _ in range(15)]
    return TwoQubitOperator.from_vector([Fraction(1), *vals])


class TestProductOperator:
    def test_origin_gives_maximally_mixed(self):
        assert product_operator(BlochVector(0, 0, 0), BlochVector(0, 0, 0)) == MAXIMALLY_MIXED

    def test_case1_entries(self):
        a = BlochVector(1, 1, R)
        op = product_operator(a, a)
        assert op[1, 1] == 1
        assert op[3, 3] == Fraction(1, 4)
        assert op[1, 3] == Fraction(1, 2)

    @pytest.mark.parametrize("r", [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)])
    def test_rank_one_term_of_case4_decomposition(self, r):
        displayed = [
            [1, r, 1, 1],
            [1, r, 1, 1],
            [r, r * r, r, r],
            [1, r, 1, 1],
        ]
        op = product_operator(BlochVector(1, r, 1), BlochVector(r, 1, 1))
        assert op == TwoQubitOperator.from_rows(displayed)

    def test_vector_layout_is_column_stacked(self):
        op = product_operator(BlochVector(2, 3, 5), BlochVector(7, 11, 13))
        vec = op.vector()
        assert vec[:4] == (1, 2, 3, 5)
        assert vec[4] == 7
        assert TwoQubitOperator.from_vector(vec) == op

    def test_trace_normalization_enforced(self):
        with pytest.raises(DomainError):
            TwoQubitOperator.from_rows([[2, 0, 0, 0]] + [[0] * 4] * 3)


class TestCZ:
    def test_conjugation_table_entries(self):
        table = cz_conjugation_table()
        assert table[(0, 0)] == (1, 0, 0)
        assert table[(3, 0)] == (1, 3, 0)
        assert table[(1, 0)] == (1, 1, 3)
        assert len(table) == 16

    def test_table_is_signed_involution(self):
        table = cz_conjugation_table()
        for (i, j), (s, k, l) in table.items():
            s2, i2, j2 = table[(k, l)]
            assert (i2, j2) == (i, j)
            assert s * s2 == 1

    def test_mixed_fixed(self):
        assert apply_cz(MAXIMALLY_MIXED) == MAXIMALLY_MIXED

    def test_x_on_a_picks_up_z_on_b(self):
        out = apply_cz(product_operator(BlochVector(1, 0, 0), BlochVector(0, 0, 0)))
        assert out[1, 3] == 1
        assert out[1, 0] == 0

    def test_involution_on_case2(self):
        rho2 = canonical_cases(R)[2]
        assert apply_cz(apply_cz(rho2)) == rho2

    @given(operators())
    def test_involution(self, op):
        assert apply_cz(apply_cz(op)) == op

    @given(operators(), operators(), st.fractions(min_value=0, max_value=1, max_denominator=30))
    def test_linearity(self, a, b, alpha):
        lhs = apply_cz(mix([(alpha, a), (1 - alpha, b)]))
        rhs = mix([(alpha, apply_cz(a)), (1 - alpha, apply_cz(b))])
        assert lhs == rhs

    def test_dense_oracle_agreement(self):
        rng = random.Random(7)
        for _ in range(1000):
            op = random_operator(rng)
            expected = CZ_DENSE @ to_dense(op) @ CZ_DENSE.conj().T
            assert np.max(np.abs(to_dense(apply_cz(op)) - expected)) < 1e-12


class TestNoisyCZ:
    def test_full_noise(self):
        rho = canonical_cases(R)[1]
        assert apply_noisy_cz(rho, 1) == MAXIMALLY_MIXED

    def test_no_noise(self):
        rho = canonical_cases(R)[4]
        assert apply_noisy_cz(rho, 0) == apply_cz(rho)

    @pytest.mark.parametrize("lam", [Fraction(-1, 10), Fraction(11, 10)])
    def test_domain(self, lam):
        with pytest.raises(DomainError):
            apply_noisy_cz(MAXIMALLY_MIXED, lam)

    @pytest.mark.parametrize("r", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
    def test_case4_output_matches_displayed_operator_up_to_transpose(self, r):
        # displayed with rows indexing the second qubit; our rows index the first
        lam = 1 - 1 / (2 + r * r)
        k = 1 - lam
        displayed = TwoQubitOperator.from_rows(
            [
                [1, k * r, k, k],
                [k, k * r, -k * r * r, k],
                [k * r, -k, k * r, k * r],
                [k, k * r, k, k],
            ]
        )
        rho4 = canonical_cases(r)[4]
        assert apply_noisy_cz(rho4, lam) == displayed.transpose()
        assert apply_noisy_cz(rho4.transpose(), lam) == displayed

    def test_scaling_of_non_identity_coefficients(self):
        rho = canonical_cases(R)[3]
        lam = Fraction(2, 7)
        ideal, noisy = apply_cz(rho), apply_noisy_cz(rho, lam)
        for i in range(4):
            for j in range(4):
                if (i, j) != (0, 0):
                    assert noisy[i, j] == (1 - lam) * ideal[i, j]


class TestOutcomeProbability:
    def test_mixed_uniform(self):
        for p in range(1, 4):
            for q in range(1, 4):
                for s in (1, -1):
                    for t in (1, -1):
                        assert pauli_outcome_probability(MAXIMALLY_MIXED, p, q, s, t) == Fraction(1, 4)

    def test_case1_xx_up_up(self):
        rho1 = canonical_cases(R)[1]
        assert pauli_outcome_probability(rho1, 1, 1, 1, 1) == 1

    @pytest.mark.parametrize("r", [Fraction(1, 3), Fraction(1, 2), Fraction(9, 10)])
    def test_witness_probability_vanishes_at_threshold(self, r):
        rho4 = canonical_cases(r)[4]
        lam = 1 - 1 / (2 + r * r)
        # our rows index the first qubit, so the displayed (X, Y) pair is (Y, X) here
        assert pauli_outcome_probability(apply_noisy_cz(rho4, lam), 2, 1, -1, -1) == 0
        lam = Fraction(1, 5)
        expected = Fraction(1, 4) * (1 - (1 - lam) * (2 + r * r))
        assert pauli_outcome_probability(apply_noisy_cz(rho4, lam), 2, 1, -1, -1) == expected

    def test_marginal(self):
        op = product_operator(BlochVector(0, 0, 0), BlochVector(0, 0, Fraction(1, 3)))
        assert pauli_outcome_probability(op, 0, 3, 1, -1) == Fraction(1, 3)
        assert pauli_outcome_probability(op, 0, 3, -1, -1) == Fraction(1, 3)

    def test_identity_pair_rejected(self):
        with pytest.raises(DomainError):
            pauli_outcome_probability(MAXIMALLY_MIXED, 0, 0, 1, 1)

    @given(operators(), st.integers(1, 3), st.integers(1, 3))
    def test_completeness(self, op, p, q):
        total = sum(pauli_outcome_probability(op, p, q, s, t) for s in (1, -1) for t in (1, -1))
        assert total == 1

    def test_matches_dense_trace(self):
        rng = random.Random(3)
        paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
        for _ in range(50):
            op = random_operator(rng)
            p, q = rng.randint(1, 3), rng.randint(1, 3)
            s, t = rng.choice((1, -1)), rng.choice((1, -1))
            proj = np.kron((np.eye(2) + s * paulis[p]) / 2, (np.eye(2) + t * paulis[q]) / 2)
            dense = np.trace(proj @ to_dense(op)).real
            assert abs(dense - float(pauli_outcome_probability(op, p, q, s, t))) < 1e-12


class TestDense:
    def test_mixed(self):
        assert np.allclose(to_dense(MAXIMALLY_MIXED), np.eye(4) / 4)

    def test_pole(self):
        assert np.allclose(bloch_to_dense(BlochVector(0, 0, 1)), np.diag([1, 0]))

    def test_product_is_tensor_product(self):
        a = BlochVector(1, 1, R)
        op = to_dense(product_operator(a, a))
        assert abs(np.trace(op) - 1) < 1e-12
        assert np.allclose(op, np.kron(bloch_to_dense(a), bloch_to_dense(a)))

    def test_round_trip(self):
        op = canonical_cases(R)[2]
        assert np.allclose(dense_to_coeffs(to_dense(op)), np.array(op.coeffs, dtype=float))


class TestSerialization:
    @pytest.mark.parametrize(
        "q, text", [(Fraction(272, 489), "272/489"), (Fraction(-1), "-1"), (Fraction(0), "0"), (Fraction(-3, 4), "-3/4")]
    )
    def test_scalar_format(self, q, text):
        assert format_scalar(q) == text
        assert parse_scalar(text) == q

    def test_decimal(self):
        assert format_decimal(Fraction(272, 489)) == "0.556237218814"
        assert format_decimal(Fraction(-1, 3)) == "-0.333333333333"
        assert format_decimal(Fraction(2, 3), 3) == "0.667"

    def test_operator_json(self):
        op = apply_noisy_cz(canonical_cases(R)[1], Fraction(272, 489))
        data = op.to_json()
        assert data["coeffs"][0] == ["1", *data["coeffs"][0][1:]]
        assert TwoQubitOperator.from_json(data) == op

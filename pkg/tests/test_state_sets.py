import itertools
import random
from fractions import Fraction

import pytest

from trunsep.lp_engine import LinearProgram, LPInfeasible, simplex_solve
from trunsep.pauli_algebra import (
    BlochVector,
    DomainError,
    apply_cz,
    product_operator,
)
from trunsep.state_sets import (
    ConvexCombination,
    InfeasibleError,
    SignedPermutation,
    TruncatedCube,
    TwoQubitSymmetry,
    apply_symmetry,
    canonical_cases,
    canonical_form,
    contains,
    contains_dual_cube,
    cz_output_classes,
    decompose_single,
    extrema,
    facet_slacks,
    signed_permutations,
    symmetry_group,
)

R = Fraction(1, 2)


def hull_contains(cube, v):
    """Vertex-representation membership, decided by an LP feasibility problem."""
    pts = list(dict.fromkeys(extrema(cube)))
    rows = [[Fraction(1)] * len(pts)] + [[p[k] for p in pts] for k in range(3)]
    try:
        simplex_solve(LinearProgram([0] * len(pts), rows, [1, *v]))
    except LPInfeasible:
        return False
    return True


class TestCube:
    @pytest.mark.parametrize("r", [0, -1, Fraction(3, 2)])
    def test_domain(self, r):
        with pytest.raises(DomainError):
            TruncatedCube(r)

    def test_extrema_count_and_patterns(self, half_cube):
        ext = extrema(half_cube)
        assert len(ext) == 24
        assert len(set(ext)) == 24
        for v in ext:
            assert sorted(abs(c) for c in v) == [R, 1, 1]

    def test_extrema_collapse_at_one(self):
        ext = extrema(TruncatedCube(1))
        assert len(ext) == 24
        assert len(set(ext)) == 8

    def test_extrema_are_on_boundary(self, half_cube):
        for v in extrema(half_cube):
            assert contains(half_cube, v)
            assert sum(1 for s in facet_slacks(half_cube, v) if s == 0) >= 3

    def test_facet_count(self, half_cube):
        assert len(half_cube.facets()) == 14

    def test_outside_points(self, half_cube):
        assert not contains(half_cube, BlochVector(1, 1, Fraction(3, 5)))
        assert not contains(half_cube, BlochVector(Fraction(11, 10), 0, 0))
        assert contains(half_cube, BlochVector(1, 1, R))
        assert contains(half_cube, BlochVector(0, 0, 0))

    def test_inside_dual_cube(self):
        for r in (Fraction(1, 10), R, Fraction(1)):
            for v in extrema(TruncatedCube(r)):
                assert contains_dual_cube(v)
        assert not contains_dual_cube(BlochVector(Fraction(11, 10), 0, 0))

    @pytest.mark.parametrize("r", [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)])
    def test_vertex_and_facet_descriptions_agree(self, r):
        cube = TruncatedCube(r)
        rng = random.Random(int(r * 100))
        for _ in range(250):
            v = BlochVector(*(Fraction(rng.randint(-120, 120), 100) for _ in range(3)))
            assert contains(cube, v) == hull_contains(cube, v)

    def test_boundary_points_agree(self, half_cube):
        edge = BlochVector(1, Fraction(3, 4), Fraction(3, 4))
        assert contains(half_cube, edge) and hull_contains(half_cube, edge)
        beyond = BlochVector(1, Fraction(3, 4), Fraction(3, 4) + Fraction(1, 10**9))
        assert not contains(half_cube, beyond) and not hull_contains(half_cube, beyond)

    @pytest.mark.parametrize("r", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
    def test_contains_inscribed_ball(self, r):
        cube = TruncatedCube(r)
        rng = random.Random(5)
        # square faces sit at distance 1, corner facets at (2 + r)/sqrt(3) > 1
        for _ in range(300):
            v = [Fraction(rng.randint(-1000, 1000), 1000) for _ in range(3)]
            if sum(c * c for c in v) <= 1:
                assert contains(cube, BlochVector(*v))

    def test_invariant_under_signed_permutations(self, half_cube):
        ext = set(extrema(half_cube))
        for g in signed_permutations():
            assert {g(v) for v in ext} == ext


class TestDecomposeSingle:
    def test_extremum_is_its_own_decomposition(self, half_cube):
        v = BlochVector(1, -1, R)
        combo = decompose_single(half_cube, v)
        assert combo.terms == ((Fraction(1), v),)

    @pytest.mark.parametrize(
        "v",
        [
            BlochVector(0, 0, 0),
            BlochVector(Fraction(2, 3), Fraction(2, 3), Fraction(1, 3)),
            BlochVector(Fraction(3, 5), Fraction(4, 5), 0),
            BlochVector(1, 0, 0),
            BlochVector(1, Fraction(3, 4), Fraction(3, 4)),
        ],
    )
    def test_decomposition(self, half_cube, v):
        combo = decompose_single(half_cube, v)
        assert combo.point() == v
        assert sum(w for w, _ in combo.terms) == 1
        assert all(w > 0 for w, _ in combo.terms)
        assert len(combo.terms) <= 4
        assert all(e in extrema(half_cube) for _, e in combo.terms)

    def test_outside(self, half_cube):
        with pytest.raises(InfeasibleError):
            decompose_single(half_cube, BlochVector(1, 1, 1))

    def test_json(self, half_cube):
        combo = decompose_single(half_cube, BlochVector(Fraction(1, 3), 0, Fraction(-1, 7)))
        assert ConvexCombination.from_json(combo.to_json()) == combo


class TestSymmetries:
    def test_signed_permutation_count(self):
        group = signed_permutations()
        assert len(group) == 48
        assert len(set(group)) == 48
        assert group[0] == SignedPermutation.identity()

    def test_action_and_matrix(self):
        g = SignedPermutation((1, 2, 0), (1, -1, 1))
        v = BlochVector(2, 3, 5)
        assert g(v) == BlochVector(3, -5, 2)
        m = g.matrix()
        assert tuple(sum(m[i][k] * v[k] for k in range(3)) for i in range(3)) == (3, -5, 2)
        assert SignedPermutation.from_matrix(m) == g

    def test_group_laws(self):
        group = signed_permutations()
        rng = random.Random(1)
        v = BlochVector(2, 3, 5)
        for _ in range(200):
            g, h = rng.choice(group), rng.choice(group)
            assert g.compose(h)(v) == g(h(v))
            assert g.compose(g.inverse()) == SignedPermutation.identity()
            assert g.compose(h) in group
            assert g.compose(h).determinant() == g.determinant() * h.determinant()

    def test_two_qubit_group(self):
        group = symmetry_group()
        assert len(group) == 4608
        assert group[0] == TwoQubitSymmetry.identity()

    def test_two_qubit_action_on_products(self):
        group = symmetry_group()
        rng = random.Random(2)
        a, b = BlochVector(2, 3, 5), BlochVector(7, 11, 13)
        for _ in range(100):
            g, h = rng.choice(group), rng.choice(group)
            img = apply_symmetry(g, product_operator(a, b))
            assert img == product_operator(*g.on_product(a, b))
            op = product_operator(a, b)
            assert apply_symmetry(g.compose(h), op) == apply_symmetry(g, apply_symmetry(h, op))
            assert apply_symmetry(g.inverse(), apply_symmetry(g, op)) == op

    def test_swap_transposes(self):
        op = canonical_cases(R)[2]
        swap = TwoQubitSymmetry(SignedPermutation.identity(), SignedPermutation.identity(), True)
        assert apply_symmetry(swap, op) == op.transpose()


class TestCanonicalForm:
    def test_idempotent(self):
        for rho in canonical_cases(R).values():
            canon, sym = canonical_form(apply_cz(rho))
            again, sym2 = canonical_form(canon)
            assert again == canon
            assert sym2 == TwoQubitSymmetry.identity()
            assert apply_symmetry(sym, apply_cz(rho)) == canon

    def test_orbit_invariant(self):
        rng = random.Random(9)
        group = symmetry_group()
        for rho in canonical_cases(R).values():
            out = apply_cz(rho)
            canon, _ = canonical_form(out)
            for _ in range(10):
                assert canonical_form(apply_symmetry(rng.choice(group), out))[0] == canon

    def test_cases_are_distinct_classes(self):
        canons = {canonical_form(apply_cz(rho))[0] for rho in canonical_cases(R).values()}
        assert len(canons) == 4

    def test_display_pattern_shares_class_with_case2(self):
        a = BlochVector(1, 1, R)
        c = BlochVector(1, R, 1)
        other = canonical_form(apply_cz(product_operator(a, c)))[0]
        assert other == canonical_form(apply_cz(canonical_cases(R)[2]))[0]

    def test_four_classes_at_half(self, half_cube):
        classes = cz_output_classes(half_cube)
        assert len(classes) == 4
        assert sorted(len(v) for v in classes.values()) == [64, 128, 128, 256]
        assert sum(len(v) for v in classes.values()) == 576

    def test_one_class_at_one(self):
        classes = cz_output_classes(TruncatedCube(1))
        assert len(classes) == 1
        assert sum(len(v) for v in classes.values()) == 576

    def test_classes_partition_all_pairs(self, half_cube):
        members = [p for v in cz_output_classes(half_cube).values() for p in v]
        assert sorted(members) == list(itertools.product(range(24), repeat=2))

from collections import Counter
from fractions import Fraction
from itertools import combinations
from math import comb, factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subperm.perm import all_permutations, occ_count
from subperm.perm import parse_permutation as P
from subperm.series import (
    TruncatedSeries,
    class_counts,
    decorated_tree_series,
    decorations,
    exact_expected_occ,
    marked_series,
    marked_tree_count,
    occ_series,
    s_polynomial,
    series_compose,
    series_divide,
    series_reciprocal,
    solve_t_notplus,
    t_from_t_notplus,
)
from subperm.trees import (
    canonical_trees,
    enumerate_class,
    induced_tree_with_sources,
    parse_tree,
    perm_of_tree,
)

FAMILIES = [(), (P("2413"), P("3142")), (P("2413"),), (P("2413"), P("3142"), P("24153"))]


def small_series(max_order=6):
    coeff = st.fractions(min_value=-5, max_value=5, max_denominator=4)
    return st.integers(0, max_order).flatmap(
        lambda n: st.lists(coeff, min_size=n + 1, max_size=n + 1).map(lambda cs: TruncatedSeries(cs, n)))


def naive_mul(a, b):
    n = min(a.order, b.order)
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n + 1)]


class TestArithmetic:
    def test_inverse_of_one_minus_z(self):
        f = TruncatedSeries([1, -1], 10)
        assert f.inverse().coeffs == [1] * 11

    def test_division_and_reciprocal(self):
        f = TruncatedSeries([1, 2, 3], 5)
        g = TruncatedSeries([2, 1], 5)
        assert series_divide(f, g) * g == f
        assert series_divide(TruncatedSeries.one(5), g) * g == TruncatedSeries.one(5)
        h = TruncatedSeries([0, 1, 1], 5)
        assert series_reciprocal(h) * (1 - h) == TruncatedSeries.one(5)
        with pytest.raises(ValueError):
            series_reciprocal(g)
        with pytest.raises(ZeroDivisionError):
            TruncatedSeries([0, 1], 3).inverse()

    def test_compose(self):
        # 1/(1-x) composed with x = z + z^2
        f = TruncatedSeries([1] * 7, 6)
        g = TruncatedSeries([0, 1, 1], 6)
        fib = [1, 1, 2, 3, 5, 8, 13]
        assert series_compose(f, g).coeffs == fib
        with pytest.raises(ValueError):
            f.compose(TruncatedSeries([1, 1], 6))

    def test_derivative_and_shift(self):
        f = TruncatedSeries([1, 2, 3, 4], 3)
        assert f.derivative().coeffs == [2, 6, 12]
        assert f.derivative().order == 2
        assert f.shift(2).coeffs == [0, 0, 1, 2, 3, 4]

    def test_large_products_match_schoolbook(self):
        a = TruncatedSeries([(-1) ** i * (i * 7919 % 1013) ** 3 for i in range(120)], 119)
        b = TruncatedSeries([(i * 104729 % 997) for i in range(120)], 119)
        assert (a * b).coeffs == naive_mul(a, b)

    def test_json_round_trip(self):
        f = TruncatedSeries([Fraction(1, 3), -2, 0, Fraction(7, 5)], 3)
        assert TruncatedSeries.from_json(f.to_json()) == f

    @settings(max_examples=80)
    @given(small_series(), small_series())
    def test_ring_laws(self, f, g):
        assert (f * g).coeffs == naive_mul(f, g)
        assert f * g == g * f
        assert (f + g) - g == f.truncate(min(f.order, g.order))

    @settings(max_examples=80)
    @given(small_series())
    def test_inverse_property(self, f):
        if f[0] == 0:
            return
        assert f * f.inverse() == TruncatedSeries.one(f.order)


class TestClassSeries:
    def test_separable_counts(self):
        # large Schroeder numbers
        assert class_counts((), 8) == [1, 2, 6, 22, 90, 394, 1806, 8558]

    def test_two_simples_notplus(self):
        s = s_polynomial([P("2413"), P("3142")], 10)
        assert s.coeffs[:6] == [0, 0, 0, 0, 2, 0]
        u = solve_t_notplus(s, 10)
        assert u[5] == 65
        assert t_from_t_notplus(u)[5] == 114

    @pytest.mark.parametrize("family", FAMILIES)
    def test_counts_match_enumeration(self, family):
        counts = class_counts(family, 7)
        assert counts == [len(enumerate_class(family, n)) for n in range(1, 8)]

    @pytest.mark.parametrize("family", FAMILIES)
    def test_newton_agrees_with_recurrence(self, family):
        s = s_polynomial(family, 40)
        assert solve_t_notplus(s, 40, "newton") == solve_t_notplus(s, 40, "recurrence")

    def test_functional_equation(self):
        s = s_polynomial([P("2413"), P("3142")], 25)
        u = solve_t_notplus(s, 25)
        t = t_from_t_notplus(u)
        z = TruncatedSeries.z(25)
        assert u == z + u * t + s.compose(t)
        assert t * (1 - u) == u

    def test_nonsimple_family_rejected(self):
        with pytest.raises(ValueError):
            s_polynomial([P("1324")], 5)

    def test_occ_series(self):
        fam = [P("2413"), P("3142"), P("24153")]
        occ = occ_series(P("2413"), fam, 6)
        assert occ[0] == 1
        assert occ[1] == occ_count(P("2413"), P("24153"))

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_occurrence_sum_is_scaled_derivative(self, d):
        fam = [P("2413"), P("3142")]
        s = s_polynomial(fam, 8)
        deriv = s
        for _ in range(d):
            deriv = deriv.derivative()
        total = sum((occ_series(theta, fam, deriv.order) for theta in all_permutations(d)),
                    TruncatedSeries.zero(deriv.order))
        assert total == deriv / factorial(d)


class TestMarkedSeries:
    def setup_method(self):
        self.order = 20
        s = s_polynomial([P("2413"), P("3142")], self.order)
        self.u = solve_t_notplus(s, self.order)
        self.t = t_from_t_notplus(self.u)
        self.pack = marked_series(self.u, self.t, s)

    def test_constant_terms(self):
        pk = self.pack
        assert pk.t_plus[0] == 1 and pk.t_minus[0] == 1
        assert pk.t_np_plus[0] == 0 and pk.t_nm_minus[0] == 0
        assert pk.t_nm_plus[0] == 1 and pk.t_np_minus[0] == 1

    def test_symmetries(self):
        pk = self.pack
        assert pk.t_plus == pk.t_minus
        assert pk.t_nm_minus == pk.t_np_plus
        assert pk.t_np_minus == pk.t_nm_plus
        assert pk.t_np_prime == pk.t_nm_prime == self.u.derivative()
        assert pk.t_prime == self.t.derivative()

    def test_nonnegative_integral(self):
        for name in ("t_prime", "t_plus", "t_minus", "t_np_plus", "t_np_minus", "w"):
            f = getattr(self.pack, name)
            assert f.is_integral() and f.is_nonnegative(), name


def brute_decorated_counts(family, n, k):
    counts = Counter()
    for t in canonical_trees(family, n):
        for I in combinations(range(1, n + 1), k):
            counts[induced_tree_with_sources(t, I)] += 1
    return counts


class TestDecorated:
    @pytest.mark.parametrize("family", FAMILIES[:2])
    @pytest.mark.parametrize("n,k", [(4, 2), (5, 2), (5, 3), (6, 3), (6, 4), (7, 3)])
    def test_against_exhaustive_marking(self, family, n, k):
        brute = brute_decorated_counts(family, n, k)
        for (t0, v_s), count in brute.items():
            got = decorated_tree_series(t0, v_s, family, n)[n]
            assert got == count, (t0, sorted(v_s))
        # decorated trees never produced by the brute force must have zero coefficient
        seen_shapes = {t0 for t0, _ in brute}
        for t0 in seen_shapes:
            for v_s in decorations(t0):
                if (t0, v_s) not in brute:
                    assert decorated_tree_series(t0, v_s, family, n)[n] == 0

    def test_decoration_validation(self):
        t0 = parse_tree("([2 4 1 3] L L L L)")
        with pytest.raises(ValueError):
            decorated_tree_series(t0, frozenset(), [P("2413")], 6)
        with pytest.raises(ValueError):
            decorated_tree_series(t0, {(), (0,)}, [P("2413")], 6)
        assert decorations(parse_tree("(+ (- L L) L)")) == [
            frozenset(), frozenset({()}), frozenset({(0,)}), frozenset({(), (0,)})]


def brute_density(pi, family, n):
    perms = enumerate_class(family, n)
    total = sum(occ_count(pi, s) for s in perms)
    return Fraction(total, comb(n, len(pi)) * len(perms))


class TestExactDensities:
    @pytest.mark.parametrize("family", FAMILIES[:2])
    def test_against_brute_force(self, family):
        for n in range(3, 8):
            for k in range(2, min(n, 4) + 1):
                for pi in all_permutations(k):
                    assert exact_expected_occ(pi, family, n) == brute_density(pi, family, n), (pi, n)

    def test_marked_count_single_point(self):
        assert marked_tree_count(P("1"), (), 5) == 5 * 90

    def test_example_value(self):
        assert exact_expected_occ(P("12"), (), 3) == Fraction(1, 2)

    def test_size_errors(self):
        with pytest.raises(ValueError):
            exact_expected_occ(P("123"), (), 2)
        with pytest.raises(ValueError):
            exact_expected_occ(P("12"), (), 10, order=5)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(2, 4), st.integers(5, 12), st.sampled_from(FAMILIES))
    def test_densities_sum_to_one(self, k, n, family):
        total = sum(exact_expected_occ(pi, family, n) for pi in all_permutations(k))
        assert total == 1

from decimal import Decimal
from itertools import combinations
from math import comb, gamma, isclose, pi, sqrt

import pytest
from scipy.optimize import brentq, minimize_scalar

from subperm.perm import Permutation, all_permutations, ascents_descents, is_simple, occ_count
from subperm.perm import parse_permutation as P
from subperm.series import class_counts
from subperm.singular import (
    CRITICAL,
    DEGENERATE,
    STANDARD,
    FiniteFamily,
    RegimeReport,
    SymbolicFamily,
    av321_simple_statistics,
    av321_simples,
    b_pi_constant,
    builtin_family,
    classify_regime,
    degenerate_limit,
    increasing_oscillations,
    lambda_eval,
    limit_density_stable,
    limit_density_standard,
    log_transfer_estimate,
    nu_stable,
    p_from_occ,
    regime_report,
    solve_kappa,
    transfer_estimate,
)
from subperm.trees import plane_shapes


def inversions(sigma):
    return occ_count(P("21"), sigma)


def inversion_graph_is_path(sigma):
    n = len(sigma)
    edges = [(i, j) for i, j in combinations(range(n), 2) if sigma[i] > sigma[j]]
    if len(edges) != n - 1:
        return False
    deg = [0] * n
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    return max(deg) <= 2  # connected because simple


def brute_oscillations(max_size):
    return [s for m in range(4, max_size + 1) for s in all_permutations(m)
            if is_simple(s) and inversion_graph_is_path(s)]


class TestSeparableConstants:
    def test_closed_forms(self):
        r = regime_report(FiniteFamily(()))
        assert r.regime == STANDARD
        assert abs(r.kappa - (sqrt(2) - 1)) < 1e-10
        assert abs(r.rho - (3 - 2 * sqrt(2))) < 1e-10
        assert abs(r.p - 0.5) < 1e-12
        assert abs(r.tau - r.kappa / (1 + r.kappa)) < 1e-15
        assert abs(r.lambda_ - 1 / (1 - r.tau) ** 2) < 1e-12

    def test_b12_is_p(self):
        fam = FiniteFamily(())
        r = regime_report(fam)
        assert isclose(b_pi_constant(P("12"), r, fam), r.p, rel_tol=1e-12)
        assert isclose(b_pi_constant(P("21"), r, fam), 1 - r.p, rel_tol=1e-12)

    def test_limit_densities_sum_to_one(self):
        r = regime_report(FiniteFamily(()))
        for k in range(1, 6):
            assert abs(sum(limit_density_standard(p, r) for p in all_permutations(k)) - 1) < 1e-12
        assert limit_density_standard(P("123"), r) == pytest.approx(0.25)
        assert limit_density_standard(P("2413"), r) == 0


class TestFiniteFamilyOracles:
    FAM = [P("2413"), P("3142")]

    def z_of_u(self, u):
        t = u / (1 - u)
        return u - u * t - 2 * t ** 4

    def test_kappa_by_brentq(self):
        kappa = solve_kappa(FiniteFamily(self.FAM))
        ref = brentq(lambda t: 8 * t ** 3 - (2 / (1 + t) ** 2 - 1), 0, 1, xtol=1e-15)
        assert abs(kappa - ref) < 1e-10

    def test_rho_is_max_of_inverse_map(self):
        r = regime_report(FiniteFamily(self.FAM))
        opt = minimize_scalar(lambda u: -self.z_of_u(u), bounds=(0, 0.5), method="bounded",
                              options={"xatol": 1e-12})
        assert abs(r.rho - (-opt.fun)) < 1e-9
        assert abs(r.tau - opt.x) < 1e-5
        assert abs(lambda_eval(FiniteFamily(self.FAM), r.tau) - (r.tau - r.rho)) < 1e-12

    def test_rho_matches_coefficient_ratio(self):
        r = regime_report(FiniteFamily(self.FAM))
        c = class_counts(self.FAM, 300)
        # a_n ~ C rho^-n n^-3/2, so the ratio carries a (n/(n+1))^(3/2) factor
        n = 299
        assert abs(c[-2] / c[-1] * (n / (n + 1)) ** 1.5 - r.rho) < 1e-4 * r.rho

    def test_p_formula(self):
        fam = FiniteFamily(self.FAM)
        r = regime_report(fam)
        k = r.kappa
        occ12 = 2 * 3 * k ** 2  # each of 2413, 3142 has three 12-occurrences
        occ21 = 2 * 3 * k ** 2
        assert fam.occ12(k) == pytest.approx(occ12)
        assert fam.occ21(k) == pytest.approx(occ21)
        assert r.p == pytest.approx(p_from_occ(k, occ12, occ21))
        assert r.p == pytest.approx(0.5)


class TestIncreasingOscillations:
    def test_example_constants(self):
        r = regime_report(builtin_family("increasing-oscillations"))
        assert r.regime == STANDARD
        assert abs(r.kappa - 0.2709) < 5e-4
        assert abs(r.p - 0.5353) < 5e-4

    def test_closed_forms_match_members(self):
        members = brute_oscillations(8)
        assert [sum(len(s) == m for s in members) for m in range(4, 9)] == [2] * 5
        finite = FiniteFamily(members)
        spec = increasing_oscillations()
        x = 0.02
        for name in ("s", "s_prime", "s_double_prime", "occ12", "occ21"):
            exact, approx = getattr(spec, name)(x), getattr(finite, name)(x)
            assert abs(exact - approx) < 1e-8 * max(1.0, abs(exact)), name

    def test_occurrence_identity(self):
        spec = increasing_oscillations()
        for x in (0.1, 0.2, 0.3):
            assert spec.occ12(x) + spec.occ21(x) == pytest.approx(spec.s_double_prime(x) / 2)


class TestAv321:
    def test_statistics_against_brute_force(self):
        stats = av321_simple_statistics(8)
        for m in range(4, 9):
            members = [s for s in all_permutations(m) if is_simple(s) and occ_count(P("321"), s) == 0]
            assert stats[m] == (len(members), sum(inversions(s) for s in members)), m

    def test_counts(self):
        stats = av321_simple_statistics(12)
        assert [stats[m][0] for m in range(4, 13)] == [2, 2, 7, 14, 37, 90, 233, 602, 1586]

    def test_example_constants(self):
        r = regime_report(av321_simples())
        assert r.regime == STANDARD
        assert abs(r.kappa - 0.2486) < 5e-4
        lo, hi = r.p_interval
        assert 0.575 <= lo <= hi <= 0.625
        assert abs(lo - 0.577) <= 0.002 and abs(hi - 0.622) <= 0.002
        assert lo <= r.p <= hi

    def test_inversion_tail_bound(self):
        # a 321-avoider of size m has at most m^2/4 inversions
        for m in range(2, 8):
            worst = max(inversions(s) for s in all_permutations(m) if occ_count(P("321"), s) == 0)
            assert worst <= m * m / 4


class TestRegimes:
    def _family(self, r, s_prime_value):
        return SymbolicFamily("test", r, lambda x: x, lambda x: s_prime_value * x / r, lambda x: 1.0,
                              lambda x: 0.0, lambda x: 0.0)

    def test_critical_and_degenerate(self):
        r = 0.3
        c = 2 / (1 + r) ** 2 - 1
        assert classify_regime(self._family(r, c)) == CRITICAL
        assert classify_regime(self._family(r, 0.5 * c)) == DEGENERATE
        assert classify_regime(self._family(r, 2 * c)) == STANDARD

    def test_exact_limit_overrides_probing(self):
        r = 0.3
        c = 2 / (1 + r) ** 2 - 1
        fam = self._family(r, 0.1)
        fam.s_prime_limit = c
        assert classify_regime(fam) == CRITICAL
        report = regime_report(fam)
        assert report.regime == CRITICAL and report.kappa is None and report.p is None

    def test_entire_series_is_standard(self):
        assert classify_regime(FiniteFamily([P("2413")])) == STANDARD

    def test_report_json_round_trip(self):
        r = regime_report(av321_simples())
        back = RegimeReport.from_json(r.to_json())
        assert back.regime == r.regime
        assert back.kappa == pytest.approx(r.kappa, rel=1e-14)
        assert back.p_interval == pytest.approx(r.p_interval, rel=1e-14)

    def test_gamma_table(self):
        r = regime_report(FiniteFamily(()))
        table = r.gamma_table()
        assert table[("", "'")] == pytest.approx(r.gamma * r.lambda_ ** 2)
        assert table[("not+", "+")] == pytest.approx(r.gamma)


class TestStable:
    @pytest.mark.parametrize("delta", [1.1, 1.5, 1.9])
    def test_nu_sums_to_one(self, delta):
        for k in range(1, 7):
            assert abs(sum(nu_stable(t, delta) for t in plane_shapes(k)) - 1) < 1e-9

    def test_nu_binary_k2(self):
        assert nu_stable(plane_shapes(2)[0], 1.5) == pytest.approx(1.0)

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            nu_stable(plane_shapes(3)[0], 2.0)

    def test_stable_densities(self):
        table = {P("12"): 0.5, P("21"): 0.5, P("123"): 0.1}
        value = limit_density_stable(P("123"), 1.5, table)
        assert 0 < value < 1
        full = {p: 1 / 2 for p in all_permutations(2)}
        full.update({p: 1 / 6 for p in all_permutations(3)})
        total = sum(limit_density_stable(p, 1.5, full) for p in all_permutations(3))
        assert total == pytest.approx(1.0)

    def test_table_validation(self):
        with pytest.raises(ValueError):
            limit_density_stable(P("12"), 1.5, {P("12"): 0.7, P("21"): 0.7})
        with pytest.raises(KeyError):
            limit_density_stable(P("12"), 1.5, {P("21"): 0.5})

    def test_degenerate_limit(self):
        out = degenerate_limit(2, {"12": 3, "21": 1})
        assert out == {P("12"): 0.75, P("21"): 0.25}
        with pytest.raises(ValueError):
            degenerate_limit(2, {"12": 0})


class TestTransfer:
    def test_matches_coefficients(self):
        r = regime_report(FiniteFamily(()))
        counts = class_counts((), 300)
        est = transfer_estimate(-r.beta * r.lambda_, r.rho, 0.5, 300)
        assert isinstance(est, Decimal)
        assert abs(float(Decimal(counts[-1]) / est) - 1) < 0.01

    def test_formula_and_log_form(self):
        value = transfer_estimate(2.0, 0.5, 0.5, 10)
        expected = 2.0 * 2 ** 10 * 10 ** -1.5 / gamma(-0.5)
        assert float(value) == pytest.approx(expected)
        assert log_transfer_estimate(2.0, 0.5, 0.5, 10) == pytest.approx(
            __import__("math").log(abs(expected)))
        assert float(transfer_estimate(1.0, 0.25, -1.5, 5)) == pytest.approx(4 ** 5 * 5 ** 0.5 / gamma(1.5))

    def test_rejects_integer_exponent(self):
        with pytest.raises(ValueError):
            transfer_estimate(1.0, 0.5, 1.0, 10)

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from percolab import bounds as B
from percolab.pointprocess import DensityPair, RadioParams
from percolab.units import from_per_km2, to_per_km2

P7 = RadioParams(100, 120, 150, 240)   # far-field: r_I >= R_p + R_I
P4 = RadioParams(50, 80, 50, 80)
P8 = RadioParams(200, 250, 200, 250)   # r_I = r_p / 0.8


class TestConstants:
    def test_defaults_and_bracket(self):
        c = B.PercolationConstants()
        assert c.lambda_c_unit == 1.44 and c.bracket == (0.768, 3.372)
        lo, hi = c.bracket_constants()
        assert lo.lambda_c_unit == 0.768 and hi.lambda_c_unit == 3.372

    def test_bracket_must_contain_value(self):
        with pytest.raises(ValueError):
            B.PercolationConstants(5.0)

    def test_lambda_c_scaled(self):
        assert to_per_km2(B.lambda_c_scaled(50.0)) == pytest.approx(576.0, rel=1e-12)
        assert B.lambda_c_scaled(1.0) == 1.44
        assert B.lambda_c_scaled(25.0) == pytest.approx(4 * B.lambda_c_scaled(50.0))
        with pytest.raises(ValueError):
            B.lambda_c_scaled(0.0)


class TestOpportunity:
    def test_zero_density(self):
        assert B.opportunity_probability(P7, 0.0) == 1.0

    def test_region_value(self):
        # I = 14400 so the exclusion area is pi (240^2 + 120^2 - 120^2) = pi * 57600
        expected = math.exp(-1e-5 * math.pi * 57600)
        assert B.opportunity_probability(P7, from_per_km2(10)) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.1637, abs=5e-5)

    def test_site_occupation(self):
        assert B.site_occupation_probability(P7, DensityPair(0.0, 1e-5)) == 0.0
        assert B.site_occupation_probability(P7, DensityPair(1.0, 0.0)) == pytest.approx(1.0)
        d = DensityPair(1e-4, 2e-6)
        expected = (1 - math.exp(-1e-4 * 150 ** 2 / 8)) * B.opportunity_probability(P7, 2e-6)
        assert B.site_occupation_probability(P7, d) == pytest.approx(expected, rel=1e-14)

    def test_site_occupation_monte_carlo(self):
        # a cell of side r_p / (2 sqrt 2) holds at least one user that sees an opportunity
        from percolab.oppgraph import evaluate_opportunities
        from percolab.pointprocess import Window, sample_realization
        side = P7.r_p / (2 * math.sqrt(2))
        d = DensityPair(2e-4, 2e-6)
        w = Window.for_params(side, side, P7)
        hits = np.array([evaluate_opportunities(sample_realization(P7, d, w, 31, i)).any()
                         for i in range(4000)])
        p = B.site_occupation_probability(P7, d)
        assert abs(hits.mean() - p) < 3 * math.sqrt(p * (1 - p) / hits.size)


class TestDegree:
    def test_zero_primary_density(self):
        d = DensityPair(3e-5, 0.0)
        assert B.cond_avg_degree(P8, d) == d.lambda_S * math.pi * P8.r_p ** 2
        assert B.g(P8, 0.0) == 1.0

    def test_far_field_matches_simplified_form(self):
        for lam in (1e-6, 5e-6, 2e-5):
            d = DensityPair(1e-4, lam)
            assert B.cond_avg_degree(P7, d) == pytest.approx(
                B.cond_avg_degree_far_field(P7, d), rel=1e-6)

    def test_far_field_requires_regime(self):
        with pytest.raises(ValueError):
            B.cond_avg_degree_far_field(P4, DensityPair(1e-4, 1e-5))

    def test_union_integral_far_field_identity(self):
        # when r_I >= R_p + R_I every probe in the union lies inside the pair's union
        for t in (0.0, 37.0, 150.0):
            expected = 2 * math.pi * 120 ** 2 - B.lens_area(t, 120.0, 120.0)
            assert B.union_overlap_integral_quad(P7, t) == pytest.approx(expected, rel=1e-7)

    @pytest.mark.parametrize("t", [0.0, 60.0, 140.0])
    def test_union_integral_against_sobol(self, t):
        est, se = B.union_overlap_integral_qmc(P4, t, n=2 ** 15)
        assert abs(B.union_overlap_integral_quad(P4, t) - est) < 4 * se + 1e-6 * est

    def test_union_integral_at_zero_is_pi_I(self):
        I = B.overlap_integral(P4.R_I, P4.R_p, P4.r_I)
        assert B.union_overlap_integral_quad(P4, 0.0) == pytest.approx(math.pi * I, rel=1e-6)

    def test_g_independent_of_secondary_density(self):
        a = B.cond_avg_degree(P8, DensityPair(1e-5, 2.5e-6)) / (1e-5 * math.pi * P8.r_p ** 2)
        b = B.cond_avg_degree(P8, DensityPair(7e-5, 2.5e-6)) / (7e-5 * math.pi * P8.r_p ** 2)
        assert a == pytest.approx(b, rel=1e-12)

    def test_g_decreasing(self):
        lams = np.linspace(0, 3e-5, 13)
        gs = np.array([B.g(P4, lam) for lam in lams])
        assert np.all(np.diff(gs) < 0)
        assert np.all((gs > 0) & (gs <= 1))

    def test_bidirectional_implies_unidirectional(self):
        # P(both ends free) = opp * g can never exceed P(one end free) = opp
        for lam in np.linspace(0, 3e-5, 7):
            opp = B.opportunity_probability(P4, lam)
            assert 0 <= opp * B.g(P4, lam) <= opp <= 1

    def test_g_at_least_unconditional_opportunity(self):
        # Both opportunity events shrink as primaries are added, so they are
        # positively correlated (Harris-FKG): conditioning on A being free
        # can only raise the chance that a neighbor is free too.
        for lam in np.linspace(1e-6, 3e-5, 7):
            assert B.g(P4, lam) >= B.opportunity_probability(P4, lam)

    def test_g_against_simulated_neighbor_opportunity(self):
        from percolab.oppgraph import close_pairs, evaluate_opportunities
        from percolab.pointprocess import Window, sample_realization
        lam = 1e-5
        w = Window.for_params(600, 600, P4)
        rows = []
        for i in range(400):
            r = sample_realization(P4, DensityPair(4e-4, lam), w, 12, i)
            f = evaluate_opportunities(r)
            e = close_pairs(r.secondary, P4.r_p)
            a, b = f[e[:, 0]], f[e[:, 1]]
            rows.append((2 * np.sum(a & b), np.sum(a) + np.sum(b)))
        both, one = np.array(rows, float).T
        ratio = both.sum() / one.sum()
        se = math.sqrt(((both - ratio * one) ** 2).sum() / (len(one) * (len(one) - 1))) / one.mean()
        assert abs(ratio - B.g(P4, lam)) < 3 * se
        assert ratio > B.opportunity_probability(P4, lam) + 3 * se

    def test_degree_curve_is_unimodal(self):
        d = DensityPair.per_km2(25, 2.5)
        r_ps = [50, 100, 200, 300, 400, 500, 600, 800, 1000]
        mus = np.array([B.cond_avg_degree(RadioParams(200, 250, r, r / 0.8), d) for r in r_ps])
        k = int(np.argmax(mus))
        assert 0 < k < len(mus) - 1
        assert np.all(np.diff(mus[:k + 1]) > 0) and np.all(np.diff(mus[k:]) < 0)

    def test_asymptotic_bound(self):
        d = DensityPair(5e-5, 5e-6)
        for r_I in np.linspace(400, 2000, 6):
            p = RadioParams(100, 120, 0.6 * r_I, r_I)
            assert B.cond_avg_degree(p, d) <= B.mu_asymptotic_bound(p, d)
        p = RadioParams(100, 120, 300, 500)
        assert B.mu_asymptotic_bound(p, DensityPair(2.5e-5, 5e-6)) == pytest.approx(
            B.mu_asymptotic_bound(p, d) / 2)
        with pytest.raises(ValueError):
            B.mu_asymptotic_bound(P4, d)


class TestInverse:
    def test_identity(self):
        assert B.g_inverse(P4, 1.0) == 0.0

    @pytest.mark.parametrize("y", [0.9, 0.5, 0.1, 1e-3, 1e-6])
    def test_round_trip(self, y):
        lam = B.g_inverse(P4, y)
        assert abs(B.g(P4, lam) - y) <= 1e-9

    def test_domain(self):
        for y in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                B.g_inverse(P4, y)


class TestOuterBound:
    def test_precondition_boundary(self):
        lam = 1 / (math.pi * P4.r_p ** 2)
        curve = B.outer_bound_curve(P4, [0.5 * lam, lam, 3 * lam])
        assert curve.lambda_S.tolist() == [lam, 3 * lam]
        assert curve.lambda_PT_star[0] == 0.0
        assert len(curve.absent) == 1

    def test_monotone(self):
        grid = from_per_km2(np.array([200, 400, 800, 1600]))
        curve = B.outer_bound_curve(P4, grid)
        assert np.all(np.diff(curve.lambda_PT_star) > 0)


class TestInnerBound:
    def test_dependence_range_examples(self):
        assert B.dependence_range(P7) == 14
        with pytest.warns(UserWarning):
            equal = RadioParams(10, 80, 80, 80)
        assert B.dependence_range(equal) == 9

    @given(st.floats(1, 500), st.floats(1, 500), st.floats(0.01, 0.99))
    def test_dependence_range_formula(self, R_I, r_I, frac):
        p = RadioParams(50.0, R_I, frac * r_I, r_I)
        reach = max(Fraction(R_I), Fraction(r_I)) + Fraction(p.r_p) / 4
        assert B.dependence_range(p) == math.ceil(8 * reach / Fraction(p.r_p)) - 1
        assert B.dependence_range(p) >= 9

    def test_vacuous_at_moderate_density(self):
        b = B.inner_bound_lambda_pt(P7, from_per_km2(1000))
        assert not b.positive and b.lambda_PT < 0

    def test_large_density_limit(self):
        # ln(1/(1 - 3^-m)) ~ 3^-m once the numerator has saturated
        b = B.inner_bound_lambda_pt(P7, 10.0)
        assert b.positive
        m = (2 * 14 + 1) ** 2
        expected = -m * math.log10(3) - math.log10(math.pi * 240 ** 2)
        assert b.log10_abs == pytest.approx(expected, abs=1e-9)

    def test_increasing(self):
        vals = [B.inner_bound_lambda_pt(P7, lam) for lam in (1e-4, 1e-3, 1e-2, 0.1, 1.0)]
        flags = [v.positive for v in vals]
        assert flags == sorted(flags)          # negative values come first
        for a, b in zip(vals, vals[1:]):
            if not a.positive and not b.positive:
                assert b.log10_abs < a.log10_abs
            elif a.positive and b.positive:
                assert b.log10_abs >= a.log10_abs

    def test_domain(self):
        with pytest.raises(ValueError):
            B.inner_bound_lambda_pt(P7, 0.0)

    def test_curve_marks_vacuous_points(self):
        curve = B.inner_bound_curve(P7, [1e-4, 1e-3])
        assert len(curve) == 0 and len(curve.absent) == 2


class TestT22:
    def test_region_value(self):
        v = B.t22_upper_bound(P7)
        assert v == pytest.approx(1.44 / 207900, rel=1e-15)
        assert to_per_km2(v) == pytest.approx(6.93, abs=5e-3)

    def test_scaling(self):
        doubled = RadioParams(100, 240, 300, 480)
        assert B.t22_upper_bound(doubled) == pytest.approx(B.t22_upper_bound(P7) / 4)

    def test_bracket_contains_default(self):
        lo, hi = B.DEFAULT_CONSTANTS.bracket_constants()
        assert B.t22_upper_bound(P7, lo) < B.t22_upper_bound(P7) < B.t22_upper_bound(P7, hi)

    def test_domain(self):
        with pytest.warns(UserWarning), pytest.raises(ValueError):
            B.t22_upper_bound(RadioParams(10, 10, 30, 14))


class TestPowerDesign:
    def test_argmax_at_interference_range(self):
        r = np.linspace(20, 418, 200)
        vals = B.power_design_bound(r, 120.0, 0.625)
        assert r[np.argmax(vals)] == 120.0

    def test_peak(self):
        peak = B.power_design_bound(120.0, 120.0, 0.625)
        assert peak == pytest.approx(1.44 / ((4 - 0.390625) * 120 ** 2), rel=1e-15)
        assert to_per_km2(peak) == pytest.approx(27.7, abs=0.05)

    def test_continuity_at_junction(self):
        left = 1.44 / (4 * 120 ** 2 - 0.625 ** 2 * 120 ** 2)
        right = 1.44 / ((4 - 0.625 ** 2) * 120 ** 2)
        assert abs(left - right) <= 1e-12 * right
        assert B.power_design_bound(120.0 * (1 + 1e-13), 120.0, 0.625) == pytest.approx(
            B.power_design_bound(120.0, 120.0, 0.625), rel=1e-12)

    def test_slopes(self):
        h = 1.0
        peak = B.power_design_bound(120.0, 120.0, 0.625)
        left = (peak - B.power_design_bound(120.0 - h, 120.0, 0.625)) / h
        right = (B.power_design_bound(120.0 + h, 120.0, 0.625) - peak) / h
        assert 0 < left < abs(right)

    @given(st.floats(0.01, 0.99))
    def test_beta_domain(self, beta):
        assert B.power_design_bound(100.0, 120.0, beta) > 0
        with pytest.raises(ValueError):
            B.power_design_bound(100.0, 120.0, 1.0 + beta)

    def test_power_map(self):
        assert B.power_map(2.0, 3.5, (2.0, 80.0)) == 80.0
        assert B.power_map(3 ** 4 * 1.5, 4.0, (1.5, 10.0)) == pytest.approx(30.0)
        vals = B.power_map(np.linspace(0.1, 10, 20), 3.0, (1.0, 100.0))
        assert np.all(np.diff(vals) > 0)

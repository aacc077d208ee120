"""Tests for the pseudosolution family and its source term."""
from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest

from gsqg.pseudo import (
    UnderResolvedError,
    admissible_beta,
    default_grid,
    evaluate_pseudosolution,
    grid_seed,
    make_pseudo_params,
    perturbation_field,
    points_per_wavelength,
    predicted_inflation_lower_bound,
    source_term,
)
from gsqg.spectral import GridSpec, SpectralField, dealias, l2_norm, sobolev_norm

C, K = 0.1, 5.0


@lru_cache(maxsize=None)
def params(gamma, beta, N=16, K=K):
    return make_pseudo_params(gamma, beta, N, C, K, seed=grid_seed(), delta_target=0.5)


def without_f2(p):
    return replace(p, f2=p.f2.scaled(0.0))


def fitted_slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


class TestParams:
    def test_admissible_window(self):
        admissible_beta(2.2, 0.5)
        with pytest.raises(ValueError, match="2\\+gamma"):
            admissible_beta(2.5, 0.5)
        with pytest.raises(ValueError, match="3/2\\+gamma"):
            admissible_beta(1.9, 0.5)

    def test_construction(self):
        p = params(0.5, 2.2)
        assert p.f1.support[1] < p.f2.support[0]
        assert 2 * p.r_cK / 3 <= p.f2.support[0] * (1 + 1e-12)
        assert p.f2.support[1] <= 1.5 * p.r_cK * (1 + 1e-12)
        assert p.amplitude == pytest.approx((p.r_cK / p.N) ** p.beta)

    def test_with_N_shares_profiles(self):
        p = params(0.5, 2.2)
        q = p.with_N(64)
        assert q.N == 64 and q.f1 is p.f1 and q.omega is p.omega

    def test_rejects_bad_fields(self):
        p = params(0.5, 2.2)
        for kw in ({"c": 1.5}, {"K": 0.5}, {"N": 0}, {"beta": 2.6}):
            with pytest.raises(ValueError):
                replace(p, **kw)
        with pytest.raises(ValueError, match="disjoint"):
            replace(p, f1=p.f2)


class TestEvaluate:
    def test_radial_part_only(self):
        p = without_f2(params(0.5, 2.2))
        g = default_grid(p, n=256)
        theta = evaluate_pseudosolution(p, 0.0, g)
        ref = dealias(SpectralField.from_values(g, p.f1(g.polar[0])))
        assert np.max(np.abs(theta.values - ref.values)) <= 1e-14 * ref.max_abs()

    def test_initial_l2_distance_bound(self):
        p = params(0.5, 2.2)
        for N in (16, 32, 64):
            q = p.with_N(N)
            d = l2_norm(perturbation_field(q, 0.0, default_grid(q)))
            assert 0 < d <= q.c * q.amplitude

    def test_l2_distance_independent_of_time(self):
        p = params(0.5, 2.2)
        g = default_grid(p, n=2048)
        d = [l2_norm(perturbation_field(p, t, g)) for t in (0.0, 0.5, 1.0)]
        assert np.ptp(d) <= 1e-10 * d[0]

    def test_perturbation_is_difference(self):
        p = params(0.5, 2.2)
        g = default_grid(p)
        theta = evaluate_pseudosolution(p, 0.3, g)
        radial = evaluate_pseudosolution(without_f2(p), 0.3, g)
        pert = perturbation_field(p, 0.3, g)
        assert np.allclose((theta - radial).values, pert.values, rtol=0, atol=1e-13 * radial.max_abs())

    def test_resolution_guard(self):
        p = params(0.5, 2.2, N=64)
        g = GridSpec(128, 4 * p.r_cK)
        assert points_per_wavelength(p, g) < 8
        with pytest.raises(UnderResolvedError, match="resolution guard"):
            evaluate_pseudosolution(p, 0.0, g)
        with pytest.raises(UnderResolvedError):
            source_term(p, 0.0, g)

    def test_box_guard(self):
        p = params(0.5, 2.2)
        with pytest.raises(UnderResolvedError, match="box"):
            evaluate_pseudosolution(p, 0.0, GridSpec(1024, 2.0 * p.r_cK))

    def test_negative_time_rejected(self):
        p = params(0.5, 2.2)
        with pytest.raises(ValueError):
            evaluate_pseudosolution(p, -1.0, default_grid(p))


class TestSource:
    @pytest.mark.parametrize("route", ["structured", "direct"])
    def test_radial_data_is_steady(self, route):
        p = without_f2(params(0.5, 2.2))
        g = default_grid(p, n=256)
        F = source_term(p, 0.2, g, route)
        scale = np.max(np.abs(p.f1(g.polar[0], 1)))
        assert F.max_abs() <= 1e-10 * scale

    @pytest.mark.parametrize("gb", [(0.5, 2.2), (0.0, 1.8), (-0.5, 1.2)])
    def test_two_routes_agree(self, gb):
        p = params(*gb)
        g = default_grid(p)
        for t in (0.0, 0.4):
            a = source_term(p, t, g, "structured")
            b = source_term(p, t, g, "direct")
            assert l2_norm(a - b) <= 1e-6 * l2_norm(a)

    def test_unknown_route(self):
        p = params(0.5, 2.2)
        with pytest.raises(ValueError, match="route"):
            source_term(p, 0.0, default_grid(p), "bogus")


NS = (8, 16, 32, 64, 128)
NS_LATE = (32, 64, 128, 256)


@lru_cache(maxsize=None)
def source_norms(gamma, beta):
    p = params(gamma, beta)
    l2, hs = [], []
    for N in sorted(set(NS + NS_LATE)):
        q = p.with_N(N)
        F = source_term(q, 0.0, default_grid(q, n=max(8 * N, 256)))
        l2.append(l2_norm(F))
        hs.append(sobolev_norm(F, beta + 0.5))
    return np.array(l2), np.array(hs)


def slopes(gamma, beta, Ns):
    allN = sorted(set(NS + NS_LATE))
    idx = [allN.index(N) for N in Ns]
    l2, hs = source_norms(gamma, beta)
    return fitted_slope(Ns, l2[idx]), fitted_slope(Ns, hs[idx])


class TestSourceScaling:
    @pytest.mark.xfail(
        strict=True,
        reason="v(p) is nearly orthogonal to grad p for a single azimuthal mode; the "
        "leading N^{-(2b-1-g)} term cancels and the measured rate is -(2b-g)",
    )
    def test_l2_slope_matches_upper_bound_rate(self):
        slope, _ = slopes(0.5, 2.2, NS)
        print(f"L2 slope {slope:.3f}, expected {-(2 * 2.2 - 1 - 0.5):.3f}")
        assert abs(slope + 2.9) <= 0.15

    @pytest.mark.xfail(strict=True, reason="same cancellation, measured rate -(b-1/2-g)")
    def test_h_beta_half_slope_matches_upper_bound_rate(self):
        _, slope = slopes(0.5, 2.2, NS)
        print(f"H^(b+1/2) slope {slope:.3f}, expected {-(2.2 - 1.5 - 0.5):.3f}")
        assert abs(slope + 0.2) <= 0.15

    @pytest.mark.parametrize("gb", [(0.5, 2.2), (0.0, 1.8), (-0.5, 1.2)])
    def test_decay_is_at_least_upper_bound_rate(self, gb):
        gamma, beta = gb
        s_l2, s_hs = slopes(gamma, beta, NS)
        assert s_l2 <= -(2 * beta - 1 - gamma) + 0.15
        assert s_hs <= -(beta - 1.5 - gamma) + 0.15

    @pytest.mark.parametrize("gb", [(0.5, 2.2), (0.0, 1.8), (-0.5, 1.2)])
    def test_measured_rate_after_cancellation(self, gb):
        # Below N=32 the radial structure of f2 still dominates the derivatives.
        gamma, beta = gb
        s_l2, s_hs = slopes(gamma, beta, NS_LATE)
        assert s_l2 == pytest.approx(-(2 * beta - gamma), abs=0.15)
        assert s_hs == pytest.approx(-(beta - 0.5 - gamma), abs=0.15)


class TestPredictor:
    def test_zero_before_onset(self):
        p = params(0.5, 2.2)
        assert predicted_inflation_lower_bound(p, 1.0 / p.K) == 0.0
        assert predicted_inflation_lower_bound(p, 0.0) == 0.0

    def test_power_law_in_K(self):
        p = params(0.5, 2.2, N=4096)
        t = 10.0
        a = predicted_inflation_lower_bound(replace(p, K=1000.0), t)
        b = predicted_inflation_lower_bound(replace(p, K=2000.0), t)
        assert b / a == pytest.approx(2**p.beta, rel=1e-3)

    def test_large_N_limit(self):
        p = params(0.5, 2.2)
        t = 1.0
        lim = p.c * (p.K * t - 1) ** p.beta
        vals = [predicted_inflation_lower_bound(p.with_N(N), t) for N in (10**3, 10**6, 10**9)]
        assert vals[0] < vals[1] < vals[2] <= lim
        assert vals[2] == pytest.approx(lim, rel=1e-7)


class TestGrowth:
    @pytest.mark.parametrize("gb", [(0.5, 2.2), (0.0, 1.8)])
    def test_h_beta_grows_like_t_beta(self, gb):
        gamma, beta = gb
        p = params(gamma, beta)
        g = default_grid(p, n=1024)
        ts = np.linspace(1 / p.K, 5 / p.K, 9)
        h = np.array([sobolev_norm(evaluate_pseudosolution(p, t, g), beta) for t in ts])
        assert np.all(np.diff(h) >= 0)
        late = p.K * ts >= 3
        assert fitted_slope(ts[late], h[late]) == pytest.approx(beta, abs=0.3)


@pytest.mark.slow
class TestNUniformity:
    @pytest.mark.parametrize(
        "gb",
        [
            pytest.param(
                (0.5, 2.2),
                marks=pytest.mark.xfail(
                    strict=True,
                    reason="N=16 carries an O(1/N) radial-derivative excess of about 12%; "
                    "N>=32 agree to 0.5%",
                ),
            ),
            (0.0, 1.8),
            (-0.5, 1.2),
        ],
    )
    def test_initial_norm_uniform_in_N(self, gb):
        gamma, beta = gb
        p = params(gamma, beta)
        h = [
            sobolev_norm(evaluate_pseudosolution(p.with_N(N), 0.0, default_grid(p, n=2048)), beta)
            for N in (16, 32, 64, 128, 256)
        ]
        spread = (max(h) - min(h)) / min(h)
        print(f"(gamma, beta) = {gb}: spread {spread:.4f}")
        assert spread < 0.10

    def test_large_N_tail_is_uniform(self):
        p = params(0.5, 2.2)
        h = [
            sobolev_norm(evaluate_pseudosolution(p.with_N(N), 0.0, default_grid(p, n=2048)), 2.2)
            for N in (32, 64, 128, 256)
        ]
        assert (max(h) - min(h)) / min(h) < 0.05


class TestForcedTransport:
    def test_one_forced_step_has_fifth_order_local_error(self):
        from gsqg.solver import step

        p = params(0.0, 1.8)
        g = default_grid(p, n=512)
        th0 = evaluate_pseudosolution(p, 0.0, g)
        errs = []
        for dt in (4e-3, 2e-3):
            out = step(th0, dt, p.gamma, 0.0, forcing=lambda t: source_term(p, t, g, "manufactured"))
            exact = evaluate_pseudosolution(p, dt, g)
            errs.append(l2_norm(out - exact))
            assert errs[-1] < 1e-4 * l2_norm(exact - th0)
        assert np.log2(errs[0] / errs[1]) == pytest.approx(5, abs=0.5)

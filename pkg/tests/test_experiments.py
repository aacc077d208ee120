"""Tests for sweep configuration, slope fitting, verdicts and the experiment runners."""
import math
import warnings

import numpy as np
import pytest

from gsqg.experiments import (
    ExperimentResult,
    SlopeFit,
    SweepConfig,
    Verdict,
    _slope_verdict,
    check_odd_operator,
    check_operator_exactness,
    check_support_splitting,
    fit_slope,
    interaction_source,
    run_error_scaling,
    run_experiment,
    run_inflation,
    run_patch_interaction,
    run_source_scaling,
    run_verification_suite,
)
from gsqg.pseudo import UnderResolvedError
from gsqg.spectral import GridSpec, SpectralField, velocity_multipliers


class TestSweepConfig:
    def test_pairs_broadcast(self):
        cfg = SweepConfig("source_scaling", gammas=(0.5, 0.0), betas=(2.2, 1.8))
        assert cfg.pairs == [(0.5, 2.2), (0.0, 1.8)]
        cfg = SweepConfig("source_scaling", gammas=(0.0,), betas=(1.6, 1.8))
        assert cfg.pairs == [(0.0, 1.6), (0.0, 1.8)]

    @pytest.mark.parametrize(
        "kw, match",
        [
            ({"experiment": "bogus"}, "unknown experiment"),
            ({"Ns": (8, 24)}, "ratio 2"),
            ({"betas": (2.6,)}, "2\\+gamma"),
            ({"betas": (1.9,)}, "3/2\\+gamma"),
            ({"gammas": (0.5, 0.0), "betas": (2.2, 1.8, 1.7)}, "equal length"),
            ({"cfl": 1.5}, "cfl"),
            ({"c": 1.0}, "c must"),
        ],
    )
    def test_rejects(self, kw, match):
        kw.setdefault("experiment", "source_scaling")
        with pytest.raises(ValueError, match=match):
            SweepConfig(**kw)

    def test_patch_interaction_skips_beta_window(self):
        SweepConfig("patch_interaction", gammas=(-0.5, 0.0, 0.5), betas=(1.0,))

    def test_grid_n(self):
        cfg = SweepConfig("source_scaling")
        assert cfg.grid_n(8) == 256 and cfg.grid_n(64) == 512
        assert SweepConfig("source_scaling", n=300).grid_n(64) == 300


class TestFitSlope:
    def test_exact_power_law(self):
        x = np.array([8, 16, 32, 64])
        fit = fit_slope(x, 3.0 * x**-2.5)
        assert fit.slope == pytest.approx(-2.5, abs=1e-12)
        assert fit.half_width < 1e-10 and fit.n_points == 4

    def test_matches_polyfit_with_noise(self):
        rng = np.random.default_rng(3)
        x = np.geomspace(1, 100, 7)
        y = x**1.3 * np.exp(0.05 * rng.normal(size=x.size))
        fit = fit_slope(x, y)
        assert fit.slope == pytest.approx(np.polyfit(np.log(x), np.log(y), 1)[0], rel=1e-12)
        assert 0 < fit.half_width < 0.2

    def test_two_points(self):
        fit = fit_slope([1, 2], [1, 0.25])
        assert fit.slope == pytest.approx(-2) and math.isinf(fit.half_width)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            fit_slope([1], [1])


class TestVerdict:
    def test_lines(self):
        assert Verdict("6", "x", True, 1.0, "1").line().startswith("PASS criterion 6")
        assert Verdict("6", "x", False, 1.0, "1").line().startswith("FAIL")
        assert Verdict("6", "x", False, 1.0, "1", valid=False).line().startswith("INVALID")

    def test_never_fires_below_four_points(self):
        fit = fit_slope([1, 2, 4], [1, 0.5, 0.25])
        v = _slope_verdict("6", "x", fit, -1.0, 0.1)
        assert not v.valid and not v.passed
        v = _slope_verdict("6", "x", None, -1.0, 0.1)
        assert not v.valid

    def test_modes(self):
        fit = SlopeFit(-3.0, 0.01, 0.0, 5)
        assert _slope_verdict("7", "x", fit, -2.9, 0.15).passed
        assert not _slope_verdict("7", "x", fit, -2.5, 0.15).passed
        assert _slope_verdict("7", "x", fit, -2.5, 0.2, "upper").passed
        assert not _slope_verdict("7", "x", SlopeFit(-2.0, 0.0, 0.0, 4), -2.5, 0.2, "upper").passed


class TestExperimentResult:
    def make(self, figures=False):
        cfg = SweepConfig("source_scaling", figures=figures)
        res = ExperimentResult("source_scaling", cfg)
        for N in (8, 16, 32, 64):
            res.rows.append({"gamma": 0.5, "beta": 2.2, "N": N, "valid": True, "F_l2": N**-3.0, "note": 'a, "b"'})
        res.verdicts.append(Verdict("6", "ok", True, 1.0, "1"))
        return res

    def test_pass_logic(self):
        res = self.make()
        assert res.passed and not res.invalid
        res.verdicts.append(Verdict("6", "bad", False, 0.0, "1", valid=False))
        assert not res.passed and res.invalid
        assert len(res.verdicts_for("6")) == 2

    def test_write(self, tmp_path):
        paths = self.make().write(tmp_path)
        names = sorted(p.name for p in paths)
        assert names == ["source_scaling.csv", "source_scaling_verdicts.txt"]
        text = (tmp_path / "source_scaling.csv").read_text()
        assert text.splitlines()[0] == "gamma,beta,N,valid,F_l2,note"
        assert '"a, ""b"""' in text
        assert "PASS criterion 6" in (tmp_path / "source_scaling_verdicts.txt").read_text()

    def test_figures(self, tmp_path):
        paths = self.make(figures=True).write(tmp_path)
        png = [p for p in paths if p.suffix == ".png"]
        assert [p.name for p in png] == ["source_scaling_F_l2.png"]
        assert png[0].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestSourceScaling:
    def test_sweep(self):
        cfg = SweepConfig("source_scaling", gammas=(0.0,), betas=(1.8,), Ns=(32, 64, 128, 256))
        res = run_source_scaling(cfg)
        assert len(res.rows) == 4 and all(r["valid"] for r in res.rows)
        # after the cancellation of v(p).grad p the L2 rate is -(2 beta - gamma)
        assert res.fits["F_l2[gamma=0, beta=1.8]"].slope == pytest.approx(-3.6, abs=0.15)
        control = [v for v in res.verdicts if "control" in v.name]
        assert len(control) == 1 and control[0].passed and control[0].measured == 0
        assert all(v.criterion == "6" for v in res.verdicts)

    def test_workers_do_not_change_results(self):
        base = dict(experiment="source_scaling", gammas=(0.5,), betas=(2.2,), Ns=(8, 16, 32, 64))
        a = run_source_scaling(SweepConfig(**base))
        b = run_source_scaling(SweepConfig(workers=3, **base))
        assert a.rows == b.rows

    def test_zero_inputs(self):
        cfg = SweepConfig("source_scaling", Ns=(8, 16, 32, 64), zero_inputs=True)
        res = run_source_scaling(cfg)
        assert all(r["F_l2"] == 0 for r in res.rows)
        assert res.invalid and not res.passed

    def test_resolution_guard_marks_invalid(self):
        cfg = SweepConfig("source_scaling", Ns=(8, 16, 32, 64), n=64)
        res = run_source_scaling(cfg)
        assert [r["valid"] for r in res.rows] == [True, False, False, False]
        assert res.invalid and not res.passed
        assert any("resolution guard" in n for n in res.notes)


class TestErrorScaling:
    def test_short_run(self):
        cfg = SweepConfig("error_scaling", gammas=(0.5,), betas=(2.2,), Ns=(4, 8, 16, 32), n=256,
                          t_star=2e-4, record_every=1, error_control=False)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = run_error_scaling(cfg)
        zero = [v for v in res.verdicts if "Theta(0)" in v.name]
        assert zero[0].passed
        for key, ser in res.series.items():
            assert ser[0, 1] == 0 and ser[-1, 0] == pytest.approx(2e-4)
            assert np.all(np.diff(ser[:, 0]) > 0)

    def test_guard_before_running(self):
        cfg = SweepConfig("error_scaling", Ns=(8, 16, 32, 64), n=64, error_control=False)
        res = run_error_scaling(cfg)
        assert not any(r["valid"] for r in res.rows[1:])
        assert res.invalid


@pytest.fixture(scope="module")
def inflation_result():
    cfg = SweepConfig("inflation", gammas=(-0.5,), betas=(1.2,), Ns=(8,), n=256, t_star=0.01)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_inflation(cfg)


class TestInflation:
    @pytest.fixture
    def result(self, inflation_result):
        return inflation_result

    def test_pseudosolution_exponent(self, result):
        for K in (25.0, 50.0, 100.0):
            assert result.fits[f"pseudo t-exponent[K={K:g}]"].slope == pytest.approx(1.2, abs=0.3)

    def test_ratio_monotone_in_K(self, result):
        v = [v for v in result.verdicts if "increasing in K" in v.name]
        assert v[0].passed

    def test_control_and_bundled_support_check(self, result):
        assert [v for v in result.verdicts if "control" in v.name][0].passed
        assert result.verdicts_for("10")

    def test_true_rows(self, result):
        true = [r for r in result.rows if r["kind"] == "true"]
        assert len(true) == 1 and true[0]["N"] == 8
        assert true[0]["budget"] <= 0.2


class TestPatchInteraction:
    def test_gamma_zero_slope(self):
        res = run_patch_interaction(SweepConfig("patch_interaction", gammas=(0.0,), betas=(1.0,)))
        assert res.fits["F_l2[gamma=0]"].slope == pytest.approx(-2.0, abs=0.1)
        assert res.fits["F_h4[gamma=0]"].slope == pytest.approx(-2.0, abs=0.1)
        assert res.passed

    def test_zero_second_patch(self):
        res = run_patch_interaction(SweepConfig("patch_interaction", gammas=(0.5,), betas=(1.0,), zero_inputs=True,
                                                patch_n=512))
        assert res.passed and all(r["F_l2"] == 0 for r in res.rows)

    def test_box_guard(self):
        cfg = SweepConfig("patch_interaction", gammas=(0.0,), betas=(1.0,), separations=(1, 2, 4, 8))
        with pytest.raises(UnderResolvedError, match="box guard"):
            run_patch_interaction(cfg)

    def test_overlap_rejected(self):
        cfg = SweepConfig("patch_interaction", gammas=(0.0,), betas=(1.0,), patch_sigma=1 / 100)
        with pytest.raises(ValueError, match="overlap"):
            run_patch_interaction(cfg)

    def test_source_symmetric_in_patches(self):
        g = GridSpec(64, 2 * math.pi)
        rng = np.random.default_rng(0)
        a = SpectralField.from_values(g, rng.normal(size=g.shape))
        b = SpectralField.from_values(g, rng.normal(size=g.shape))
        d = interaction_source(a, b, 0.3) - interaction_source(b, a, 0.3)
        assert d.max_abs() < 1e-12 * interaction_source(a, b, 0.3).max_abs()


class TestVerification:
    def test_operator_exactness(self):
        op, div = check_operator_exactness()
        assert op < 1e-12 and div < 1e-12

    def test_odd_operator_deterministic(self):
        assert check_odd_operator(seed=4) == check_odd_operator(seed=4)

    def test_mis_signed_multiplier_is_caught(self):
        def broken(grid, gamma):
            m1, m2 = velocity_multipliers(grid, gamma)
            return np.abs(m1), m2

        assert check_odd_operator(multipliers=broken) > 0.1

    def test_support_splitting(self):
        assert check_support_splitting(2.2) >= 0.5

    def test_zero_inputs_pass(self):
        res = run_verification_suite(SweepConfig("verify", zero_inputs=True))
        assert res.passed
        assert {v.criterion for v in res.verdicts} == {"1", "2", "3"}

    def test_default_battery(self, tmp_path):
        res = run_experiment(SweepConfig("verify", cross_validate=False, output=str(tmp_path)))
        assert res.passed, res.summary()
        assert {v.criterion for v in res.verdicts} == {"1", "2", "3", "4"}
        assert (tmp_path / "verify_verdicts.txt").exists()

"""Scaling analysis: synthetic recoveries, planted ansatz collapse, bootstrap."""

import numpy as np
import pytest

from bpesim.ensemble import MomentSeries
from bpesim.scaling import (
    CollapseCurve,
    bootstrap_stderr,
    collapse_dynamics,
    collapse_objective,
    compare_decay_models,
    fit_collapse,
    fit_dynamic_exponents,
    fit_power_law,
    surface_exponents,
)


class TestFitPowerLaw:
    def test_exact_power_law(self):
        r = np.arange(1, 65, dtype=float)
        fit = fit_power_law(r, r**-0.71, (2, 16))
        assert fit.params["exponent"] == pytest.approx(0.71, abs=1e-10)

    def test_constant_data(self):
        r = np.arange(1, 40, dtype=float)
        fit = fit_power_law(r, np.full_like(r, 2.5), (2, 20))
        assert abs(fit.params["exponent"]) < 1e-10
        assert fit.params["amplitude"] == pytest.approx(2.5, rel=1e-10)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(0)
        r = np.arange(1, 50, dtype=float)
        y = r**-0.9 * np.exp(rng.standard_normal(r.size) * 0.05)
        f1 = fit_power_law(r, y, (2, 30))
        f2 = fit_power_law(r, 7.3 * y, (2, 30))
        assert f1.params["exponent"] == pytest.approx(f2.params["exponent"], abs=1e-12)
        assert f2.params["amplitude"] == pytest.approx(7.3 * f1.params["amplitude"], rel=1e-9)

    def test_nonpositive_values_rejected(self):
        r = np.arange(1, 20, dtype=float)
        y = r**-1.0
        y[5] = 0.0
        with pytest.raises(ValueError):
            fit_power_law(r, y, (2, 10))

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            fit_power_law([1, 2, 3], [1, 2, 3], (1, 3))

    def test_bootstrap_error_reflects_noise(self):
        rng = np.random.default_rng(1)
        r = np.arange(1, 65, dtype=float)
        noisy = r**-0.7 * np.exp(rng.standard_normal(r.size) * 0.1)
        fit = fit_power_law(r, noisy, (2, 60))
        assert fit.errors["exponent"] > 0
        assert abs(fit.params["exponent"] - 0.7) < 5 * fit.errors["exponent"] + 0.05


def synthetic_collapse(p_c=0.16, nu=1.3, eta=0.7, Ls=(16, 32, 64, 128),
                       noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    ps = np.linspace(0.08, 0.24, 9)
    curves = []
    for L in Ls:
        x = (ps - p_c) * L ** (1 / nu)
        f = 0.05 + 0.5 * (1 - np.tanh(x))
        vals = L**-eta * f
        if noise:
            errs = noise * vals
            vals = vals + rng.standard_normal(vals.shape) * errs
            curves.append(CollapseCurve(L, ps, vals, errs))
        else:
            curves.append(CollapseCurve(L, ps, vals))
    return curves


class TestCollapseObjective:
    def test_truth_beats_perturbations(self):
        curves = synthetic_collapse()
        base = collapse_objective(curves, 0.16, 1.3, 0.7)
        for dp, dn, de in [(1.2, 1, 1), (0.8, 1, 1), (1, 1.2, 1),
                           (1, 0.8, 1), (1, 1, 1.2), (1, 1, 0.8)]:
            worse = collapse_objective(curves, 0.16 * dp, 1.3 * dn, 0.7 * de)
            assert worse > base

    def test_single_size_rejected(self):
        with pytest.raises(ValueError):
            collapse_objective(synthetic_collapse(Ls=(32,)), 0.16, 1.3, 0.7)

    def test_no_overlap_diagnostic(self):
        curves = [
            CollapseCurve(16, [0.01, 0.02], [1.0, 0.9]),
            CollapseCurve(32, [0.5, 0.6], [0.5, 0.4]),
            CollapseCurve(64, [0.9, 0.95], [0.2, 0.1]),
        ]
        with pytest.raises(ValueError, match="overlap"):
            collapse_objective(curves, 0.16, 0.5, 0.7)

    def test_relabel_invariance(self):
        curves = synthetic_collapse(noise=0.02, seed=3)
        a = collapse_objective(curves, 0.16, 1.3, 0.7)
        b = collapse_objective(curves[::-1], 0.16, 1.3, 0.7)
        assert a == pytest.approx(b, rel=1e-12)

    def test_duplicate_dataset_invariance(self):
        curves = synthetic_collapse(noise=0.02, seed=4)
        a = collapse_objective(curves, 0.16, 1.3, 0.7)
        b = collapse_objective(curves + [curves[0]], 0.16, 1.3, 0.7)
        assert b == pytest.approx(a, rel=0.25)


class TestFitCollapse:
    def test_recovers_planted_parameters(self):
        curves = synthetic_collapse(noise=0.01, seed=5)
        fit = fit_collapse(curves, seed=1)
        p_c, nu, eta = fit.params["p_c"], fit.params["nu"], fit.params["eta"]
        assert p_c == pytest.approx(0.16, abs=max(0.01, 4 * fit.errors["p_c"]))
        assert nu == pytest.approx(1.3, abs=max(0.2, 4 * fit.errors["nu"]))
        assert eta == pytest.approx(0.7, abs=max(0.05, 4 * fit.errors["eta"]))
        assert not fit.flags

    def test_noise_free_recovery_tight(self):
        fit = fit_collapse(synthetic_collapse(), n_boot=0, seed=2)
        assert fit.params["p_c"] == pytest.approx(0.16, abs=2e-3)
        assert fit.params["eta"] == pytest.approx(0.7, abs=2e-2)

    def test_flat_data_flagged_unidentifiable(self):
        ps = np.linspace(0.08, 0.24, 9)
        curves = [CollapseCurve(L, ps, np.full(9, 1.0)) for L in (16, 32, 64)]
        fit = fit_collapse(curves, bounds=((0.1, 0.2), (1.0, 1.5), (0.0, 1e-9)),
                           n_boot=0)
        assert "unidentifiable" in fit.flags

    def test_bound_hits_flagged(self):
        curves = synthetic_collapse()
        fit = fit_collapse(curves, bounds=((0.01, 0.08), (0.6, 2.6), (0.1, 1.5)),
                           n_boot=0)
        assert any(f.startswith("at_bound") for f in fit.flags)


class TestFitDynamicExponents:
    @staticmethod
    def series_for(theta, z, ks=(0, 1, 2, 3), times=None):
        times = np.arange(2, 48) if times is None else np.asarray(times)
        return [MomentSeries(k, times, times ** (theta + k / z), np.zeros(times.size))
                for k in ks]

    def test_exact_recovery(self):
        fit = fit_dynamic_exponents(self.series_for(0.38, 1.01), (4, 32))
        assert fit.params["theta"] == pytest.approx(0.38, abs=1e-8)
        assert fit.params["z"] == pytest.approx(1.01, abs=1e-8)

    def test_low_order_rejected(self):
        with pytest.raises(ValueError):
            fit_dynamic_exponents(self.series_for(0.4, 1.0, ks=(0, 1)), (4, 32))

    def test_recovery_across_parameter_plane(self):
        for theta in (0.1, 0.45, 1.0):
            for z in (0.5, 1.0, 2.0):
                fit = fit_dynamic_exponents(self.series_for(theta, z), (4, 32))
                assert fit.params["theta"] == pytest.approx(theta, abs=1e-6)
                assert fit.params["z"] == pytest.approx(z, abs=1e-6)

    def test_non_monotone_flagged(self):
        series = self.series_for(0.38, 1.01)
        vals = series[1].values.copy()
        vals[10] = vals[9] * 0.5
        series[1] = MomentSeries(1, series[1].times, vals, np.zeros(vals.size))
        fit = fit_dynamic_exponents(series, (4, 32))
        assert any(f.startswith("non_monotone") for f in fit.flags)


class TestCollapseDynamics:
    @staticmethod
    def off_critical_sets(theta=0.38, z=1.01, nu=1.24, p_c=0.16, k=1):
        times = np.arange(4, 64, dtype=float)
        sets = []
        for p in (0.20, 0.22, 0.24, 0.28):
            x = (p - p_c) * times ** (1 / (nu * z))
            sets.append({"k": k, "p": p, "times": times,
                         "values": times ** (theta + k / z) * np.exp(-x)})
        return sets

    @staticmethod
    def finite_size_sets(theta=0.38, z=1.01, k=1):
        sets = []
        for L in (32, 64, 128):
            times = np.arange(1, 2 * L + 1, dtype=float)
            u = times * float(L) ** -z
            sets.append({"k": k, "L": L, "times": times,
                         "values": float(L) ** (theta + k / z) * u**0.4 * np.exp(-u)})
        return sets

    def test_off_critical_truth_near_zero(self):
        sets = self.off_critical_sets()
        fit = collapse_dynamics(sets, "off_critical",
                                theta=0.38, z=1.01, nu=1.24, p_c=0.16)
        shuffled = [dict(s, p=p2) for s, p2 in
                    zip(sets, (0.28, 0.20, 0.24, 0.22))]
        worse = collapse_dynamics(shuffled, "off_critical",
                                  theta=0.38, z=1.01, nu=1.24, p_c=0.16)
        assert worse.objective >= 10 * fit.objective

    def test_finite_size_truth_near_zero(self):
        sets = self.finite_size_sets()
        fit = collapse_dynamics(sets, "finite_size", theta=0.38, z=1.01)
        off = collapse_dynamics(sets, "finite_size", theta=0.38, z=1.5)
        assert off.objective >= 10 * fit.objective

    def test_missing_exponents_rejected(self):
        with pytest.raises(ValueError):
            collapse_dynamics(self.finite_size_sets(), "finite_size", theta=0.38)


class TestSurfaceExponents:
    def test_synthetic_exact(self):
        r = np.arange(1, 65, dtype=float)
        Ls = np.array([32.0, 64.0, 128.0])
        fit = surface_exponents(r, r**-1.02, Ls, Ls**-1.34, bulk_eta=0.71,
                                perp_window=(2, 16))
        assert fit.params["eta_perp"] == pytest.approx(1.02, abs=1e-10)
        assert fit.params["eta_parallel"] == pytest.approx(1.34, abs=1e-10)
        assert fit.params["relation_residual"] == pytest.approx(-0.005, abs=1e-9)

    def test_needs_three_sizes(self):
        r = np.arange(1, 33, dtype=float)
        with pytest.raises(ValueError):
            surface_exponents(r, r**-1.0, [32, 64], [0.01, 0.004], bulk_eta=0.7)


class TestDecayComparison:
    def test_discriminates_models(self):
        r = np.arange(1, 33, dtype=float)
        exp_res = compare_decay_models(r, 0.4 * np.exp(-r / 2.5), (2, 16))
        assert exp_res["preferred"] == "exponential"
        pow_res = compare_decay_models(r, 0.4 * r**-0.71, (2, 16))
        assert pow_res["preferred"] == "power"


class TestBootstrap:
    def test_error_scales_as_inverse_sqrt_n(self):
        rng = np.random.default_rng(9)
        small = rng.standard_normal(200)
        big = rng.standard_normal(3200)
        se_small = bootstrap_stderr(np.mean, small, seed=1)
        se_big = bootstrap_stderr(np.mean, big, seed=2)
        ratio = se_small / se_big  # expect sqrt(16) = 4
        assert 2.0 < ratio < 8.0

"""Acceptance suite: one test per criterion, each printing a PASS line.

The paper-scale runs (L = 256 with 5000+ samples) are cluster work; these
desk-scale substitutes state their sizes and tolerances inline.  Ensemble
data is produced through the public experiment pipeline and cached between
runs via its resumable manifests (see conftest).

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import json
import time

import numpy as np
import pytest

from bpesim.ensemble import MomentSeries
from bpesim.experiment import read_moments, read_profiles, read_samples
from bpesim.scaling import (
    CollapseCurve,
    compare_decay_models,
    fit_collapse,
    fit_dynamic_exponents,
    fit_power_law,
    surface_exponents,
)
from bpesim.tableau import LN2

from conftest import run_cached_experiment

P_CRIT = 0.16


def report(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# -- shared ensembles --------------------------------------------------------

@pytest.fixture(scope="session")
def phase_data(test_cache_dir):
    """Criterion 4 ensemble: L=64 (halved sizes), three phases, t=2L."""
    return run_cached_experiment(test_cache_dir, "phase64", dict(
        backend="clifford", Ls=(64,), ps=(0.05, P_CRIT, 0.25), n_samples=1500,
        seed=2024, record="steady", positions_mode="translation_average",
        workers=0))


@pytest.fixture(scope="session")
def collapse_data(test_cache_dir):
    """Criterion 5 ensemble: L in {16,32,64}, 9 rates, 2000 samples each."""
    ps = tuple(round(0.08 + 0.02 * i, 9) for i in range(9))
    return run_cached_experiment(test_cache_dir, "collapse", dict(
        backend="clifford", Ls=(16, 32, 64), ps=ps, n_samples=2000,
        seed=777, record="steady", workers=0))


@pytest.fixture(scope="session")
def dynamics_data(test_cache_dir):
    """Criterion 6 ensemble: early-time k-moments at the critical point."""
    return run_cached_experiment(test_cache_dir, "dynamics128", dict(
        backend="clifford", Ls=(128,), ps=(P_CRIT,), n_samples=4000,
        seed=555, record=tuple(range(1, 41)), t_max=48, k_max=3,
        moment_r_metric="ring", workers=0))


@pytest.fixture(scope="session")
def surface_data(test_cache_dir):
    """Criterion 7 ensemble: open chains at the critical point."""
    return run_cached_experiment(test_cache_dir, "surface", dict(
        backend="clifford", Ls=(32, 64, 128), ps=(P_CRIT,), n_samples=6000,
        seed=31337, record="steady", boundary="open", workers=0))


@pytest.fixture(scope="session")
def haar_data(test_cache_dir):
    """Criterion 8 ensemble: dense backend across the transition."""
    ps = tuple(round(0.08 + 0.02 * i, 9) for i in range(9))
    return run_cached_experiment(test_cache_dir, "haar_mipt", dict(
        backend="haar", Ls=(8, 10, 12), ps=ps, n_samples=700,
        seed=909, record="steady", workers=0))


def steady_profile(out_dir, L, p):
    rows = [r for r in read_profiles(out_dir / "profiles.csv")
            if r["L"] == L and abs(r["p"] - p) < 1e-9 and r["t"] == 2 * L]
    rows.sort(key=lambda r: r["r"])
    return (np.array([r["r"] for r in rows], dtype=float),
            np.array([r["eae_mean"] for r in rows]),
            np.array([r["eae_stderr"] for r in rows]))


def steady_rho_curves(out_dir, Ls):
    moments = read_moments(out_dir / "moments.csv")
    curves = []
    for L in Ls:
        rows = [r for r in moments if r["L"] == L and r["k"] == 0 and r["t"] == 2 * L]
        rows.sort(key=lambda r: r["p"])
        curves.append(CollapseCurve(
            L, np.array([r["p"] for r in rows]),
            np.array([r["value"] for r in rows]),
            np.array([r["stderr"] for r in rows])))
    return curves


# -- criteria ----------------------------------------------------------------

def test_criterion_1_oracle_equivalence():
    """Tableau vs dense entropies on >= 1000 shared-stream hybrid circuits."""
    from bpesim.validate import check_oracle_equivalence

    t0 = time.time()
    result = check_oracle_equivalence(n_circuits=1000, max_L=8, seed=7, tol=1e-9)
    dt = time.time() - t0
    report("criterion 1 (oracle equivalence)", result["ok"] and dt < 300,
           f"{result['checks']} region checks, worst gap {result['worst']:.2e}, "
           f"{dt:.0f}s")


def test_criterion_2_outcome_independence():
    """Sweep entropy bit-identical across >= 100 rng streams on 1000 states."""
    from bpesim.validate import check_outcome_independence

    t0 = time.time()
    result = check_outcome_independence(n_states=1000, n_streams=100, seed=11)
    dt = time.time() - t0
    report("criterion 2 (outcome independence)", result["ok"] and dt < 120,
           f"{result.get('states', 0)} states x 100 streams bit-exact, {dt:.0f}s")


def test_criterion_3_haar_baseline():
    """Haar-random states at L=12: EAE = (ln 2)/2 within 0.02."""
    from bpesim.ensemble import eae_exact_statevector

    rng = np.random.default_rng(99)
    vals = []
    for _ in range(250):
        v = rng.standard_normal(1 << 12) + 1j * rng.standard_normal(1 << 12)
        v /= np.linalg.norm(v)
        a, b = (int(s) for s in rng.choice(12, size=2, replace=False))
        vals.append(eae_exact_statevector(v, a, b))
    mean = float(np.mean(vals))
    ok = abs(mean - LN2 / 2) < 0.02
    report("criterion 3 (haar baseline)", ok,
           f"mean EAE {mean:.4f} vs (ln 2)/2 = {LN2 / 2:.4f} over {len(vals)} states")


def test_criterion_4_phase_diagnostics(phase_data):
    """L=64 (halved; eta tolerance 0.2): plateau / power law / exponential."""
    L = 64
    r, plateau, _ = steady_profile(phase_data, L, 0.05)
    plateau_val = plateau[L // 2 - 1]
    ok_plateau = plateau_val > 0.1

    r, crit, err = steady_profile(phase_data, L, P_CRIT)
    fit = fit_power_law(r, crit, (2, 16))
    eta = fit.params["exponent"]
    ok_eta = abs(eta - 0.71) <= 0.2

    r, area, aerr = steady_profile(phase_data, L, 0.25)
    cmp = compare_decay_models(r, area, (2, 12), sigma=aerr)
    ok_exp = cmp["preferred"] == "exponential"

    report("criterion 4 (phase diagnostics)",
           ok_plateau and ok_eta and ok_exp,
           f"plateau E(L/2)={plateau_val:.3f} (>0.1); eta={eta:.3f} "
           f"(0.71 +- 0.2); p=0.25 SSE exp {cmp['sse_exponential']:.1f} vs "
           f"power {cmp['sse_power']:.1f}")


def test_criterion_5_collapse(collapse_data):
    """Finite-size collapse: p_c = 0.16 +- 0.02, nu = 1.24 +- 0.30."""
    curves = steady_rho_curves(collapse_data, (16, 32, 64))
    fit = fit_collapse(curves, seed=5)
    p_c, nu = fit.params["p_c"], fit.params["nu"]
    ok = abs(p_c - 0.16) <= 0.02 and abs(nu - 1.24) <= 0.30
    report("criterion 5 (collapse)", ok,
           f"p_c={p_c:.4f} (0.16 +- 0.02), nu={nu:.3f} (1.24 +- 0.30), "
           f"eta={fit.params['eta']:.3f}, cost={fit.objective:.2f}, flags={fit.flags}")


def test_criterion_6_dynamic_exponents(dynamics_data):
    """Early-time k-moments at p_c, L=128: theta = 0.38 +- 0.08, z = 1.0 +- 0.1."""
    moments = read_moments(dynamics_data / "moments.csv")
    series = []
    for k in range(4):
        rows = sorted((m for m in moments if m["k"] == k), key=lambda m: m["t"])
        series.append(MomentSeries(k, [m["t"] for m in rows],
                                   [m["value"] for m in rows],
                                   [m["stderr"] for m in rows]))
    # the integrated EAE grows monotonically at early times
    rho0 = np.array(series[0].values[:12])
    ok_mono = bool(np.all(np.diff(rho0) > 0))

    fit = fit_dynamic_exponents(series, (4, 32))
    theta, z = fit.params["theta"], fit.params["z"]
    ok = abs(theta - 0.38) <= 0.08 and abs(z - 1.0) <= 0.1
    report("criterion 6 (dynamic exponents)", ok and ok_mono,
           f"theta={theta:.3f} (0.38 +- 0.08), z={z:.3f} (1.0 +- 0.1), "
           f"slopes={['%.2f' % s for s in fit.meta['slopes']]}, "
           f"early rho(t) monotone={ok_mono}")


def test_criterion_7_surface_criticality(surface_data, phase_data):
    """Open-boundary edge exponents and the bulk/surface scaling relation."""
    surf = read_profiles(surface_data / "surface.csv")

    def edge_profile(L):
        rows = [r for r in surf if r["L"] == L and r["t"] == 2 * L]
        rows.sort(key=lambda r: r["r"])
        return (np.array([r["r"] for r in rows], dtype=float),
                np.array([r["eae_mean"] for r in rows]))

    r128, perp = edge_profile(128)
    par_L = np.array([32.0, 64.0, 128.0])
    par_v = np.array([edge_profile(L)[1][-1] for L in (32, 64, 128)])

    # measured bulk decay exponent from the criterion-4 ensemble
    rb, bulk, _ = steady_profile(phase_data, 64, P_CRIT)
    bulk_eta = fit_power_law(rb, bulk, (2, 16)).params["exponent"]

    fit = surface_exponents(r128, perp, par_L, par_v, bulk_eta, perp_window=(2, 32))
    e_perp = fit.params["eta_perp"]
    e_par = fit.params["eta_parallel"]
    resid = fit.params["relation_residual"]
    ok = (abs(e_perp - 1.0) <= 0.2 and abs(e_par - 1.34) <= 0.35
          and abs(resid) <= 0.15)
    report("criterion 7 (surface criticality)", ok,
           f"eta_perp={e_perp:.3f} (1.0 +- 0.2), eta_par={e_par:.3f} "
           f"(1.34 +- 0.35), relation residual {resid:+.3f} (<= 0.15), "
           f"bulk eta={bulk_eta:.3f}")


def test_criterion_8_haar_mipt(haar_data):
    """Dense-backend transition: curve crossings and collapse location."""
    curves = steady_rho_curves(haar_data, (8, 10, 12))

    def crossing(c1, c2):
        d = c1.values - c2.values
        for i in range(d.size - 1):
            if d[i] == 0:
                return float(c1.ps[i])
            if d[i] * d[i + 1] < 0:
                f = d[i] / (d[i] - d[i + 1])
                return float(c1.ps[i] + f * (c1.ps[i + 1] - c1.ps[i]))
        return None

    crossings = [crossing(curves[i], curves[j])
                 for i in range(3) for j in range(i + 1, 3)]
    ok_cross = all(c is not None and 0.12 <= c <= 0.22 for c in crossings)

    fit = fit_collapse(curves, seed=8, bounds=((0.05, 0.30), (0.6, 2.6), (0.1, 1.5)))
    p_c = fit.params["p_c"]
    ok_pc = 0.10 <= p_c <= 0.24
    report("criterion 8 (haar transition)", ok_cross and ok_pc,
           f"crossings={['%.3f' % c if c else 'none' for c in crossings]} "
           f"(within [0.12, 0.22]); collapse p_c={p_c:.3f} (within [0.10, 0.24]); "
           "full exponent reproduction is not desk-reproducible by design")


def test_criterion_9_analysis_selftests():
    """Synthetic recoveries for every analysis operation at stated tolerances."""
    t0 = time.time()
    r = np.arange(1, 65, dtype=float)
    f1 = fit_power_law(r, r**-0.71, (2, 16))
    ok1 = abs(f1.params["exponent"] - 0.71) < 1e-10

    times = np.arange(2, 48, dtype=float)
    series = [MomentSeries(k, times, times ** (0.38 + k / 1.01), np.zeros(times.size))
              for k in range(4)]
    f2 = fit_dynamic_exponents(series, (4, 32))
    ok2 = (abs(f2.params["theta"] - 0.38) < 1e-8
           and abs(f2.params["z"] - 1.01) < 1e-8)

    rng = np.random.default_rng(17)
    ps = np.linspace(0.08, 0.24, 9)
    curves = []
    for L in (16, 32, 64, 128):
        x = (ps - 0.16) * L ** (1 / 1.3)
        vals = L**-0.7 * (0.05 + 0.5 * (1 - np.tanh(x)))
        errs = 0.01 * vals
        curves.append(CollapseCurve(L, ps, vals + rng.standard_normal(9) * errs, errs))
    f3 = fit_collapse(curves, seed=3)
    ok3 = (abs(f3.params["p_c"] - 0.16) < 0.01
           and abs(f3.params["nu"] - 1.3) < 0.2
           and abs(f3.params["eta"] - 0.7) < 0.05)

    from bpesim.scaling import bootstrap_stderr

    small = rng.standard_normal(200)
    big = rng.standard_normal(3200)
    ratio = bootstrap_stderr(np.mean, small, seed=1) / bootstrap_stderr(np.mean, big, seed=2)
    ok4 = 2.0 < ratio < 8.0  # expect 4, within a factor of 2

    dt = time.time() - t0
    report("criterion 9 (analysis self-tests)", ok1 and ok2 and ok3 and ok4 and dt < 120,
           f"powerlaw {f1.params['exponent']:.10f}; theta/z "
           f"{f2.params['theta']:.8f}/{f2.params['z']:.8f}; planted collapse "
           f"({f3.params['p_c']:.3f}, {f3.params['nu']:.2f}, {f3.params['eta']:.3f}); "
           f"bootstrap ratio {ratio:.2f}; {dt:.0f}s")


def test_criterion_10_determinism(tmp_path):
    """Byte-identical outputs for identical (spec, seed) at any worker count."""
    from bpesim.experiment import ExperimentSpec, run_experiment

    def run(workers, tag):
        spec = ExperimentSpec(
            backend="clifford", Ls=(12, 16), ps=(0.12, 0.2), n_samples=150,
            seed=4242, out_dir=str(tmp_path / tag), record="steady",
            workers=workers, keep_samples=True)
        out = run_experiment(spec)
        snap = {}
        for f in sorted(out.glob("*.csv")):
            snap[f.name] = f.read_bytes()
        doc = json.loads((out / "manifest.json").read_text())
        doc.pop("wall_time_s", None)
        snap["manifest"] = json.dumps(doc, sort_keys=True)
        return snap

    a = run(1, "serial")
    b = run(2, "dual")
    ok = a == b
    report("criterion 10 (determinism)", ok,
           f"{len(a)} output files byte-identical across worker counts "
           f"(profiles, moments, samples, manifest sans timing)")

"""Critical-point analysis: power-law fits, finite-size data collapse,
dynamic exponents, surface exponents.

The collapse cost measures squared deviation of rescaled points from a
master curve estimated by pooled local linear regression; all fits report
bootstrap standard errors and quality flags instead of failing silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "ScalingFit",
    "CollapseCurve",
    "fit_power_law",
    "collapse_objective",
    "fit_collapse",
    "fit_dynamic_exponents",
    "collapse_dynamics",
    "surface_exponents",
    "compare_decay_models",
    "bootstrap_stderr",
]

BOOTSTRAP_RESAMPLES = 200


@dataclass
class ScalingFit:
    """Fitted parameters with objective value, window and bootstrap errors."""

    params: dict
    errors: dict
    objective: float
    window: tuple
    n_points: int
    flags: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.objective):
            raise ValueError("fit objective must be finite")
        for name in ("nu", "z"):
            if name in self.params and not self.params[name] > 0:
                raise ValueError(f"{name} must be positive, got {self.params[name]}")


# ---------------------------------------------------------------------------
# power laws

def _in_window(xs: np.ndarray, window: tuple) -> np.ndarray:
    lo, hi = window
    return (xs >= lo) & (xs <= hi)


def fit_power_law(xs: Sequence[float], ys: Sequence[float], window: tuple,
                  seed: int = 0, min_points: int = 4) -> ScalingFit:
    """Least squares on (log x, log y) inside the window.

    Returns the decay exponent (negated slope), the amplitude, the
    coefficient of determination of the log-log fit, and a bootstrap
    standard error from resampling points.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    m = _in_window(xs, window)
    if np.count_nonzero(m) < min_points:
        raise ValueError(
            f"need at least {min_points} points in window {window}, "
            f"have {np.count_nonzero(m)}")
    if np.any(xs[m] <= 0) or np.any(ys[m] <= 0):
        raise ValueError("power-law fits need positive values inside the window")
    lx = np.log(xs[m])
    ly = np.log(ys[m])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(BOOTSTRAP_RESAMPLES):
        idx = rng.integers(0, lx.size, size=lx.size)
        if np.ptp(lx[idx]) == 0:
            continue
        b_slope = np.polyfit(lx[idx], ly[idx], 1)[0]
        boots.append(-b_slope)
    err = float(np.std(boots)) if len(boots) > 1 else 0.0

    return ScalingFit(
        params={"exponent": -float(slope), "amplitude": float(np.exp(intercept))},
        errors={"exponent": err},
        objective=ss_res,
        window=tuple(window),
        n_points=int(lx.size),
        meta={"r_squared": r2},
    )


def compare_decay_models(xs, ys, window, sigma=None) -> dict:
    """Weighted log-space goodness of power-law versus exponential decay.

    Returns per-model residual sums of squares (a Gaussian log-likelihood
    comparison up to constants) and which model fits better.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    m = _in_window(xs, window) & (ys > 0)
    if np.count_nonzero(m) < 4:
        raise ValueError("need at least 4 positive points in the window")
    x = xs[m]
    ly = np.log(ys[m])
    if sigma is not None:
        s = np.asarray(sigma, dtype=float)[m]
        w = 1.0 / np.maximum(s / ys[m], 1e-6) ** 2  # log-space weights
    else:
        w = np.ones_like(ly)

    def wlsq(design):
        coef, *_ = np.linalg.lstsq(design * np.sqrt(w)[:, None],
                                   ly * np.sqrt(w), rcond=None)
        resid = ly - design @ coef
        return float(np.sum(w * resid**2)), coef

    sse_pow, _ = wlsq(np.column_stack([np.log(x), np.ones_like(x)]))
    sse_exp, _ = wlsq(np.column_stack([x, np.ones_like(x)]))
    return {
        "sse_power": sse_pow,
        "sse_exponential": sse_exp,
        "preferred": "exponential" if sse_exp < sse_pow else "power",
        "n_points": int(x.size),
    }


# ---------------------------------------------------------------------------
# finite-size collapse

@dataclass
class CollapseCurve:
    """One system size's order-parameter curve versus p."""

    L: int
    ps: np.ndarray
    values: np.ndarray
    errors: Optional[np.ndarray] = None
    samples: Optional[np.ndarray] = None  # (n_traj, len(ps)) raw values, if kept

    def __post_init__(self):
        self.ps = np.asarray(self.ps, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.errors is not None:
            self.errors = np.asarray(self.errors, dtype=float)
        if self.ps.shape != self.values.shape:
            raise ValueError("ps and values must align")


def _master_curve_cost(x: np.ndarray, y: np.ndarray, sig: np.ndarray,
                       score_window: tuple | None = None) -> float:
    """Mean squared sigma-normalized deviation from a local-linear master curve.

    Bandwidth: at least 10% of the scored scaled-x span and at least 8
    points.  When `score_window` is given (the mutual overlap of the
    datasets), only points inside it are scored; outside it no other curve
    constrains the master curve and the deviation would only measure
    smoothing bias.
    """
    order = np.argsort(x, kind="stable")
    xs, ys, ss = x[order], y[order], sig[order]
    n = xs.size
    if score_window is None:
        score = np.ones(n, dtype=bool)
    else:
        score = (xs >= score_window[0]) & (xs <= score_window[1])
        if not np.any(score):
            score = np.ones(n, dtype=bool)
    lo_w = xs[score].min()
    hi_w = xs[score].max()
    h = 0.05 * (hi_w - lo_w)  # half-width of the 10%-of-span window
    # the 8-point minimum counts distinct x so exact duplicates cannot
    # shrink the smoothing window
    xu = np.unique(xs)
    w_inv = 1.0 / (ss * ss)
    cost = 0.0
    scored = 0
    for i in range(n):
        if not score[i]:
            continue
        ulo = np.searchsorted(xu, xs[i] - h, side="left")
        uhi = np.searchsorted(xu, xs[i] + h, side="right")
        if uhi - ulo < 8:
            iu = np.searchsorted(xu, xs[i])
            ulo = max(0, min(iu - 4, xu.size - 8))
            uhi = min(xu.size, ulo + 8)
        lo = np.searchsorted(xs, xu[ulo], side="left")
        hi = np.searchsorted(xs, xu[uhi - 1], side="right")
        xw = xs[lo:hi]
        yw = ys[lo:hi]
        ww = w_inv[lo:hi]
        sw = ww.sum()
        xm = (ww * xw).sum() / sw
        ym = (ww * yw).sum() / sw
        sxx = (ww * (xw - xm) ** 2).sum()
        if sxx > 1e-300:
            slope = (ww * (xw - xm) * (yw - ym)).sum() / sxx
        else:
            slope = 0.0
        yhat = ym + slope * (xs[i] - xm)
        cost += ((ys[i] - yhat) / ss[i]) ** 2
        scored += 1
    return cost / scored


def _scaled_points(datasets, p_c, nu, eta):
    xs, ys, ss = [], [], []
    spans = []
    for d in datasets:
        x = (d.ps - p_c) * d.L ** (1.0 / nu)
        y = d.values * d.L**eta
        if d.errors is not None and np.any(d.errors > 0):
            s = np.maximum(d.errors * d.L**eta, 1e-12)
        else:
            s = np.ones_like(y)
        xs.append(x)
        ys.append(y)
        ss.append(s)
        spans.append((float(x.min()), float(x.max())))
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ss), spans


def collapse_objective(datasets: Sequence[CollapseCurve], p_c: float, nu: float,
                       eta: float) -> float:
    """Cost of the scaling ansatz value = L**(-eta) F[(p - p_c) L**(1/nu)].

    Rescales every point, pools them, and scores deviation from the pooled
    local-linear master curve, normalized by point variances.
    """
    if len({d.L for d in datasets}) < 3:
        raise ValueError("collapse needs at least 3 distinct system sizes")
    x, y, s, spans = _scaled_points(datasets, p_c, nu, eta)
    lo = max(a for a, _ in spans)
    hi = min(b for _, b in spans)
    if lo >= hi:
        raise ValueError(
            f"no overlap in scaled x: dataset ranges {spans} share no interval"
        )
    return _master_curve_cost(x, y, s, score_window=(lo, hi))


def fit_collapse(datasets: Sequence[CollapseCurve], init=None, bounds=None,
                 seed: int = 0, n_boot: int = 50) -> ScalingFit:
    """Minimize the collapse cost by grid search plus simplex refinement.

    Bootstrap errors resample trajectories when `samples` are attached to the
    curves, otherwise fall back to Gaussian perturbation of the means by
    their standard errors.
    """
    if bounds is None:
        bounds = ((0.05, 0.30), (0.6, 2.6), (0.1, 1.5))
    (pc_lo, pc_hi), (nu_lo, nu_hi), (eta_lo, eta_hi) = bounds

    def objective(theta, data=datasets):
        p_c, nu, eta = theta
        if not (pc_lo <= p_c <= pc_hi and nu_lo <= nu <= nu_hi and eta_lo <= eta <= eta_hi):
            return 1e12
        try:
            return collapse_objective(data, p_c, nu, eta)
        except ValueError:
            return 1e12

    def solve(data, x0=None):
        grid_costs = []
        if x0 is None:
            for p_c in np.linspace(pc_lo, pc_hi, 13):
                for nu in np.linspace(nu_lo, nu_hi, 9):
                    for eta in np.linspace(eta_lo, eta_hi, 9):
                        grid_costs.append((objective((p_c, nu, eta), data), (p_c, nu, eta)))
            grid_costs.sort(key=lambda t: t[0])
            x0 = grid_costs[0][1]
        res = minimize(objective, x0, args=(data,), method="Nelder-Mead",
                       options={"xatol": 1e-5, "fatol": 1e-10, "maxiter": 2000})
        return res.x, float(res.fun), grid_costs

    start = tuple(init) if init is not None else None
    best, cost, grid = solve(datasets, x0=start)

    flags = []
    if grid:
        finite = [c for c, _ in grid if c < 1e11]
        if finite and (max(finite) - min(finite)) <= max(1e-3 * abs(max(finite)), 1e-12):
            flags.append("unidentifiable")
    for val, (lo, hi), name in zip(best, bounds, ("p_c", "nu", "eta")):
        if min(val - lo, hi - val) < 1e-3 * (hi - lo):
            flags.append(f"at_bound:{name}")

    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_boot):
        perturbed = []
        for d in datasets:
            if d.samples is not None:
                idx = rng.integers(0, d.samples.shape[0], size=d.samples.shape[0])
                vals = d.samples[idx].mean(axis=0)
                errs = d.samples[idx].std(axis=0, ddof=1) / np.sqrt(d.samples.shape[0])
            elif d.errors is not None and np.any(d.errors > 0):
                vals = d.values + rng.standard_normal(d.values.shape) * d.errors
                errs = d.errors
            else:
                vals = d.values
                errs = d.errors
            perturbed.append(CollapseCurve(d.L, d.ps, vals, errs))
        try:
            b, _, _ = solve(perturbed, x0=tuple(best))
            boots.append(b)
        except ValueError:
            continue
    if len(boots) > 1:
        std = np.std(np.asarray(boots), axis=0)
    else:
        std = np.zeros(3)

    return ScalingFit(
        params={"p_c": float(best[0]), "nu": float(best[1]), "eta": float(best[2])},
        errors={"p_c": float(std[0]), "nu": float(std[1]), "eta": float(std[2])},
        objective=cost,
        window=bounds,
        n_points=int(sum(d.ps.size for d in datasets)),
        flags=flags,
    )


# ---------------------------------------------------------------------------
# dynamic exponents

def fit_dynamic_exponents(series: Sequence, early_window: tuple,
                          seed: int = 0) -> ScalingFit:
    """Extract (theta, z) from the early-time growth of the k-moments.

    Each moment series is fit to t**s_k inside the window; the slopes are
    then regressed against k, giving theta as the intercept and 1/z as the
    slope.  Requires moments through k >= 2.
    """
    ks = np.array([s.k for s in series], dtype=float)
    if ks.max() < 2 or len(ks) < 3:
        raise ValueError("dynamic-exponent fits need moment orders through k >= 2")
    slopes = np.zeros(ks.size)
    slope_errs = np.zeros(ks.size)
    flags = []
    for i, s in enumerate(series):
        fit = fit_power_law(s.times, s.values, early_window, seed=seed + i)
        slopes[i] = -fit.params["exponent"]  # growth, not decay
        slope_errs[i] = max(fit.errors["exponent"], 1e-12)
        m = _in_window(np.asarray(s.times, dtype=float), early_window)
        if np.any(np.diff(np.asarray(s.values, dtype=float)[m]) < 0):
            flags.append(f"non_monotone:k={s.k}")

    w = 1.0 / slope_errs**2
    sw = w.sum()
    km = (w * ks).sum() / sw
    sm = (w * slopes).sum() / sw
    skk = (w * (ks - km) ** 2).sum()
    slope = (w * (ks - km) * (slopes - sm)).sum() / skk
    intercept = sm - slope * km
    resid = slopes - (intercept + slope * ks)
    objective = float(np.sum(w * resid**2))

    if slope <= 0:
        raise ValueError(f"slope of s_k versus k must be positive, got {slope}")
    theta = float(intercept)
    z = float(1.0 / slope)

    # parameter errors: propagate the weighted-regression covariance
    var_slope = 1.0 / skk
    var_inter = 1.0 / sw + km**2 / skk
    z_err = float(z * z * np.sqrt(var_slope) * np.sqrt(max(objective / max(len(ks) - 2, 1), 1.0)))
    th_err = float(np.sqrt(var_inter) * np.sqrt(max(objective / max(len(ks) - 2, 1), 1.0)))

    return ScalingFit(
        params={"theta": theta, "z": z},
        errors={"theta": th_err, "z": z_err},
        objective=objective,
        window=tuple(early_window),
        n_points=int(ks.size),
        flags=flags,
        meta={"slopes": slopes.tolist(), "ks": ks.tolist()},
    )


def collapse_dynamics(series_sets: Sequence[dict], mode: str, *, theta: float = None,
                      z: float = None, nu: float = None, p_c: float = None) -> ScalingFit:
    """Score a dynamic-scaling collapse of k-moment series.

    'off_critical' rescales curves taken at different p (fixed L) to
    (x, y) = ((p - p_c) t**(1/(nu z)), value * t**-(theta + k/z)); requires
    theta, z, nu, p_c.  'finite_size' rescales curves at the critical point
    for different L to (t L**-z, value * L**-(theta + k/z)); requires theta
    and z.  Each entry of `series_sets` is a dict with keys 'k', 'times',
    'values' and either 'p' or 'L'.
    """
    if theta is None or z is None:
        raise ValueError("collapse_dynamics needs theta and z")
    xs, ys = [], []
    if mode == "off_critical":
        if nu is None or p_c is None:
            raise ValueError("off-critical collapse needs nu and p_c")
        for s in series_sets:
            t = np.asarray(s["times"], dtype=float)
            v = np.asarray(s["values"], dtype=float)
            k = s["k"]
            xs.append((s["p"] - p_c) * t ** (1.0 / (nu * z)))
            ys.append(v * t ** -(theta + k / z))
    elif mode == "finite_size":
        for s in series_sets:
            t = np.asarray(s["times"], dtype=float)
            v = np.asarray(s["values"], dtype=float)
            k = s["k"]
            L = s["L"]
            xs.append(t * float(L) ** -z)
            ys.append(v * float(L) ** -(theta + k / z))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    scale = max(float(np.std(y)), 1e-30)
    cost = _master_curve_cost(x, y, np.full_like(y, scale))
    return ScalingFit(
        params={"theta": theta, "z": z, **({"nu": nu} if nu else {}),
                **({"p_c": p_c} if p_c is not None else {})},
        errors={},
        objective=float(cost),
        window=(float(x.min()), float(x.max())),
        n_points=int(x.size),
        meta={"mode": mode},
    )


def surface_exponents(perp_r, perp_values, parallel_L, parallel_values,
                      bulk_eta: float, perp_window: tuple = None,
                      seed: int = 0) -> ScalingFit:
    """Edge exponents from the edge-to-bulk profile and the edge-to-edge
    size dependence, plus the residual of the scaling relation
    eta_perp = (eta + eta_parallel) / 2."""
    parallel_L = np.asarray(parallel_L, dtype=float)
    if np.unique(parallel_L).size < 3:
        raise ValueError("edge-to-edge fit needs at least 3 system sizes")
    perp_r = np.asarray(perp_r, dtype=float)
    if perp_window is None:
        perp_window = (2, perp_r.max() / 4)
    perp_fit = fit_power_law(perp_r, perp_values, perp_window, seed=seed)
    par_fit = fit_power_law(parallel_L, parallel_values,
                            (parallel_L.min(), parallel_L.max()),
                            seed=seed + 1, min_points=3)
    eta_perp = perp_fit.params["exponent"]
    eta_par = par_fit.params["exponent"]
    residual = eta_perp - 0.5 * (bulk_eta + eta_par)
    return ScalingFit(
        params={"eta_perp": eta_perp, "eta_parallel": eta_par,
                "relation_residual": float(residual)},
        errors={"eta_perp": perp_fit.errors["exponent"],
                "eta_parallel": par_fit.errors["exponent"]},
        objective=perp_fit.objective + par_fit.objective,
        window=perp_window,
        n_points=perp_fit.n_points + par_fit.n_points,
        meta={"bulk_eta": bulk_eta},
    )


# ---------------------------------------------------------------------------
# generic bootstrap

def bootstrap_stderr(estimator: Callable[[np.ndarray], float], samples: np.ndarray,
                     n_resamples: int = BOOTSTRAP_RESAMPLES, seed: int = 0) -> float:
    """Standard error of `estimator` under resampling of the sample axis."""
    samples = np.asarray(samples)
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(n_resamples):
        idx = rng.integers(0, samples.shape[0], size=samples.shape[0])
        vals.append(estimator(samples[idx]))
    return float(np.std(vals))

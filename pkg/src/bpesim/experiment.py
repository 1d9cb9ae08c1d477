"""Experiment orchestration: sweeps, deterministic parallel farming, file outputs.

A sweep point is one (backend, L, p).  Trajectories are farmed to a worker
pool in fixed-size chunks and reduced in chunk order, so aggregated outputs
are byte-identical for a given (spec, seed) at any worker count.  Each
completed point is checkpointed to a shard file and listed in the manifest,
which makes interrupted runs resumable.

CSV schemas (flat, analysis-tool agnostic):

    profiles.csv / surface.csv:
        backend,L,p,boundary,t,r,eae_mean,eae_stderr,n_samples
    moments.csv:
        backend,L,p,t,k,value,stderr,n_samples
    samples.csv (optional, per-trajectory moments for bootstrap):
        backend,L,p,t,k,traj,value
"""

from __future__ import annotations

import csv
import hashlib
import json
import multiprocessing
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__ as _version
from . import _kernels
from .circuit import CircuitConfig, record_schedule, run_trajectory
from .clifford2 import gate_table_bank
from .errors import CapacityError, ConfigError
from .haar import MAX_HAAR_QUBITS, run_trajectory_haar
from .circuit import MAX_CLIFFORD_QUBITS

CHUNK = 64  # trajectories per work unit; fixed so reductions ignore worker count

PROFILE_COLUMNS = "backend,L,p,boundary,t,r,eae_mean,eae_stderr,n_samples"
MOMENT_COLUMNS = "backend,L,p,t,k,value,stderr,n_samples"
SAMPLE_COLUMNS = "backend,L,p,t,k,traj,value"


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce a sweep."""

    backend: str = "clifford"
    Ls: tuple = (16,)
    ps: tuple = (0.16,)
    n_samples: int = 100
    seed: int = 0
    out_dir: str = "runs/out"
    boundary: str = "periodic"
    t_max: str | int = "2L"
    record: str = "steady"
    workers: int = 0  # 0: use BPESIM_WORKERS or cpu count
    positions_mode: str = "fixed_origin"
    measure_per_layer: bool = True
    k_max: int = 3
    moment_r_metric: str = "ring"
    keep_samples: bool = False
    fits: tuple = ()
    fit_rmin: float = 2.0
    fit_rmax: float = 0.0  # 0: L/4
    fit_tmin: float = 4.0
    fit_tmax: float = 0.0  # 0: L/4
    bulk_eta: float = 0.0  # required for the surface fit directive
    collapse_bounds: tuple = ((0.05, 0.30), (0.6, 2.6), (0.1, 1.5))

    def __post_init__(self):
        if self.backend not in ("clifford", "haar"):
            raise ConfigError("backend", f"unknown backend {self.backend!r}")
        self.Ls = tuple(int(L) for L in self.Ls)
        self.ps = tuple(float(p) for p in self.ps)
        if not self.Ls:
            raise ConfigError("L", "need at least one system size")
        for L in self.Ls:
            if L < 2 or L % 2:
                raise ConfigError("L", f"sizes must be even and >= 2, got {L}")
        cap = MAX_HAAR_QUBITS if self.backend == "haar" else MAX_CLIFFORD_QUBITS
        if max(self.Ls) > cap:
            raise CapacityError(f"{self.backend} backend caps L at {cap}, got {max(self.Ls)}")
        for p in self.ps:
            if not 0.0 <= p <= 1.0:
                raise ConfigError("p", f"probabilities must lie in [0, 1], got {p}")
        if self.n_samples < 1:
            raise ConfigError("samples", f"need at least one trajectory, got {self.n_samples}")
        if self.seed < 0:
            raise ConfigError("seed", "seed must be nonnegative")
        if isinstance(self.t_max, str) and self.t_max != "2L":
            raise ConfigError("t_max", f"t_max must be an integer or '2L', got {self.t_max!r}")
        known_fits = {"powerlaw", "collapse", "dynamic", "surface"}
        self.fits = tuple(self.fits)
        for f in self.fits:
            if f not in known_fits:
                raise ConfigError("fits", f"unknown fit directive {f!r}")
        if "surface" in self.fits and not self.bulk_eta > 0:
            raise ConfigError("bulk_eta", "the surface fit needs the bulk decay exponent")

    # -- derived -------------------------------------------------------------

    def t_max_for(self, L: int) -> int:
        return 2 * L if self.t_max == "2L" else int(self.t_max)

    def record_times_for(self, L: int) -> tuple:
        t_max = self.t_max_for(L)
        if isinstance(self.record, (tuple, list)):
            return tuple(int(t) for t in self.record)
        toks = str(self.record).replace(",", " ").split()
        if toks and all(tok.isdigit() for tok in toks):
            return tuple(int(t) for t in toks)
        return record_schedule(str(self.record), t_max)

    def circuit_config(self, L: int, p: float) -> CircuitConfig:
        return CircuitConfig(
            L=L, p=p, t_max=self.t_max_for(L),
            record_times=self.record_times_for(L),
            boundary=self.boundary, seed=self.seed,
            positions_mode=self.positions_mode,
            measure_per_layer=self.measure_per_layer,
            k_max=self.k_max, moment_r_metric=self.moment_r_metric,
        )

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        d.pop("workers")
        return d

    def spec_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def parse_config_text(text: str) -> dict:
    """Parse the flat `key = value` config format (lists split on
    whitespace/commas; `a:b:c` expands to an inclusive range with step c)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out


def _parse_number_list(text: str) -> list[float]:
    vals: list[float] = []
    for tok in text.replace(",", " ").split():
        if ":" in tok:
            a, b, c = (float(x) for x in tok.split(":"))
            n = int(round((b - a) / c)) + 1
            vals.extend(a + i * c for i in range(n))
        else:
            vals.append(float(tok))
    return vals


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def spec_from_config(cfg: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from parsed config keys, with named errors."""
    kw: dict = {}
    simple = {
        "backend": ("backend", str),
        "boundary": ("boundary", str),
        "record": ("record", str),
        "samples": ("n_samples", int),
        "seed": ("seed", int),
        "out": ("out_dir", str),
        "workers": ("workers", int),
        "positions": ("positions_mode", str),
        "k_max": ("k_max", int),
        "r_metric": ("moment_r_metric", str),
        "fit_rmin": ("fit_rmin", float),
        "fit_rmax": ("fit_rmax", float),
        "fit_tmin": ("fit_tmin", float),
        "fit_tmax": ("fit_tmax", float),
        "bulk_eta": ("bulk_eta", float),
    }
    for key, val in cfg.items():
        if key in simple:
            name, typ = simple[key]
            try:
                kw[name] = typ(val)
            except ValueError:
                raise ConfigError(key, f"cannot parse {val!r}") from None
        elif key == "L":
            kw["Ls"] = tuple(int(v) for v in _parse_number_list(val))
        elif key == "p":
            kw["ps"] = tuple(round(v, 9) for v in _parse_number_list(val))
        elif key == "t_max":
            kw["t_max"] = val if val == "2L" else int(val)
        elif key in ("measure_per_layer", "keep_samples"):
            if val.lower() not in _BOOL:
                raise ConfigError(key, f"expected a boolean, got {val!r}")
            kw[key] = _BOOL[val.lower()]
        elif key == "fits":
            kw["fits"] = tuple(val.replace(",", " ").split())
        else:
            raise ConfigError(key, "unknown configuration key")
    return ExperimentSpec(**kw)


# ---------------------------------------------------------------------------
# trajectory farming

def _run_chunk(args) -> dict:
    spec_canon, L, p, start, stop = args
    spec = ExperimentSpec(**{**spec_canon, "out_dir": "unused", "workers": 1})
    cfg = spec.circuit_config(L, p)
    runner = run_trajectory if spec.backend == "clifford" else run_trajectory_haar

    n_times = len(cfg.record_times)
    n_r = L - 1
    prof_s = np.zeros((n_times, n_r))
    prof_s2 = np.zeros((n_times, n_r))
    mom_s = np.zeros((n_times, cfg.k_max + 1))
    mom_s2 = np.zeros((n_times, cfg.k_max + 1))
    perp_s = np.zeros((n_times, n_r)) if spec.boundary == "open" else None
    perp_s2 = np.zeros((n_times, n_r)) if spec.boundary == "open" else None
    samples = np.zeros((stop - start, n_times, cfg.k_max + 1)) if spec.keep_samples else None

    for i in range(start, stop):
        rec = runner(cfg, i)
        prof_s += rec.profile
        prof_s2 += rec.profile**2
        mom_s += rec.moments
        mom_s2 += rec.moments**2
        if perp_s is not None and rec.perp is not None:
            perp_s += rec.perp
            perp_s2 += rec.perp**2
        if samples is not None:
            samples[i - start] = rec.moments

    out = {"n": stop - start, "prof_s": prof_s, "prof_s2": prof_s2,
           "mom_s": mom_s, "mom_s2": mom_s2}
    if perp_s is not None:
        out["perp_s"] = perp_s
        out["perp_s2"] = perp_s2
    if samples is not None:
        out["samples"] = samples
    return out


def _reduce_chunks(chunks: list[dict]) -> dict:
    total = {k: v.copy() if isinstance(v, np.ndarray) else v for k, v in chunks[0].items()}
    sample_parts = [chunks[0].get("samples")] if "samples" in chunks[0] else None
    for c in chunks[1:]:
        total["n"] += c["n"]
        for k in ("prof_s", "prof_s2", "mom_s", "mom_s2", "perp_s", "perp_s2"):
            if k in total:
                total[k] += c[k]
        if sample_parts is not None:
            sample_parts.append(c["samples"])
    if sample_parts is not None:
        total["samples"] = np.concatenate(sample_parts, axis=0)
    return total


def resolve_workers(requested: int) -> int:
    env = os.environ.get("BPESIM_WORKERS")
    if env:
        return max(1, int(env))
    if requested > 0:
        return requested
    return max(1, multiprocessing.cpu_count())


def run_point(spec: ExperimentSpec, L: int, p: float, workers: int) -> dict:
    """All trajectories of one sweep point, reduced to tallies."""
    tasks = [
        (spec.canonical(), L, p, start, min(start + CHUNK, spec.n_samples))
        for start in range(0, spec.n_samples, CHUNK)
    ]
    if workers <= 1 or len(tasks) == 1:
        chunks = [_run_chunk(t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers) as pool:
            chunks = pool.map(_run_chunk, tasks, chunksize=1)
    return _reduce_chunks(chunks)


# ---------------------------------------------------------------------------
# file outputs

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _point_key(backend: str, L: int, p: float) -> str:
    return f"{backend}_L{L}_p{p:.9g}"


def _stats(s: np.ndarray, s2: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    mean = s / n
    if n > 1:
        var = np.maximum(s2 - s * s / n, 0.0) / (n - 1)
        err = np.sqrt(var / n)
    else:
        err = np.zeros_like(mean)
    return mean, err


def run_experiment(spec: ExperimentSpec) -> Path:
    """Run the sweep, write CSVs, fit reports and the manifest.

    Returns the output directory.  Identical (spec, seed) runs produce
    byte-identical data outputs at any worker count; manifest timing fields
    are the only volatile content.
    """
    t0 = time.time()
    out = Path(spec.out_dir)
    parts = out / "parts"
    parts.mkdir(parents=True, exist_ok=True)
    workers = resolve_workers(spec.workers)

    manifest_path = out / "manifest.json"
    manifest = {
        "spec": spec.canonical(),
        "spec_hash": spec.spec_hash(),
        "version": _version,
        "seed": spec.seed,
        "completed": [],
        "files": {},
        "wall_time_s": None,
    }
    if manifest_path.exists():
        try:
            old = json.loads(manifest_path.read_text())
            if old.get("spec_hash") == manifest["spec_hash"]:
                manifest["completed"] = old.get("completed", [])
        except (json.JSONDecodeError, OSError):
            pass

    # warm the JIT cache and the gate bank before forking workers
    gate_table_bank()
    _kernels.warmup()

    for L in spec.Ls:
        for p in spec.ps:
            key = _point_key(spec.backend, L, p)
            shard = parts / f"{key}.npz"
            if key in manifest["completed"] and shard.exists():
                continue
            data = run_point(spec, L, p, workers)
            np.savez(shard, **{k: v for k, v in data.items() if isinstance(v, np.ndarray)},
                     n=np.int64(data["n"]))
            if key not in manifest["completed"]:
                manifest["completed"].append(key)
            manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2))

    _write_csvs(spec, out, parts)
    if spec.fits:
        _run_fits(spec, out)

    files = {}
    for f in sorted(out.glob("*.csv")) + sorted(out.glob("*.json")):
        if f.name == "manifest.json":
            continue
        files[f.name] = hashlib.sha256(f.read_bytes()).hexdigest()
    manifest["files"] = files
    manifest["wall_time_s"] = round(time.time() - t0, 3)
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2))
    return out


def _load_shard(parts: Path, key: str) -> dict:
    with np.load(parts / f"{key}.npz") as z:
        return {k: z[k] for k in z.files}


def _write_csvs(spec: ExperimentSpec, out: Path, parts: Path) -> None:
    prof_lines = [PROFILE_COLUMNS]
    surf_lines = [PROFILE_COLUMNS]
    mom_lines = [MOMENT_COLUMNS]
    samp_lines = [SAMPLE_COLUMNS]

    for L in spec.Ls:
        times = spec.record_times_for(L)
        rs = range(1, L)
        for p in spec.ps:
            data = _load_shard(parts, _point_key(spec.backend, L, p))
            n = int(data["n"])
            pm, pe = _stats(data["prof_s"], data["prof_s2"], n)
            mm, me = _stats(data["mom_s"], data["mom_s2"], n)
            for ti, t in enumerate(times):
                for ri, r in enumerate(rs):
                    prof_lines.append(
                        f"{spec.backend},{L},{_fmt(p)},{spec.boundary},{t},{r},"
                        f"{_fmt(pm[ti, ri])},{_fmt(pe[ti, ri])},{n}"
                    )
                for k in range(spec.k_max + 1):
                    mom_lines.append(
                        f"{spec.backend},{L},{_fmt(p)},{t},{k},"
                        f"{_fmt(mm[ti, k])},{_fmt(me[ti, k])},{n}"
                    )
            if "perp_s" in data:
                sm, se = _stats(data["perp_s"], data["perp_s2"], n)
                for ti, t in enumerate(times):
                    for ri, r in enumerate(rs):
                        surf_lines.append(
                            f"{spec.backend},{L},{_fmt(p)},{spec.boundary},{t},{r},"
                            f"{_fmt(sm[ti, ri])},{_fmt(se[ti, ri])},{n}"
                        )
            if "samples" in data:
                samples = data["samples"]
                for traj in range(samples.shape[0]):
                    for ti, t in enumerate(times):
                        for k in range(spec.k_max + 1):
                            samp_lines.append(
                                f"{spec.backend},{L},{_fmt(p)},{t},{k},{traj},"
                                f"{_fmt(samples[traj, ti, k])}"
                            )

    (out / "profiles.csv").write_text("\n".join(prof_lines) + "\n")
    (out / "moments.csv").write_text("\n".join(mom_lines) + "\n")
    if len(surf_lines) > 1:
        (out / "surface.csv").write_text("\n".join(surf_lines) + "\n")
    if spec.keep_samples:
        (out / "samples.csv").write_text("\n".join(samp_lines) + "\n")


# ---------------------------------------------------------------------------
# CSV readers (consumed by the fit subcommands)

def read_profiles(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "backend": row["backend"], "L": int(row["L"]), "p": float(row["p"]),
                "boundary": row["boundary"], "t": int(row["t"]), "r": int(row["r"]),
                "eae_mean": float(row["eae_mean"]), "eae_stderr": float(row["eae_stderr"]),
                "n_samples": int(row["n_samples"]),
            })
    return rows


def read_moments(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "backend": row["backend"], "L": int(row["L"]), "p": float(row["p"]),
                "t": int(row["t"]), "k": int(row["k"]),
                "value": float(row["value"]), "stderr": float(row["stderr"]),
                "n_samples": int(row["n_samples"]),
            })
    return rows


def read_samples(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "backend": row["backend"], "L": int(row["L"]), "p": float(row["p"]),
                "t": int(row["t"]), "k": int(row["k"]), "traj": int(row["traj"]),
                "value": float(row["value"]),
            })
    return rows


# ---------------------------------------------------------------------------
# fit directives run straight from a finished sweep

def _fit_to_dict(fit) -> dict:
    return {
        "params": fit.params, "errors": fit.errors, "objective": fit.objective,
        "window": list(fit.window) if isinstance(fit.window, tuple) else fit.window,
        "n_points": fit.n_points, "flags": fit.flags, "meta": fit.meta,
    }


def write_report(path: Path, kind: str, fit, inputs: dict) -> None:
    doc = {"fit": kind, "inputs": inputs, **_fit_to_dict(fit)}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _run_fits(spec: ExperimentSpec, out: Path) -> None:
    from .scaling import (CollapseCurve, fit_collapse, fit_dynamic_exponents,
                          fit_power_law, surface_exponents)
    from .ensemble import MomentSeries

    profiles = read_profiles(out / "profiles.csv")
    moments = read_moments(out / "moments.csv")

    if "powerlaw" in spec.fits:
        for L in spec.Ls:
            t_steady = spec.t_max_for(L)
            rmax = spec.fit_rmax if spec.fit_rmax > 0 else L / 4
            for p in spec.ps:
                rows = [r for r in profiles
                        if r["L"] == L and abs(r["p"] - p) < 1e-12 and r["t"] == t_steady]
                rs = np.array([r["r"] for r in rows], dtype=float)
                ys = np.array([r["eae_mean"] for r in rows])
                try:
                    fit = fit_power_law(rs, ys, (spec.fit_rmin, rmax))
                except ValueError as exc:
                    fit = None
                    (out / f"fit_powerlaw_{_point_key(spec.backend, L, p)}.json").write_text(
                        json.dumps({"fit": "powerlaw", "error": str(exc)}, indent=2) + "\n")
                if fit is not None:
                    write_report(out / f"fit_powerlaw_{_point_key(spec.backend, L, p)}.json",
                                 "powerlaw", fit, {"L": L, "p": p, "t": t_steady})

    if "collapse" in spec.fits:
        curves = []
        for L in spec.Ls:
            t_steady = spec.t_max_for(L)
            rows = [r for r in moments if r["L"] == L and r["t"] == t_steady and r["k"] == 0]
            rows.sort(key=lambda r: r["p"])
            curves.append(CollapseCurve(
                L,
                np.array([r["p"] for r in rows]),
                np.array([r["value"] for r in rows]),
                np.array([r["stderr"] for r in rows]),
            ))
        fit = fit_collapse(curves, bounds=spec.collapse_bounds, seed=spec.seed)
        write_report(out / "fit_collapse.json", "collapse", fit,
                     {"Ls": list(spec.Ls), "ps": list(spec.ps)})

    if "dynamic" in spec.fits:
        for L in spec.Ls:
            tmax = spec.fit_tmax if spec.fit_tmax > 0 else L / 4
            for p in spec.ps:
                series = []
                for k in range(spec.k_max + 1):
                    rows = [r for r in moments
                            if r["L"] == L and abs(r["p"] - p) < 1e-12 and r["k"] == k]
                    rows.sort(key=lambda r: r["t"])
                    series.append(MomentSeries(
                        k, [r["t"] for r in rows], [r["value"] for r in rows],
                        [r["stderr"] for r in rows]))
                fit = fit_dynamic_exponents(series, (spec.fit_tmin, tmax))
                write_report(out / f"fit_dynamic_{_point_key(spec.backend, L, p)}.json",
                             "dynamic", fit, {"L": L, "p": p})

    if "surface" in spec.fits:
        surface = read_profiles(out / "surface.csv")
        L_big = max(spec.Ls)
        p0 = spec.ps[0]
        rows = [r for r in surface
                if r["L"] == L_big and abs(r["p"] - p0) < 1e-12
                and r["t"] == spec.t_max_for(L_big)]
        rs = np.array([r["r"] for r in rows], dtype=float)
        ys = np.array([r["eae_mean"] for r in rows])
        par_L, par_v = [], []
        for L in spec.Ls:
            rowL = [r for r in surface
                    if r["L"] == L and abs(r["p"] - p0) < 1e-12
                    and r["t"] == spec.t_max_for(L) and r["r"] == L - 1]
            if rowL:
                par_L.append(L)
                par_v.append(rowL[0]["eae_mean"])
        rmax = spec.fit_rmax if spec.fit_rmax > 0 else L_big / 4
        fit = surface_exponents(rs, ys, par_L, par_v, spec.bulk_eta,
                                perp_window=(spec.fit_rmin, rmax))
        write_report(out / "fit_surface.json", "surface", fit,
                     {"Ls": list(spec.Ls), "p": p0, "bulk_eta": spec.bulk_eta})

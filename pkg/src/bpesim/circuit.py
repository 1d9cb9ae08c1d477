"""Brickwork hybrid circuit driver: Clifford layers with probabilistic z measurements.

One time step is two brick layers (even pairs, then odd pairs); after each
gate layer every qubit is measured independently with probability p.  A
per-step measurement variant (one round per time step) is kept behind
`measure_per_layer=False`.

Randomness comes from counter-based Philox streams keyed on
(master seed, backend, L, p, trajectory index, stream id), so every
trajectory is reproducible in isolation and observable evaluation never
perturbs circuit randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .clifford2 import CLIFFORD2_ORDER
from .ensemble import moment_weights, profile_values, surface_profiles, eae_pair_values
from .errors import CapacityError, ConfigError
from .tableau import Tableau, new_zero_state

MAX_CLIFFORD_QUBITS = 4096

_BACKEND_CODES = {"clifford": 1, "haar": 2}
_STREAM_CIRCUIT = 0
_STREAM_BPE = 1


@dataclass(frozen=True)
class CircuitConfig:
    """Static description of one simulation point."""

    L: int
    p: float
    t_max: int
    record_times: tuple = ()
    boundary: str = "periodic"
    seed: int = 0
    positions_mode: str = "fixed_origin"
    measure_per_layer: bool = True
    track_signs: bool = True
    k_max: int = 3
    moment_r_metric: str = "ring"

    def __post_init__(self):
        if self.L < 2 or self.L % 2:
            raise ConfigError("L", f"system size must be even and >= 2, got {self.L}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p", f"measurement probability must lie in [0, 1], got {self.p}")
        if self.t_max < 1:
            raise ConfigError("t_max", f"need at least one time step, got {self.t_max}")
        if self.boundary not in ("periodic", "open"):
            raise ConfigError("boundary", f"unknown boundary {self.boundary!r}")
        if self.positions_mode not in ("fixed_origin", "translation_average"):
            raise ConfigError("positions_mode", f"unknown mode {self.positions_mode!r}")
        if self.positions_mode == "translation_average" and self.boundary != "periodic":
            raise ConfigError("positions_mode", "translation averaging needs a periodic chain")
        if self.seed < 0:
            raise ConfigError("seed", "seed must be a nonnegative integer")
        if self.k_max < 0:
            raise ConfigError("k_max", "moment order cap must be nonnegative")
        times = tuple(sorted(set(int(t) for t in self.record_times)))
        if times and (times[0] < 0 or times[-1] > self.t_max):
            raise ConfigError("record_times", f"times must lie in [0, {self.t_max}]")
        object.__setattr__(self, "record_times", times)


@dataclass
class TrajectoryRecord:
    """Observables of one trajectory at the recorded times.

    `profile[i]` is the exact EAE-versus-r curve at record_times[i] (bulk or
    fixed-origin, per the config); `perp` additionally holds the edge-anchored
    curve for open chains.  `moments[i, k]` is the k-moment of the profile.
    """

    traj_index: int
    times: np.ndarray
    profile: np.ndarray
    moments: np.ndarray
    perp: Optional[np.ndarray] = None
    parallel: Optional[np.ndarray] = None
    seed_lineage: str = ""


def brickwork_pairs(L: int, parity: str, boundary: str) -> np.ndarray:
    """Site pairs of one brick layer, ordered, shape (n_gates, 2)."""
    if parity == "even":
        return np.array([[2 * i, 2 * i + 1] for i in range(L // 2)], dtype=np.int64)
    if parity != "odd":
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    pairs = [[2 * i + 1, 2 * i + 2] for i in range(L // 2 - 1)]
    if boundary == "periodic":
        pairs.append([L - 1, 0])
    return np.array(pairs, dtype=np.int64)


def trajectory_rng(cfg: CircuitConfig, traj_index: int, backend: str = "clifford",
                   stream: int = _STREAM_CIRCUIT) -> np.random.Generator:
    """Counter-based stream for (seed, backend, L, p, trajectory, stream id)."""
    seq = np.random.SeedSequence(
        [int(cfg.seed), _BACKEND_CODES[backend], int(cfg.L),
         int(round(cfg.p * 1e9)), int(traj_index), int(stream)]
    )
    return np.random.Generator(np.random.Philox(seq))


def step(t: Tableau, cfg: CircuitConfig, parity: str, rng: np.random.Generator,
         measure: bool = True) -> None:
    """One brick layer: sampled two-qubit Cliffords, then a measurement round."""
    pairs = brickwork_pairs(cfg.L, parity, cfg.boundary)
    gate_idx = rng.integers(0, CLIFFORD2_ORDER, size=pairs.shape[0])
    t.apply_gate_layer(pairs, gate_idx)
    if measure:
        measurement_round(t, cfg, rng)


def measurement_round(t: Tableau, cfg: CircuitConfig, rng: np.random.Generator) -> np.ndarray:
    """Measure each qubit with probability p; returns the measured site list."""
    mask = rng.random(cfg.L) < cfg.p
    sites = np.flatnonzero(mask).astype(np.int64)
    if sites.size:
        t.measure_round(sites, rng, cfg.track_signs)
    return sites


def run_trajectory(cfg: CircuitConfig, traj_index: int) -> TrajectoryRecord:
    """Evolve |0...0> for t_max steps, recording EAE observables on schedule.

    A deterministic function of (cfg.seed, traj_index): reruns are
    bit-identical regardless of thread placement.
    """
    if cfg.L > MAX_CLIFFORD_QUBITS:
        raise CapacityError(f"clifford backend caps L at {MAX_CLIFFORD_QUBITS}, got {cfg.L}")
    rng = trajectory_rng(cfg, traj_index, "clifford", _STREAM_CIRCUIT)
    # reserved for observable evaluation; the stabilizer sweep is draw-free
    # but the stream keeps the contract explicit
    bpe_rng = trajectory_rng(cfg, traj_index, "clifford", _STREAM_BPE)

    tab = new_zero_state(cfg.L)
    times = np.asarray(cfg.record_times, dtype=np.int64)
    n_rec = times.size
    n_r = cfg.L - 1
    profile = np.zeros((n_rec, n_r), dtype=np.float64)
    moments = np.zeros((n_rec, cfg.k_max + 1), dtype=np.float64)
    perp = np.zeros((n_rec, n_r), dtype=np.float64) if cfg.boundary == "open" else None
    parallel = np.zeros(n_rec, dtype=np.float64) if cfg.boundary == "open" else None

    weights = np.stack([
        moment_weights(np.arange(1, cfg.L), k, cfg.L, cfg.moment_r_metric)
        for k in range(cfg.k_max + 1)
    ])
    scale = np.array([float(cfg.L) ** (k + 1) for k in range(cfg.k_max + 1)])

    rec_pos = {int(t): i for i, t in enumerate(times)}

    def record(i: int) -> None:
        vals = profile_values(tab, cfg.boundary, cfg.positions_mode)
        profile[i] = vals
        moments[i] = weights @ vals / scale
        if perp is not None:
            rs = np.arange(1, cfg.L, dtype=np.int64)
            pv = eae_pair_values(tab, np.zeros(n_r, dtype=np.int64), rs)
            perp[i] = pv
            parallel[i] = pv[-1]

    if 0 in rec_pos:
        record(rec_pos[0])
    for t_now in range(1, cfg.t_max + 1):
        step(tab, cfg, "even", rng, measure=cfg.measure_per_layer)
        step(tab, cfg, "odd", rng, measure=True)
        if t_now in rec_pos:
            record(rec_pos[t_now])

    lineage = f"seed={cfg.seed}/clifford/L={cfg.L}/p={cfg.p!r}/traj={traj_index}"
    return TrajectoryRecord(
        traj_index=traj_index, times=times, profile=profile, moments=moments,
        perp=perp, parallel=parallel, seed_lineage=lineage,
    )


def record_schedule(mode: str, t_max: int) -> tuple:
    """Named recording schedules.

    'steady' records the final time only; 'all' every step; 'log' roughly
    log-spaced integer times plus the final time; 'early' the first
    min(t_max, 64) steps (dynamic-exponent windows).
    """
    if mode == "steady":
        return (t_max,)
    if mode == "all":
        return tuple(range(1, t_max + 1))
    if mode == "early":
        return tuple(range(1, min(t_max, 64) + 1))
    if mode == "log":
        ts = np.unique(np.round(np.geomspace(1, t_max, num=24)).astype(int))
        return tuple(int(t) for t in ts)
    raise ConfigError("record", f"unknown schedule {mode!r}")

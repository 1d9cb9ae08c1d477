"""Dense statevector backend: Haar brickwork circuits with projective measurements.

States are plain complex128 vectors of length 2**L with site 0 as the most
significant bit of the basis index.  The brickwork layout and measurement
placement mirror the stabilizer engine exactly, so the two backends can be
driven with shared randomness for cross-checks.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .circuit import CircuitConfig, TrajectoryRecord, brickwork_pairs, trajectory_rng
from .ensemble import eae_exact_statevector, moment_weights
from .errors import CapacityError

MAX_HAAR_QUBITS = 16


def num_qubits(psi: np.ndarray) -> int:
    L = psi.size.bit_length() - 1
    if psi.size != (1 << L):
        raise ValueError("statevector length is not a power of two")
    return L


def zero_statevector(L: int) -> np.ndarray:
    if L > MAX_HAAR_QUBITS:
        raise CapacityError(f"dense backend caps L at {MAX_HAAR_QUBITS}, got {L}")
    psi = np.zeros(1 << L, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def sample_haar_unitary4(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 4x4 unitary via Ginibre + QR with phase-fixed diagonal."""
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def apply_unitary2(psi: np.ndarray, U: np.ndarray, j: int, k: int) -> None:
    """Apply a 4x4 unitary to sites (j, k) in place; j is the high bit of U's basis."""
    L = num_qubits(psi)
    if j == k or not (0 <= j < L and 0 <= k < L):
        raise ValueError(f"sites ({j}, {k}) invalid for L={L}")
    v = psi.reshape((2,) * L)
    out = np.tensordot(U.reshape(2, 2, 2, 2), v, axes=([2, 3], [j, k]))
    psi[:] = np.moveaxis(out, (0, 1), (j, k)).reshape(-1)


def _branch_norms(psi: np.ndarray, j: int) -> tuple[float, float]:
    L = num_qubits(psi)
    v = np.moveaxis(psi.reshape((2,) * L), j, 0).reshape(2, -1)
    n0 = float(np.sum(np.abs(v[0]) ** 2))
    n1 = float(np.sum(np.abs(v[1]) ** 2))
    return n0, n1


def _project(psi: np.ndarray, j: int, bit: int, prob: float) -> None:
    L = num_qubits(psi)
    v = np.moveaxis(psi.reshape((2,) * L), j, 0)
    v[1 - bit] = 0.0
    psi *= 1.0 / np.sqrt(prob)


def measure_z_statevector(psi: np.ndarray, j: int, rng: np.random.Generator) -> int:
    """Born-rule z measurement of site j; projects in place, returns +1 or -1."""
    n0, n1 = _branch_norms(psi, j)
    bit = 1 if rng.random() < n1 else 0
    prob = n1 if bit else n0
    if prob < 1e-14:
        raise AssertionError(f"selected a branch of weight {prob}")
    _project(psi, j, bit, prob)
    return 1 if bit == 0 else -1


def measure_z_forced(psi: np.ndarray, j: int, outcome: int) -> float:
    """Project site j onto a prescribed +/-1 outcome; returns the branch weight.

    Used to drive this backend with outcomes recorded from another simulator.
    """
    bit = 0 if outcome == 1 else 1
    n0, n1 = _branch_norms(psi, j)
    prob = n1 if bit else n0
    if prob < 1e-12:
        raise AssertionError(f"forced outcome {outcome} on site {j} has weight {prob}")
    _project(psi, j, bit, prob)
    return prob


def region_entropy_statevector(psi: np.ndarray, region: Sequence[int]) -> float:
    """Von Neumann entropy of `region` in nats, from the Schmidt spectrum."""
    L = num_qubits(psi)
    sites = sorted(set(int(s) for s in region))
    if len(sites) == 0 or len(sites) == L:
        return 0.0
    v = np.moveaxis(psi.reshape((2,) * L), sites, range(len(sites)))
    m = v.reshape(1 << len(sites), -1)
    sv = np.linalg.svd(m, compute_uv=False)
    lam = np.clip(sv.astype(float) ** 2, 0.0, 1.0)
    lam = lam[lam > 1e-300]
    return float(-np.sum(lam * np.log(lam)))


def run_trajectory_haar(cfg: CircuitConfig, traj_index: int) -> TrajectoryRecord:
    """Haar-circuit counterpart of the stabilizer trajectory runner.

    Same brickwork layout and measurement placement; EAE profiles come from
    exact outcome enumeration at the recorded times.
    """
    if cfg.L > MAX_HAAR_QUBITS:
        raise CapacityError(f"dense backend caps L at {MAX_HAAR_QUBITS}, got {cfg.L}")
    rng = trajectory_rng(cfg, traj_index, "haar")

    psi = zero_statevector(cfg.L)
    times = np.asarray(cfg.record_times, dtype=np.int64)
    n_r = cfg.L - 1
    profile = np.zeros((times.size, n_r), dtype=np.float64)
    moments = np.zeros((times.size, cfg.k_max + 1), dtype=np.float64)

    weights = np.stack([
        moment_weights(np.arange(1, cfg.L), k, cfg.L, cfg.moment_r_metric)
        for k in range(cfg.k_max + 1)
    ])
    scale = np.array([float(cfg.L) ** (k + 1) for k in range(cfg.k_max + 1)])
    rec_pos = {int(t): i for i, t in enumerate(times)}

    def gate_layer(parity: str) -> None:
        for j, k in brickwork_pairs(cfg.L, parity, cfg.boundary):
            apply_unitary2(psi, sample_haar_unitary4(rng), int(j), int(k))

    def measure_round() -> None:
        mask = rng.random(cfg.L) < cfg.p
        for j in np.flatnonzero(mask):
            measure_z_statevector(psi, int(j), rng)

    def record(i: int) -> None:
        if cfg.positions_mode == "translation_average":
            acc = np.zeros(n_r)
            for a in range(cfg.L):
                acc += [eae_exact_statevector(psi, a, (a + r) % cfg.L)
                        for r in range(1, cfg.L)]
            profile[i] = acc / cfg.L
        else:
            if cfg.boundary == "periodic":
                ab = [(0, r) for r in range(1, cfg.L)]
            else:
                ab = [((cfg.L - 1 - r) // 2, (cfg.L - 1 - r) // 2 + r)
                      for r in range(1, cfg.L)]
            profile[i] = [eae_exact_statevector(psi, a, b) for a, b in ab]
        moments[i] = weights @ profile[i] / scale

    if 0 in rec_pos:
        record(rec_pos[0])
    for t_now in range(1, cfg.t_max + 1):
        gate_layer("even")
        if cfg.measure_per_layer:
            measure_round()
        gate_layer("odd")
        measure_round()
        if t_now in rec_pos:
            record(rec_pos[t_now])

    lineage = f"seed={cfg.seed}/haar/L={cfg.L}/p={cfg.p!r}/traj={traj_index}"
    return TrajectoryRecord(
        traj_index=traj_index, times=times, profile=profile, moments=moments,
        seed_lineage=lineage,
    )

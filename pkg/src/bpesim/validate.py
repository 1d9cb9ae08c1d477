"""Oracle-equivalence suite: the tableau backend against dense references.

The dense side is built independently of the tableau machinery: the whole
two-qubit Clifford group is generated as 4x4 matrices by closure over
{H, S, CNOT} and indexed by numerically computed conjugation images, so a
sampled gate can be replayed on a statevector without trusting any of the
bit-packed code paths it is checking.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .circuit import CircuitConfig, brickwork_pairs, trajectory_rng
from .clifford2 import CLIFFORD2_ORDER, enumerate_clifford2
from .ensemble import bpe_entropy_stabilizer
from .haar import measure_z_forced, region_entropy_statevector
from .pauli import PauliString
from .tableau import Tableau, new_zero_state

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j]).astype(complex)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_I2 = np.eye(2, dtype=complex)

_P1 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def _canonical_phase(u: np.ndarray) -> np.ndarray:
    mags = np.abs(u).ravel()
    k = int(np.flatnonzero(mags >= mags.max() - 1e-9)[0])
    return u * (abs(u.flat[k]) / u.flat[k])


def _matrix_key(u: np.ndarray) -> tuple:
    c = _canonical_phase(u)
    return tuple(np.round(c.ravel() * 8.0, 5).tolist())


def _pauli_matrix_2q(p: PauliString) -> np.ndarray:
    label = p.to_label()[1:]
    return p.sign * np.kron(_P1[label[0]], _P1[label[1]])


@lru_cache(maxsize=1)
def _pauli_basis_2q() -> tuple:
    letters = ["I", "X", "Z", "Y"]
    labels = [c0 + c1 for c0 in letters for c1 in letters]
    stack = np.stack([np.kron(_P1[lab[0]], _P1[lab[1]]) for lab in labels])
    return labels, stack


def _image_key_of_dense(u: np.ndarray) -> tuple:
    """Conjugation images of X0, Z0, X1, Z1 as (x_bits, z_bits, sign) triples."""
    gens = [np.kron(_P1["X"], _I2), np.kron(_P1["Z"], _I2),
            np.kron(_I2, _P1["X"]), np.kron(_I2, _P1["Z"])]
    labels, stack = _pauli_basis_2q()
    key = []
    for g in gens:
        img = u @ g @ u.conj().T
        coefs = np.einsum("kji,ji->k", stack.conj(), img) / 4.0
        hits = np.flatnonzero(np.abs(coefs) > 0.5)
        if hits.size != 1:
            raise AssertionError("conjugation image is not a signed Pauli")
        k = int(hits[0])
        sign = 1 if coefs[k].real > 0 else -1
        p = PauliString.from_label(labels[k], sign)
        key.append((p.x_bits, p.z_bits, p.sign))
    return tuple(key)


@lru_cache(maxsize=1)
def dense_clifford_group() -> dict:
    """image-key -> canonical 4x4 matrix, for all 11520 two-qubit Cliffords."""
    gens = [
        np.kron(_H, _I2), np.kron(_I2, _H),
        np.kron(_S, _I2), np.kron(_I2, _S),
        _CNOT,
    ]
    seen = {}
    frontier = [np.eye(4, dtype=complex)]
    seen[_matrix_key(frontier[0])] = frontier[0]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = _canonical_phase(g @ u)
                k = _matrix_key(v)
                if k not in seen:
                    seen[k] = v
                    nxt.append(v)
        frontier = nxt
    if len(seen) != CLIFFORD2_ORDER:
        raise AssertionError(f"group closure found {len(seen)} elements")
    return {_image_key_of_dense(u): u for u in seen.values()}


@lru_cache(maxsize=1)
def dense_unitaries_by_index() -> np.ndarray:
    """Dense 4x4 matrix for every canonical gate index, shape (11520, 4, 4)."""
    group = dense_clifford_group()
    out = np.zeros((CLIFFORD2_ORDER, 4, 4), dtype=complex)
    for i, gate in enumerate(enumerate_clifford2()):
        out[i] = group[gate.key()]
    return out


# ---------------------------------------------------------------------------
# checks

def _dense_apply(psi: np.ndarray, u4: np.ndarray, j: int, k: int) -> np.ndarray:
    L = psi.size.bit_length() - 1
    v = psi.reshape((2,) * L)
    out = np.tensordot(u4.reshape(2, 2, 2, 2), v, axes=([2, 3], [j, k]))
    return np.moveaxis(out, (0, 1), (j, k)).reshape(-1)


def check_oracle_equivalence(n_circuits: int = 1000, max_L: int = 8, seed: int = 7,
                             tol: float = 1e-9, regions_per_step: int = 3) -> dict:
    """Shared-stream hybrid circuits: tableau entropies versus dense entropies.

    Every circuit draws random sizes, gates and measurement positions; the
    dense run is forced to the tableau's outcomes.  Checks region entropies
    after every step.
    """
    rng = np.random.default_rng(seed)
    unitaries = dense_unitaries_by_index()
    worst = 0.0
    checks = 0
    sizes = [v for v in range(2, max_L + 1, 2)]
    for _ in range(n_circuits):
        L = int(rng.choice(sizes))
        p = float(rng.uniform(0.05, 0.5))
        steps = int(rng.integers(2, 2 * L + 1))
        cfg = CircuitConfig(L=L, p=p, t_max=steps, seed=int(rng.integers(2**32)))
        tab = new_zero_state(L)
        psi = np.zeros(1 << L, dtype=complex)
        psi[0] = 1.0
        crng = trajectory_rng(cfg, 0, "clifford")
        for _step in range(steps):
            for parity in ("even", "odd"):
                pairs = brickwork_pairs(L, parity, cfg.boundary)
                gidx = crng.integers(0, CLIFFORD2_ORDER, size=pairs.shape[0])
                tab.apply_gate_layer(pairs, gidx)
                for (j, k), gi in zip(pairs, gidx):
                    psi = _dense_apply(psi, unitaries[int(gi)], int(j), int(k))
                mask = crng.random(L) < p
                sites = np.flatnonzero(mask).astype(np.int64)
                if sites.size:
                    outcomes = tab.measure_round(sites, crng, track_signs=True)
                    for s, o in zip(sites, outcomes):
                        measure_z_forced(psi, int(s), int(o))
            for _ in range(regions_per_step):
                size = int(rng.integers(1, L))
                region = rng.choice(L, size=size, replace=False)
                s_tab = tab.entanglement_entropy(region)
                s_dense = region_entropy_statevector(psi, region)
                diff = abs(s_tab - s_dense)
                worst = max(worst, diff)
                checks += 1
                if diff > tol:
                    return {"ok": False, "worst": worst, "checks": checks,
                            "detail": f"L={L} p={p} region={sorted(region)}"}
    return {"ok": True, "worst": worst, "checks": checks}


def check_outcome_independence(n_states: int = 1000, n_streams: int = 100,
                               L: int = 12, seed: int = 11) -> dict:
    """Projected-pair entropies must not depend on the measurement stream.

    Evaluates each random stabilizer state both through the sign-free sweep
    (across distinct rng objects) and through explicit sign-tracked
    measurement sweeps whose outcomes genuinely differ, asserting bit-equal
    entropies throughout.
    """
    from .clifford2 import sample_clifford2

    rng = np.random.default_rng(seed)
    for idx in range(n_states):
        tab = new_zero_state(L)
        for _ in range(3 * L):
            j, k = (int(v) for v in rng.choice(L, size=2, replace=False))
            tab.apply_clifford2(sample_clifford2(rng), j, k)
        a, b = (int(v) for v in rng.choice(L, size=2, replace=False))
        base = bpe_entropy_stabilizer(tab, a, b, np.random.default_rng(0))
        for s in range(n_streams):
            v = bpe_entropy_stabilizer(tab, a, b, np.random.default_rng(1000 + s))
            if v != base:
                return {"ok": False, "detail": f"sweep value drifted on state {idx}"}
        # sign-tracked sweeps: outcomes differ between streams, entropies match
        for s in range(3):
            scratch = tab.copy()
            srng = np.random.default_rng(5000 + 7 * s)
            sites = np.array([j for j in range(L) if j not in (a, b)], dtype=np.int64)
            scratch.measure_round(sites, srng, track_signs=True)
            v = scratch.entanglement_entropy([a])
            if v != base:
                return {"ok": False,
                        "detail": f"signed sweep disagreed on state {idx} stream {s}"}
    return {"ok": True, "states": n_states}


def check_sampler_uniformity(n_draws: int = 200_000, seed: int = 3) -> dict:
    """Chi-square of sampled gates against the full enumeration."""
    from scipy.stats import chi2

    from .clifford2 import gate_index, sample_clifford2

    rng = np.random.default_rng(seed)
    counts = np.zeros(CLIFFORD2_ORDER, dtype=np.int64)
    for _ in range(n_draws):
        counts[gate_index(sample_clifford2(rng))] += 1
    expected = n_draws / CLIFFORD2_ORDER
    stat = float(np.sum((counts - expected) ** 2 / expected))
    pval = float(chi2.sf(stat, CLIFFORD2_ORDER - 1))
    return {"ok": pval > 0.001, "chi2": stat, "p_value": pval, "draws": n_draws}


def run_battery(quick: bool = True, seed: int = 5) -> dict:
    """The standard validation battery; sizes shrink in quick mode."""
    results = {}
    results["oracle_equivalence"] = check_oracle_equivalence(
        n_circuits=120 if quick else 1000, seed=seed)
    results["outcome_independence"] = check_outcome_independence(
        n_states=120 if quick else 1000, n_streams=20 if quick else 100, seed=seed + 1)
    results["sampler_uniformity"] = check_sampler_uniformity(
        n_draws=100_000 if quick else 2_000_000, seed=seed + 2)
    results["ok"] = all(v["ok"] for v in results.values() if isinstance(v, dict))
    return results

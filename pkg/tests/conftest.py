"""Shared fixtures and independent dense-matrix helpers for the test suite.

The helpers here are written against textbook definitions (Kronecker
products, partial traces) so they stay independent of the bit-packed code
paths they are used to check.

Heavy ensemble runs cache their shards under ~/.cache/bpesim-tests (keyed by
the spec hash, via the experiment module's own resumable manifests); delete
that directory to force regeneration.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_pauli(label: str, sign: int = 1) -> np.ndarray:
    """Dense matrix of a Pauli label, site 0 as the most significant factor."""
    m = np.eye(1, dtype=complex)
    for c in label:
        m = np.kron(m, PAULI_1Q[c])
    return sign * m


def dense_region_entropy(psi: np.ndarray, region) -> float:
    """Textbook von Neumann entropy (nats) from the reduced density matrix."""
    L = psi.size.bit_length() - 1
    sites = sorted(region)
    rest = [j for j in range(L) if j not in sites]
    v = np.transpose(psi.reshape((2,) * L), sites + rest).reshape(1 << len(sites), -1)
    rho = v @ v.conj().T
    lam = np.linalg.eigvalsh(rho)
    lam = np.clip(lam.real, 0.0, 1.0)
    lam = lam[lam > 1e-14]
    return float(-np.sum(lam * np.log(lam)))


def naive_gf2_rank(rows: np.ndarray) -> int:
    """Reference row reduction over GF(2) on a dense 0/1 array."""
    m = np.array(rows, dtype=np.int64) % 2
    rank = 0
    for col in range(m.shape[1]):
        pivots = np.flatnonzero(m[rank:, col]) + rank
        if pivots.size == 0:
            continue
        piv = pivots[0]
        m[[rank, piv]] = m[[piv, rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] = (m[r] + m[rank]) % 2
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


def random_stabilizer_state(L: int, rng: np.random.Generator, depth: int | None = None):
    """A generic stabilizer state from a random all-to-all Clifford circuit."""
    from bpesim.clifford2 import sample_clifford2
    from bpesim.tableau import new_zero_state

    t = new_zero_state(L)
    for _ in range(depth if depth is not None else 3 * L):
        j, k = (int(v) for v in rng.choice(L, size=2, replace=False))
        t.apply_clifford2(sample_clifford2(rng), j, k)
    return t


@pytest.fixture(scope="session")
def test_cache_dir() -> Path:
    root = Path(os.environ.get("BPESIM_TEST_CACHE",
                               Path.home() / ".cache" / "bpesim-tests"))
    root.mkdir(parents=True, exist_ok=True)
    return root


def run_cached_experiment(test_cache_dir: Path, name: str, spec_kwargs: dict) -> Path:
    """Run (or resume) an experiment spec in a persistent per-name directory."""
    from bpesim.experiment import ExperimentSpec, run_experiment

    spec = ExperimentSpec(out_dir=str(test_cache_dir / name), **spec_kwargs)
    return run_experiment(spec)

"""Stabilizer tableau simulator: states, Clifford gates, z measurements, entropies.

A pure L-qubit stabilizer state is kept as the full tableau of L stabilizer
generators plus their L destabilizer partners, bit-packed into uint64 words.
Gates and measurements run in compiled kernels; this module owns validation,
randomness and conversions.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .clifford2 import CliffordGate2, gate_table_bank
from .errors import CapacityError
from .pauli import Gf2Matrix, PauliString, gf2_rank

LN2 = _kernels.LN2

_STATEVECTOR_MAX_QUBITS = 14


class Tableau:
    """Full stabilizer+destabilizer description of a pure stabilizer state.

    Rows 0..L-1 of the packed arrays are destabilizers, rows L..2L-1 the
    stabilizer generators.  A Tableau is single-writer: parallel trajectories
    must own distinct instances.
    """

    __slots__ = ("n", "n_words", "x", "z", "phase")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"need at least one qubit, got L={n}")
        self.n = n
        self.n_words = (n + 63) >> 6
        self.x = np.zeros((2 * n, self.n_words), dtype=np.uint64)
        self.z = np.zeros((2 * n, self.n_words), dtype=np.uint64)
        self.phase = np.zeros(2 * n, dtype=np.uint8)
        one = np.uint64(1)
        for j in range(n):
            self.x[j, j >> 6] |= one << np.uint64(j & 63)          # destabilizer +X_j
            self.z[n + j, j >> 6] |= one << np.uint64(j & 63)      # stabilizer +Z_j

    # -- conversions ---------------------------------------------------------

    def _row(self, r: int) -> PauliString:
        x = z = 0
        for w in range(self.n_words):
            x |= int(self.x[r, w]) << (64 * w)
            z |= int(self.z[r, w]) << (64 * w)
        sign = 1 if self.phase[r] == 0 else -1
        return PauliString(self.n, x, z, sign)

    @property
    def stabilizers(self) -> list[PauliString]:
        return [self._row(self.n + i) for i in range(self.n)]

    @property
    def destabilizers(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.n)]

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.n_words = self.n_words
        t.x = self.x.copy()
        t.z = self.z.copy()
        t.phase = self.phase.copy()
        return t

    def stabilizer_bits(self) -> tuple[np.ndarray, np.ndarray]:
        """Views of the stabilizer block of the packed arrays."""
        return self.x[self.n:], self.z[self.n:]

    # -- operations ----------------------------------------------------------

    def _check_site(self, j: int) -> None:
        if not 0 <= j < self.n:
            raise ValueError(f"site {j} out of range [0, {self.n})")

    def apply_clifford2(self, gate: CliffordGate2 | int, j: int, k: int) -> None:
        """Conjugate the state by a two-qubit Clifford acting on sites (j, k)."""
        self._check_site(j)
        self._check_site(k)
        if j == k:
            raise ValueError("gate sites must differ")
        if isinstance(gate, CliffordGate2):
            bank = gate.conj_table().reshape(1, 16)
            idx = 0
        else:
            bank = gate_table_bank()
            idx = int(gate)
        pairs = np.array([[j, k]], dtype=np.int64)
        gidx = np.array([idx], dtype=np.int64)
        _kernels.apply_gates(self.x, self.z, self.phase, pairs, gidx, bank, True)

    def apply_gate_layer(self, pairs: np.ndarray, gate_indices: np.ndarray) -> None:
        """Apply a whole brickwork layer of bank-indexed gates (hot path)."""
        _kernels.apply_gates(
            self.x, self.z, self.phase,
            np.ascontiguousarray(pairs, dtype=np.int64),
            np.ascontiguousarray(gate_indices, dtype=np.int64),
            gate_table_bank(), True,
        )

    def measure_z(self, j: int, rng: np.random.Generator | None = None,
                  track_signs: bool = True) -> int:
        """Measure Z on site j, collapsing the state; returns +1 or -1.

        An indeterminate outcome consumes one bit from `rng`.  With
        track_signs off no randomness is consumed, +Z_j is installed and the
        reported outcome is always +1; only entropy-style consumers may use
        that mode.
        """
        self._check_site(j)
        sites = np.array([j], dtype=np.int64)
        if track_signs:
            if rng is None:
                raise ValueError("sign-tracked measurement needs an rng")
            bits = rng.integers(0, 2, size=1).astype(np.int64)
        else:
            bits = np.zeros(1, dtype=np.int64)
        outcomes = np.zeros(1, dtype=np.int64)
        _kernels.measure_sites(self.x, self.z, self.phase, self.n, self.n_words,
                               sites, bits, track_signs, outcomes)
        return int(outcomes[0])

    def measure_round(self, sites: np.ndarray, rng: np.random.Generator | None,
                      track_signs: bool = True) -> np.ndarray:
        """Measure Z on each listed site in order; returns the +/-1 outcomes."""
        sites = np.ascontiguousarray(sites, dtype=np.int64)
        if track_signs:
            bits = rng.integers(0, 2, size=sites.size).astype(np.int64)
        else:
            bits = np.zeros(sites.size, dtype=np.int64)
        outcomes = np.zeros(sites.size, dtype=np.int64)
        _kernels.measure_sites(self.x, self.z, self.phase, self.n, self.n_words,
                               sites, bits, track_signs, outcomes)
        return outcomes

    def entanglement_entropy(self, region: Sequence[int]) -> float:
        """Von Neumann entropy of `region` in nats: (rank of the restricted
        stabilizer matrix minus |region|) times ln 2."""
        sites_list = [int(s) for s in region]
        sites = np.asarray(sorted(set(sites_list)), dtype=np.int64)
        if sites.size != len(sites_list):
            raise ValueError("region sites must be unique")
        if sites.size == 0 or sites.size == self.n:
            return 0.0
        if sites[0] < 0 or sites[-1] >= self.n:
            raise ValueError("region sites out of range")
        xs, zs = self.stabilizer_bits()
        rank = _kernels.region_rank(xs, zs, self.n, self.n_words, sites)
        return float(rank - sites.size) * LN2

    def to_statevector(self) -> np.ndarray:
        """The stabilized unit vector (site 0 = most significant bit).

        Built by applying the stabilizer-group projector to a fixed
        full-support seed vector; defined up to global phase.
        """
        if self.n > _STATEVECTOR_MAX_QUBITS:
            raise CapacityError(
                f"to_statevector supports at most {_STATEVECTOR_MAX_QUBITS} qubits, got {self.n}"
            )
        dim = 1 << self.n
        seed_rng = np.random.default_rng(0x5EED)
        v = seed_rng.standard_normal(dim) + 1j * seed_rng.standard_normal(dim)
        for g in self.stabilizers:
            v = 0.5 * (v + apply_pauli_statevector(g, v))
        norm = np.linalg.norm(v)
        if norm < 1e-9:
            # astronomically unlikely for the fixed seed; fall back to basis seeds
            for k in range(dim):
                v = np.zeros(dim, dtype=complex)
                v[k] = 1.0
                for g in self.stabilizers:
                    v = 0.5 * (v + apply_pauli_statevector(g, v))
                norm = np.linalg.norm(v)
                if norm > 1e-9:
                    break
        v = v / np.linalg.norm(v)
        # fix the global phase: largest amplitude becomes real positive
        k = int(np.argmax(np.abs(v)))
        v = v * (abs(v[k]) / v[k])
        return v

    # -- diagnostics ----------------------------------------------------------

    def check_invariants(self) -> None:
        """Raise AssertionError unless the full tableau structure is intact."""
        from .pauli import commutes

        stabs = self.stabilizers
        destabs = self.destabilizers
        assert len(stabs) == self.n, "stabilizer count drifted"
        for a in range(self.n):
            assert self.phase[a] % 2 == 0 and self.phase[self.n + a] % 2 == 0, \
                "row phase is not real"
            for b in range(a + 1, self.n):
                assert commutes(stabs[a], stabs[b]), "stabilizers must commute"
                assert commutes(destabs[a], destabs[b]), "destabilizers must commute"
            for b in range(self.n):
                want = a != b
                assert commutes(destabs[a], stabs[b]) == want, \
                    "destabilizer pairing broken"
        m = Gf2Matrix(
            2 * self.n,
            [p.x_bits | (p.z_bits << self.n) for p in stabs],
        )
        assert gf2_rank(m) == self.n, "stabilizer rows are linearly dependent"


def new_zero_state(L: int) -> Tableau:
    """|0...0> on L qubits: stabilizers +Z_j, destabilizers +X_j."""
    return Tableau(L)


def apply_pauli_statevector(p: PauliString, psi: np.ndarray) -> np.ndarray:
    """Apply a signed Pauli string to a dense vector (site 0 = MSB)."""
    n = p.n
    if psi.size != (1 << n):
        raise ValueError("vector length does not match the Pauli string")
    # map site bitsets to basis-index bitsets (site j -> bit n-1-j)
    xm = zm = 0
    for j in range(n):
        if (p.x_bits >> j) & 1:
            xm |= 1 << (n - 1 - j)
        if (p.z_bits >> j) & 1:
            zm |= 1 << (n - 1 - j)
    idx = np.arange(1 << n, dtype=np.uint64)
    par = np.bitwise_count(idx & np.uint64(zm)).astype(np.int64) & 1
    n_y = (p.x_bits & p.z_bits).bit_count()
    factor = p.sign * (1j ** n_y) * np.where(par, -1.0, 1.0)
    out = np.zeros_like(psi, dtype=complex)
    out[idx ^ np.uint64(xm)] = psi * factor
    return out

"""Numba kernels for the bit-packed tableau.

Rows of a tableau are stored as (n_rows, n_words) uint64 arrays for the x and
z support bits plus a uint8 phase array holding the exponent of i mod 4 (always
even for stored rows).  Site j lives in word j >> 6, bit j & 63.  All random
numbers are drawn by the caller and passed in as arrays, so kernels are pure
functions of their inputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

_1 = uint64(1)
_M1 = uint64(0x5555555555555555)
_M2 = uint64(0x3333333333333333)
_M4 = uint64(0x0F0F0F0F0F0F0F0F)
_H01 = uint64(0x0101010101010101)

LN2 = 0.6931471805599453


@njit(cache=True, inline="always")
def _popcount(v):
    v = v - ((v >> _1) & _M1)
    v = (v & _M2) + ((v >> uint64(2)) & _M2)
    v = (v + (v >> uint64(4))) & _M4
    return (v * _H01) >> uint64(56)


@njit(cache=True, inline="always")
def _rowmult(x, z, phase, r, p, n_words, track_phase):
    """Row update r <- (row p) * (row r), with exponent-of-i accumulation."""
    acc = 0
    if track_phase:
        for w in range(n_words):
            xr = x[r, w]
            zr = z[r, w]
            xp = x[p, w]
            zp = z[p, w]
            acc += int(_popcount(xp & zp)) + int(_popcount(xr & zr))
            acc += 2 * int(_popcount(zp & xr))
            acc -= int(_popcount((xp ^ xr) & (zp ^ zr)))
            x[r, w] = xr ^ xp
            z[r, w] = zr ^ zp
        phase[r] = np.uint8((int(phase[r]) + int(phase[p]) + acc) & 3)
    else:
        for w in range(n_words):
            x[r, w] ^= x[p, w]
            z[r, w] ^= z[p, w]


@njit(cache=True)
def apply_gates(x, z, phase, pairs, gate_idx, bank, track_phase):
    """Conjugate every row by a layer of two-qubit gates.

    pairs[g] = (j, k) with j the gate's first site; gate_idx[g] indexes the
    conjugation-table bank (shape (n_gates, 16) uint8).
    """
    n_rows = x.shape[0]
    for g in range(pairs.shape[0]):
        j = pairs[g, 0]
        k = pairs[g, 1]
        wj = j >> 6
        bj = uint64(j & 63)
        wk = k >> 6
        bk = uint64(k & 63)
        clear_j_x = ~(_1 << bj)
        clear_k_x = ~(_1 << bk)
        tbl = bank[gate_idx[g]]
        for r in range(n_rows):
            a = (x[r, wj] >> bj) & _1
            b = (z[r, wj] >> bj) & _1
            c = (x[r, wk] >> bk) & _1
            d = (z[r, wk] >> bk) & _1
            idx = (a << uint64(3)) | (b << uint64(2)) | (c << uint64(1)) | d
            e = uint64(tbl[idx])
            x[r, wj] = (x[r, wj] & clear_j_x) | (((e >> uint64(4)) & _1) << bj)
            z[r, wj] = (z[r, wj] & clear_j_x) | (((e >> uint64(3)) & _1) << bj)
            x[r, wk] = (x[r, wk] & clear_k_x) | (((e >> uint64(2)) & _1) << bk)
            z[r, wk] = (z[r, wk] & clear_k_x) | (((e >> uint64(1)) & _1) << bk)
            if track_phase:
                phase[r] = np.uint8((int(phase[r]) + 2 * int(e & _1)) & 3)


@njit(cache=True)
def measure_sites(x, z, phase, L, n_words, sites, rand_bits, track_signs, outcomes):
    """Projective z measurements in site order, updating the full tableau.

    Rows 0..L-1 are destabilizers, L..2L-1 stabilizers.  rand_bits[i] decides
    the outcome when site sites[i] is indeterminate.  outcomes[i] receives
    +1/-1; with track_signs off all phase work is skipped and reported
    outcomes are +1 (entropy-only consumers).
    """
    for i in range(sites.shape[0]):
        j = sites[i]
        wj = j >> 6
        bj = uint64(j & 63)
        pivot = -1
        for r in range(L, 2 * L):
            if (x[r, wj] >> bj) & _1:
                pivot = r
                break
        if pivot >= 0:
            # indeterminate outcome: reduce all other anticommuting rows,
            # move the pivot into its destabilizer slot, install +/-Z_j
            partner = pivot - L
            for r in range(2 * L):
                if r != pivot and r != partner and ((x[r, wj] >> bj) & _1):
                    _rowmult(x, z, phase, r, pivot, n_words, track_signs)
            for w in range(n_words):
                x[partner, w] = x[pivot, w]
                z[partner, w] = z[pivot, w]
                x[pivot, w] = uint64(0)
                z[pivot, w] = uint64(0)
            z[pivot, wj] = _1 << bj
            if track_signs:
                phase[partner] = phase[pivot]
                phase[pivot] = np.uint8(2 * rand_bits[i])
                outcomes[i] = 1 if rand_bits[i] == 0 else -1
            else:
                phase[pivot] = np.uint8(0)
                outcomes[i] = 1
        else:
            # determinate: Z_j is (up to sign) the product of stabilizers
            # whose destabilizer partners anticommute with it
            if track_signs:
                sx = np.zeros(n_words, dtype=np.uint64)
                sz = np.zeros(n_words, dtype=np.uint64)
                e = 0
                for al in range(L):
                    if (x[al, wj] >> bj) & _1:
                        srow = L + al
                        acc = 0
                        for w in range(n_words):
                            xs = sx[w]
                            zs = sz[w]
                            xg = x[srow, w]
                            zg = z[srow, w]
                            acc += int(_popcount(xs & zs)) + int(_popcount(xg & zg))
                            acc += 2 * int(_popcount(zs & xg))
                            acc -= int(_popcount((xs ^ xg) & (zs ^ zg)))
                            sx[w] = xs ^ xg
                            sz[w] = zs ^ zg
                        e = (e + int(phase[srow]) + acc) & 3
                outcomes[i] = 1 if e == 0 else -1
            else:
                outcomes[i] = 1


@njit(cache=True)
def sweep_pair_entropy(sx, sz, L, n_words, a, b):
    """Measure every site except {a, b} (stabilizer rows only, sign-free),
    then return the single-site entropy at `a` in nats.

    This is the projected-ensemble entropy of the pair: by outcome
    independence for stabilizer states it needs no averaging over results.
    Destroys the scratch rows sx, sz.
    """
    for j in range(L):
        if j == a or j == b:
            continue
        wj = j >> 6
        bj = uint64(j & 63)
        pivot = -1
        for r in range(L):
            if (sx[r, wj] >> bj) & _1:
                if pivot < 0:
                    pivot = r
                else:
                    for w in range(n_words):
                        sx[r, w] ^= sx[pivot, w]
                        sz[r, w] ^= sz[pivot, w]
        if pivot >= 0:
            for w in range(n_words):
                sx[pivot, w] = uint64(0)
                sz[pivot, w] = uint64(0)
            sz[pivot, wj] = _1 << bj
    wa = a >> 6
    ba = uint64(a & 63)
    first = uint64(0)
    for r in range(L):
        pat = (((sx[r, wa] >> ba) & _1) << uint64(1)) | ((sz[r, wa] >> ba) & _1)
        if pat != uint64(0):
            if first == uint64(0):
                first = pat
            elif pat != first:
                return LN2
    return 0.0


@njit(cache=True)
def eae_pairs(x_stab, z_stab, L, n_words, a_arr, b_arr, out):
    """Pair entropies for many (a, b) choices from one stabilizer state.

    x_stab, z_stab hold the L stabilizer rows; each pair gets a fresh scratch
    copy so the input is untouched.
    """
    sx = np.empty((L, n_words), dtype=np.uint64)
    sz = np.empty((L, n_words), dtype=np.uint64)
    for i in range(a_arr.shape[0]):
        for r in range(L):
            for w in range(n_words):
                sx[r, w] = x_stab[r, w]
                sz[r, w] = z_stab[r, w]
        out[i] = sweep_pair_entropy(sx, sz, L, n_words, a_arr[i], b_arr[i])


@njit(cache=True)
def region_rank(x_stab, z_stab, L, n_words, sites):
    """GF(2) rank of the stabilizer rows restricted to the x/z columns of `sites`."""
    m = sites.shape[0]
    ncols = 2 * m
    cw = (ncols + 63) >> 6
    rows = np.zeros((L, cw), dtype=np.uint64)
    for r in range(L):
        for i in range(m):
            j = sites[i]
            wj = j >> 6
            bj = uint64(j & 63)
            if (x_stab[r, wj] >> bj) & _1:
                rows[r, (2 * i) >> 6] |= _1 << uint64((2 * i) & 63)
            if (z_stab[r, wj] >> bj) & _1:
                rows[r, (2 * i + 1) >> 6] |= _1 << uint64((2 * i + 1) & 63)
    rank = 0
    for col in range(ncols):
        wc = col >> 6
        bc = uint64(col & 63)
        pivot = -1
        for r in range(rank, L):
            if (rows[r, wc] >> bc) & _1:
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != rank:
            for w in range(cw):
                tmp = rows[rank, w]
                rows[rank, w] = rows[pivot, w]
                rows[pivot, w] = tmp
        for r in range(L):
            if r != rank and ((rows[r, wc] >> bc) & _1):
                for w in range(cw):
                    rows[r, w] ^= rows[rank, w]
        rank += 1
        if rank == L:
            break
    return rank


def warmup(L: int = 8) -> None:
    """Force JIT compilation of all kernels on a tiny tableau."""
    n_words = (L + 63) >> 6
    x = np.zeros((2 * L, n_words), dtype=np.uint64)
    z = np.zeros((2 * L, n_words), dtype=np.uint64)
    phase = np.zeros(2 * L, dtype=np.uint8)
    for j in range(L):
        x[j, j >> 6] |= np.uint64(1) << np.uint64(j & 63)
        z[L + j, j >> 6] |= np.uint64(1) << np.uint64(j & 63)
    bank = np.zeros((1, 16), dtype=np.uint8)
    for idx in range(16):
        bank[0, idx] = ((idx >> 3) << 4) | (((idx >> 2) & 1) << 3) | (((idx >> 1) & 1) << 2) | ((idx & 1) << 1)
    pairs = np.array([[0, 1]], dtype=np.int64)
    gidx = np.zeros(1, dtype=np.int64)
    apply_gates(x, z, phase, pairs, gidx, bank, True)
    sites = np.array([0], dtype=np.int64)
    bits = np.zeros(1, dtype=np.int64)
    outs = np.zeros(1, dtype=np.int64)
    measure_sites(x, z, phase, L, n_words, sites, bits, True, outs)
    measure_sites(x, z, phase, L, n_words, sites, bits, False, outs)
    out = np.zeros(1, dtype=np.float64)
    eae_pairs(x[L:], z[L:], L, n_words, np.array([0], dtype=np.int64), np.array([1], dtype=np.int64), out)
    region_rank(x[L:], z[L:], L, n_words, np.array([0], dtype=np.int64))

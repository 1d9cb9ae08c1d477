"""The two-qubit Clifford group: uniform sampling, enumeration, conjugation tables.

Elements are represented modulo global phase by the conjugation images of the
four single-site generators X0, Z0, X1, Z1.  The symplectic part (720 elements
of Sp(4, F2)) is indexed by the canonical transvection construction, and the
sign pattern of the four images contributes a further factor of 16, giving the
full group order 11520.

Symplectic vectors live in 4-bit ints with the interleaved layout
bit0 = x@site0, bit1 = z@site0, bit2 = x@site1, bit3 = z@site1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from .pauli import PauliString, commutes, product_exponent

SP4_ORDER = 720
CLIFFORD2_ORDER = SP4_ORDER * 16  # 11520


# ---------------------------------------------------------------------------
# Sp(2n, F2) canonical construction (n = 1, 2) on int-packed vectors.

def _ip(v: int, w: int) -> int:
    """Symplectic inner product for interleaved (x, z) pairs."""
    ws = ((w & 0b0101_0101) << 1) | ((w >> 1) & 0b0101_0101)
    return (v & ws).bit_count() & 1


def _transvect(h: int, v: int) -> int:
    """Apply the transvection Z_h: v -> v + <v,h> h."""
    return v ^ h if _ip(v, h) else v


def _find_transvection(x: int, y: int, nn: int) -> Tuple[int, int]:
    """Find (h1, h2) with y = Z_h1 Z_h2 x for nonzero x, y."""
    if x == y:
        return 0, 0
    if _ip(x, y):
        return x ^ y, 0
    # look for a qubit where both vectors are non-identity
    for i in range(nn // 2):
        xp = (x >> (2 * i)) & 3
        yp = (y >> (2 * i)) & 3
        if xp and yp:
            zp = xp ^ yp
            if zp == 0:
                # same letter: pick a partner anticommuting with it locally
                zp = 2 | (1 if (xp & 1) != ((xp >> 1) & 1) else 0)
            z = zp << (2 * i)
            return x ^ z, y ^ z
    # otherwise build z from a site where x is non-identity and y identity,
    # plus one the other way around
    z = 0
    for i in range(nn // 2):
        xp = (x >> (2 * i)) & 3
        yp = (y >> (2 * i)) & 3
        if xp and not yp:
            z |= (2 if xp == 3 else (((xp & 1) << 1) | ((xp >> 1) & 1))) << (2 * i)
            break
    for i in range(nn // 2):
        xp = (x >> (2 * i)) & 3
        yp = (y >> (2 * i)) & 3
        if yp and not xp:
            z |= (2 if yp == 3 else (((yp & 1) << 1) | ((yp >> 1) & 1))) << (2 * i)
            break
    return x ^ z, y ^ z


def _symplectic_rows(index: int, n: int) -> List[int]:
    """Rows (images of the symplectic basis) of canonical element `index` of Sp(2n, F2)."""
    nn = 2 * n
    s = (1 << nn) - 1
    k = (index % s) + 1
    index //= s

    f1 = k
    e1 = 1
    t0, t1 = _find_transvection(e1, f1, nn)

    bits = index % (1 << (nn - 1))
    eprime = e1
    for j in range(2, nn):
        eprime |= ((bits >> (j - 1)) & 1) << j
    h0 = _transvect(t1, _transvect(t0, eprime))
    if bits & 1:
        f1 = 0

    if n == 1:
        rows = [1, 2]
    else:
        inner = _symplectic_rows(index >> (nn - 1), n - 1)
        rows = [1, 2] + [v << 2 for v in inner]
    return [
        _transvect(f1, _transvect(h0, _transvect(t1, _transvect(t0, r))))
        for r in rows
    ]


def symplectic_element(index: int) -> Tuple[int, int, int, int]:
    """The four image vectors of canonical Sp(4, F2) element `index` in [0, 720)."""
    if not 0 <= index < SP4_ORDER:
        raise ValueError(f"symplectic index {index} out of range [0, {SP4_ORDER})")
    r = _symplectic_rows(index, 2)
    return r[0], r[1], r[2], r[3]


# ---------------------------------------------------------------------------
# Phase bookkeeping for products of 2-qubit Paulis, as a 16x16 exponent table
# built once from dense 4x4 matrices (exact entries, so no rounding risk).

_P1 = {
    (0, 0): np.eye(2),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def _dense_pauli4(code: int) -> np.ndarray:
    """Dense 4x4 matrix of the interleaved 4-bit Pauli code (site 0 = MSB)."""
    a = _P1[(code & 1, (code >> 1) & 1)]
    b = _P1[((code >> 2) & 1, (code >> 3) & 1)]
    return np.kron(a, b)


@lru_cache(maxsize=1)
def _prod_phase_table() -> np.ndarray:
    """PROD[p, q] = e with P_p P_q = i**e P_{p^q}, for 4-bit codes p, q."""
    tbl = np.zeros((16, 16), dtype=np.int64)
    mats = [_dense_pauli4(c) for c in range(16)]
    for p in range(16):
        for q in range(16):
            prod = mats[p] @ mats[q]
            ref = mats[p ^ q]
            idx = np.argmax(np.abs(ref))
            ratio = prod.flat[idx] / ref.flat[idx]
            e = int(round(np.angle(ratio) / (np.pi / 2))) % 4
            tbl[p, q] = e
    return tbl


# ---------------------------------------------------------------------------
# Gate objects.

def _pauli_from_vec(vec: int, sign: int) -> PauliString:
    x = (vec & 1) | (((vec >> 2) & 1) << 1)
    z = ((vec >> 1) & 1) | (((vec >> 3) & 1) << 1)
    return PauliString(2, x, z, sign)


def _vec_from_pauli(p: PauliString) -> int:
    return (
        (p.x_bits & 1)
        | ((p.z_bits & 1) << 1)
        | (((p.x_bits >> 1) & 1) << 2)
        | (((p.z_bits >> 1) & 1) << 3)
    )


@dataclass(frozen=True)
class CliffordGate2:
    """A two-qubit Clifford element given by the images of X0, Z0, X1, Z1."""

    images: Tuple[PauliString, PauliString, PauliString, PauliString]

    def __post_init__(self):
        if len(self.images) != 4:
            raise ValueError("need exactly four generator images")
        for img in self.images:
            if img.n != 2:
                raise ValueError("generator images must act on two qubits")
            if img.is_identity():
                raise ValueError("generator image cannot be the identity")
        # symplectic form: image(X_i) anticommutes with image(Z_i), all other
        # generator pairs commute
        for i in range(4):
            for j in range(i + 1, 4):
                want = (i // 2 == j // 2)
                if commutes(self.images[i], self.images[j]) == want:
                    raise ValueError("images do not preserve the symplectic form")

    def key(self) -> tuple:
        return tuple((p.x_bits, p.z_bits, p.sign) for p in self.images)

    def conj_table(self) -> np.ndarray:
        """16-entry conjugation table over local Paulis.

        Entry index packs the source letter bits as
        (x@site0 << 3) | (z@site0 << 2) | (x@site1 << 1) | z@site1, and the
        uint8 value packs the image as
        (x0' << 4) | (z0' << 3) | (x1' << 2) | (z1' << 1) | sign_flip.
        """
        out = np.zeros(16, dtype=np.uint8)
        for idx in range(16):
            a, b, c, d = (idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
            # W(a,b) (x) W(c,d) = i**(ab+cd) X0^a Z0^b X1^c Z1^d
            e = (a & b) + (c & d)
            acc = PauliString(2)
            for use, img in zip((a, b, c, d), self.images):
                if use:
                    x, z, de = product_exponent(acc, img)
                    acc = PauliString(2, x, z, 1)
                    e += de
            if e % 2:
                raise AssertionError("conjugation image acquired a complex phase")
            flip = (e % 4) // 2
            v = _vec_from_pauli(acc)
            out[idx] = (
                ((v & 1) << 4)
                | (((v >> 1) & 1) << 3)
                | (((v >> 2) & 1) << 2)
                | (((v >> 3) & 1) << 1)
                | flip
            )
        return out

    def image_of(self, p: PauliString) -> PauliString:
        """Conjugation image of an arbitrary signed two-qubit Pauli."""
        if p.n != 2:
            raise ValueError("image_of takes two-qubit strings")
        e = self.conj_table()[
            ((p.x_bits & 1) << 3)
            | ((p.z_bits & 1) << 2)
            | (((p.x_bits >> 1) & 1) << 1)
            | ((p.z_bits >> 1) & 1)
        ]
        x = ((e >> 4) & 1) | (((e >> 2) & 1) << 1)
        z = ((e >> 3) & 1) | (((e >> 1) & 1) << 1)
        sign = p.sign * (-1 if (e & 1) else 1)
        return PauliString(2, int(x), int(z), int(sign))

    def compose(self, then: "CliffordGate2") -> "CliffordGate2":
        """The element 'apply self, then `then`'."""
        return CliffordGate2(tuple(then.image_of(img) for img in self.images))

    @classmethod
    def from_index(cls, index: int) -> "CliffordGate2":
        """Canonical element `index` in [0, 11520): symplectic part * 16 + sign nibble."""
        if not 0 <= index < CLIFFORD2_ORDER:
            raise ValueError(f"gate index {index} out of range [0, {CLIFFORD2_ORDER})")
        rows = symplectic_element(index // 16)
        sigma = index % 16
        images = tuple(
            _pauli_from_vec(rows[m], -1 if (sigma >> m) & 1 else 1) for m in range(4)
        )
        return cls(images)


def identity_gate() -> CliffordGate2:
    return CliffordGate2(
        (
            PauliString.from_label("XI"),
            PauliString.from_label("ZI"),
            PauliString.from_label("IX"),
            PauliString.from_label("IZ"),
        )
    )


def cnot_gate() -> CliffordGate2:
    """CNOT with control = first site, target = second site."""
    return CliffordGate2(
        (
            PauliString.from_label("XX"),
            PauliString.from_label("ZI"),
            PauliString.from_label("IX"),
            PauliString.from_label("ZZ"),
        )
    )


def hadamard_first_gate() -> CliffordGate2:
    """H on the first site, identity on the second."""
    return CliffordGate2(
        (
            PauliString.from_label("ZI"),
            PauliString.from_label("XI"),
            PauliString.from_label("IX"),
            PauliString.from_label("IZ"),
        )
    )


@lru_cache(maxsize=1)
def enumerate_clifford2() -> Tuple[CliffordGate2, ...]:
    """All 11520 elements in canonical order (duplicate-free by construction)."""
    return tuple(CliffordGate2.from_index(i) for i in range(CLIFFORD2_ORDER))


@lru_cache(maxsize=1)
def _index_by_key() -> dict:
    return {g.key(): i for i, g in enumerate(enumerate_clifford2())}


def gate_index(gate: CliffordGate2) -> int:
    """Canonical enumeration index of a gate; KeyError if not a valid element."""
    return _index_by_key()[gate.key()]


def sample_clifford2(rng: np.random.Generator) -> CliffordGate2:
    """Uniform draw over the 11520 elements.

    Uniformity is exact: a uniform canonical index selects the symplectic
    class through the transvection construction and the four image signs
    independently.
    """
    return enumerate_clifford2()[int(rng.integers(CLIFFORD2_ORDER))]


@lru_cache(maxsize=1)
def gate_table_bank() -> np.ndarray:
    """Conjugation tables for all 11520 gates, shape (11520, 16) uint8.

    Row layout matches CliffordGate2.conj_table; built vectorized so import
    of large circuit runs stays cheap.
    """
    rows = np.array([symplectic_element(s) for s in range(SP4_ORDER)], dtype=np.int64)
    prod = _prod_phase_table()

    base_bits = np.zeros((SP4_ORDER, 16), dtype=np.int64)
    base_e = np.zeros((SP4_ORDER, 16), dtype=np.int64)
    for idx in range(16):
        sel = ((idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1)
        acc = np.zeros(SP4_ORDER, dtype=np.int64)
        e = np.full(SP4_ORDER, (sel[0] & sel[1]) + (sel[2] & sel[3]), dtype=np.int64)
        for m in range(4):
            if sel[m]:
                e += prod[acc, rows[:, m]]
                acc ^= rows[:, m]
        base_bits[:, idx] = acc
        base_e[:, idx] = e
    if np.any(base_e % 2):
        raise AssertionError("conjugation tables acquired complex phases")
    base_flip = (base_e % 4) // 2

    # sign nibble sigma flips entry idx when popcount(sigma & selmask(idx)) is odd
    selmask = np.array(
        [(((i >> 3) & 1) | (((i >> 2) & 1) << 1) | (((i >> 1) & 1) << 2) | ((i & 1) << 3))
         for i in range(16)],
        dtype=np.int64,
    )
    par = np.array([bin(v).count("1") & 1 for v in range(16)], dtype=np.int64)

    v = base_bits
    packed_bits = (
        ((v & 1) << 4) | (((v >> 1) & 1) << 3) | (((v >> 2) & 1) << 2) | (((v >> 3) & 1) << 1)
    )
    bank = np.zeros((CLIFFORD2_ORDER, 16), dtype=np.uint8)
    for sigma in range(16):
        flips = base_flip ^ par[sigma & selmask]
        bank[sigma::16, :] = (packed_bits | flips).astype(np.uint8)
    return bank

"""Bit-packed Pauli strings and small GF(2) matrix routines.

Pauli strings are stored as a pair of Python-int bitsets (arbitrary
precision integers give word-parallel XOR/AND for free), with bit j of
``x_bits``/``z_bits`` describing site j.  The letter at a site is

    (x, z) = (0,0) -> I,  (1,0) -> X,  (0,1) -> Z,  (1,1) -> Y,

with Y the Hermitian letter iXZ, so a stored string is ``sign`` times a
tensor product of Hermitian letters and ``sign`` stays in {+1, -1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {c: b for b, c in _LETTERS.items()}


@dataclass
class PauliString:
    """A signed Hermitian Pauli operator on ``n`` qubits."""

    n: int
    x_bits: int = 0
    z_bits: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one qubit, got n={self.n}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        mask = (1 << self.n) - 1
        if self.x_bits & ~mask or self.z_bits & ~mask:
            raise ValueError("support bits extend past the string length")

    @classmethod
    def from_label(cls, label: str, sign: int = 1) -> "PauliString":
        """Build from a letter string like ``"XIZY"`` (character j = site j)."""
        x = z = 0
        for j, c in enumerate(label):
            try:
                xb, zb = _BITS[c]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {c!r}") from None
            x |= xb << j
            z |= zb << j
        return cls(len(label), x, z, sign)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    def to_label(self) -> str:
        """Signed letter string, e.g. ``"-XIZ"``."""
        letters = "".join(
            _LETTERS[((self.x_bits >> j) & 1, (self.z_bits >> j) & 1)]
            for j in range(self.n)
        )
        return ("+" if self.sign > 0 else "-") + letters

    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    def copy(self) -> "PauliString":
        return PauliString(self.n, self.x_bits, self.z_bits, self.sign)

    def __str__(self) -> str:
        return self.to_label()


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the symplectic inner product a.x*b.z + a.z*b.x vanishes mod 2."""
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")
    return (((a.x_bits & b.z_bits).bit_count() + (a.z_bits & b.x_bits).bit_count()) & 1) == 0


def product_exponent(a: PauliString, b: PauliString) -> tuple[int, int, int]:
    """Raw product a*b as (x_bits, z_bits, e) with phase i**e, e mod 4.

    The exponent includes the input signs.  Used internally where a
    non-Hermitian intermediate is acceptable; `multiply` is the checked
    public entry point.
    """
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")
    x = a.x_bits ^ b.x_bits
    z = a.z_bits ^ b.z_bits
    e = (
        (a.x_bits & a.z_bits).bit_count()
        + (b.x_bits & b.z_bits).bit_count()
        + 2 * (a.z_bits & b.x_bits).bit_count()
        - (x & z).bit_count()
        + 2 * (a.sign < 0)
        + 2 * (b.sign < 0)
    ) % 4
    return x, z, e


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Pauli product with exact sign tracking.

    The result must be Hermitian (real phase); this holds whenever a and b
    commute.  A residual +/-i phase raises ValueError.
    """
    x, z, e = product_exponent(a, b)
    if e & 1:
        raise ValueError(
            f"product {a.to_label()} * {b.to_label()} has phase i**{e}; "
            "only Hermitian results are representable"
        )
    return PauliString(a.n, x, z, 1 if e == 0 else -1)


@dataclass
class Gf2Matrix:
    """A dense boolean matrix; each row is an int bitset of ``width`` columns."""

    width: int
    rows: List[int] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("width must be nonnegative")
        mask = (1 << self.width) - 1
        for i, r in enumerate(self.rows):
            if r & ~mask:
                raise ValueError(f"row {i} has bits past width {self.width}")

    @classmethod
    def from_lists(cls, rows: Iterable[Sequence[int]]) -> "Gf2Matrix":
        rows = list(rows)
        width = len(rows[0]) if rows else 0
        packed = []
        for r in rows:
            if len(r) != width:
                raise ValueError("ragged rows")
            packed.append(sum((1 << j) for j, v in enumerate(r) if v & 1))
        return cls(width, packed)


def gf2_rank(m: Gf2Matrix) -> int:
    """Rank over GF(2) by column-pivot elimination on a scratch copy."""
    work = list(m.rows)
    rank = 0
    for col in range(m.width):
        bit = 1 << col
        pivot = -1
        for i in range(rank, len(work)):
            if work[i] & bit:
                pivot = i
                break
        if pivot < 0:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for i in range(len(work)):
            if i != rank and (work[i] & bit):
                work[i] ^= work[rank]
        rank += 1
        if rank == len(work):
            break
    return rank

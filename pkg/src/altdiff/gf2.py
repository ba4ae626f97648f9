"""Bit-packed linear algebra over F2.

Conventions used across the whole package:

  * A vector of width w is stored as a single machine word (Python int,
    w <= 64).  Coordinate x_i (1-indexed) sits at bit position w - i, so
    x_1 is the most significant bit and the textual form "0110" reads
    x_1 x_2 x_3 x_4 left to right.  With this layout an s-box table
    indexed by the integer value matches tables printed "most
    significant bit first".
  * Vectors are row vectors acted on from the right: x maps to xM.
    Function application is postfix throughout, so a composite "g then
    f" multiplies as g*f on matrices.
  * A matrix is a tuple of row words, rows[k] being row k+1.

BitVec/BitMatrix are thin immutable wrappers; hot loops work on the raw
ints directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np


class GF2Error(Exception):
    pass


class SingularMatrixError(GF2Error):
    pass


class SizeTooLargeError(GF2Error):
    pass


class NotASubgroupError(GF2Error):
    pass


class WidthMismatchError(GF2Error):
    pass


MAX_WIDTH = 64


@dataclass(frozen=True)
class BitVec:
    """Row vector over F2, packed into one word, x_1 = most significant bit."""

    width: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise WidthMismatchError(f"width {self.width} outside 1..{MAX_WIDTH}")
        if self.bits >> self.width:
            raise WidthMismatchError(f"bits 0x{self.bits:x} exceed width {self.width}")

    @classmethod
    def parse(cls, text: str) -> "BitVec":
        """Parse a binary string such as "0110"."""
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a binary string: {text!r}")
        return cls(len(text), int(text, 2))

    @classmethod
    def from_hex(cls, text: str, width: int | None = None) -> "BitVec":
        text = text.strip()
        if width is None:
            width = 4 * len(text)
        return cls(width, int(text, 16))

    def render(self) -> str:
        return format(self.bits, f"0{self.width}b")

    def hex(self) -> str:
        return format(self.bits, f"0{(self.width + 3) // 4}x")

    def coord(self, i: int) -> int:
        """Coordinate x_i, 1-indexed from the most significant side."""
        if not 1 <= i <= self.width:
            raise IndexError(i)
        return (self.bits >> (self.width - i)) & 1

    def __xor__(self, other: "BitVec") -> "BitVec":
        if self.width != other.width:
            raise WidthMismatchError("widths differ")
        return BitVec(self.width, self.bits ^ other.bits)

    def __int__(self) -> int:
        return self.bits


def vec_mul(x: int, rows: Sequence[int], n: int) -> int:
    """x*M for a packed row vector x and matrix rows (n of them)."""
    acc = 0
    for k in range(n):
        if (x >> (n - 1 - k)) & 1:
            acc ^= rows[k]
    return acc


@dataclass(frozen=True)
class BitMatrix:
    """Matrix over F2 as a tuple of row words (row k+1 = rows[k])."""

    cols: int
    rows: tuple

    def __post_init__(self):
        if not 1 <= self.cols <= MAX_WIDTH:
            raise WidthMismatchError(f"cols {self.cols} outside 1..{MAX_WIDTH}")
        for r in self.rows:
            if r >> self.cols:
                raise WidthMismatchError(f"row 0x{r:x} exceeds {self.cols} columns")

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, tuple(1 << (n - 1 - k) for k in range(n)))

    @classmethod
    def zeros(cls, nrows: int, cols: int) -> "BitMatrix":
        return cls(cols, (0,) * nrows)

    @classmethod
    def from_rows(cls, rows: Iterable, cols: int | None = None) -> "BitMatrix":
        """Build from binary strings or ints (ints require explicit cols)."""
        out = []
        for r in rows:
            if isinstance(r, str):
                v = BitVec.parse(r)
                if cols is None:
                    cols = v.width
                elif cols != v.width:
                    raise WidthMismatchError("ragged rows")
                out.append(v.bits)
            else:
                out.append(int(r))
        if cols is None:
            raise ValueError("cols required for integer rows")
        return cls(cols, tuple(out))

    def render(self) -> str:
        return "\n".join(format(r, f"0{self.cols}b") for r in self.rows)

    def row(self, i: int) -> int:
        """Row i, 1-indexed."""
        return self.rows[i - 1]

    def vec_mul(self, x: int) -> int:
        """x*M with x packed into nrows bits."""
        return vec_mul(x, self.rows, self.nrows)

    def mul(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.nrows:
            raise WidthMismatchError("inner dimensions differ")
        orows = other.rows
        m = self.cols
        return BitMatrix(other.cols, tuple(vec_mul(r, orows, m) for r in self.rows))

    def __mul__(self, other: "BitMatrix") -> "BitMatrix":
        return self.mul(other)

    def transpose(self) -> "BitMatrix":
        n = self.nrows
        cols = []
        for j in range(self.cols):
            c = 0
            for k, r in enumerate(self.rows):
                c |= ((r >> (self.cols - 1 - j)) & 1) << (n - 1 - k)
            cols.append(c)
        return BitMatrix(n, tuple(cols))


def _echelon(rows: Sequence[int], cols: int, aug: list | None = None):
    """In-place style Gauss-Jordan; returns (reduced rows, rank). aug rows
    receive the same row operations."""
    rows = list(rows)
    r = 0
    for j in range(cols):
        mask = 1 << (cols - 1 - j)
        piv = next((k for k in range(r, len(rows)) if rows[k] & mask), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        if aug is not None:
            aug[r], aug[piv] = aug[piv], aug[r]
        for k in range(len(rows)):
            if k != r and rows[k] & mask:
                rows[k] ^= rows[r]
                if aug is not None:
                    aug[k] ^= aug[r]
        r += 1
        if r == len(rows):
            break
    return rows, r


def rank(m: BitMatrix) -> int:
    """F2 rank of m."""
    return _echelon(m.rows, m.cols)[1]


def is_invertible(m: BitMatrix) -> bool:
    return m.nrows == m.cols and rank(m) == m.nrows


def inverse(m: BitMatrix) -> BitMatrix:
    """Inverse of a square matrix; raises SingularMatrixError otherwise."""
    if m.nrows != m.cols:
        raise SingularMatrixError("not square")
    n = m.cols
    aug = [1 << (n - 1 - k) for k in range(n)]
    red, rk = _echelon(m.rows, n, aug)
    if rk < n:
        raise SingularMatrixError("rank deficient")
    # red is the identity here and row k of aug is row k of the inverse
    return BitMatrix(n, tuple(aug))


def solve(m: BitMatrix, y: int) -> int:
    """One solution x of x*M = y, or SingularMatrixError if none exists."""
    by_lead: dict = {}  # leading bit -> (reduced row, row combination)
    for k, r in enumerate(m.rows):
        c = 1 << (m.nrows - 1 - k)
        while r:
            lead = r.bit_length() - 1
            if lead not in by_lead:
                by_lead[lead] = (r, c)
                break
            er, ec = by_lead[lead]
            r ^= er
            c ^= ec
    x = 0
    while y:
        lead = y.bit_length() - 1
        if lead not in by_lead:
            raise SingularMatrixError("no solution")
        er, ec = by_lead[lead]
        y ^= er
        x ^= ec
    return x


def span(vectors: Iterable[int]) -> list:
    """Reduced basis of the span of packed vectors (row echelon, no width)."""
    basis: list = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return basis


GL_ENUM_LIMIT = 4


def gl_order(s: int) -> int:
    """|GL(s,2)| = prod_{i<s} (2^s - 2^i)."""
    out = 1
    for i in range(s):
        out *= (1 << s) - (1 << i)
    return out


def enumerate_gl(s: int) -> Iterator[BitMatrix]:
    """All invertible s x s matrices over F2, each exactly once.

    Guarded at s <= 4: |GL(5,2)| is already ~10^10.
    """
    if s > GL_ENUM_LIMIT:
        raise SizeTooLargeError(f"s={s} > {GL_ENUM_LIMIT}")

    rows: list = []
    spanned = {0}

    def rec(k: int):
        if k == s:
            yield BitMatrix(s, tuple(rows))
            return
        for cand in range(1, 1 << s):
            if cand in spanned:
                continue
            added = [cand ^ v for v in spanned]
            spanned.update(added)
            rows.append(cand)
            yield from rec(k + 1)
            rows.pop()
            spanned.difference_update(added)

    yield from rec(0)


def batch_invertible_mask(rows: np.ndarray, n: int) -> np.ndarray:
    """Vectorised invertibility of a batch of n x n matrices (n <= 8).

    rows is (N, n) with packed row words; incremental echelon-basis
    insertion, one vector op per (row, bit position) step.
    """
    count = rows.shape[0]
    basis = np.zeros((count, n), dtype=np.uint8)  # slot b: echelon row leading at bit b
    ok = np.ones(count, dtype=bool)
    lead_lut = np.array([max(v.bit_length() - 1, 0) for v in range(1 << n)], dtype=np.int64)
    for k in range(n):
        r = rows[:, k].astype(np.uint8).copy()
        for b in range(n - 1, -1, -1):
            r ^= (((r >> b) & 1) * basis[:, b]).astype(np.uint8)
        ok &= r != 0
        np.put_along_axis(basis, lead_lut[r][:, None], r[:, None], axis=1)
    return ok


def random_invertible_rows(n: int, count: int, seed: int) -> np.ndarray:
    """(count, n) array of packed rows, each matrix invertible; uniform
    over GL(n, 2) by rejection."""
    if n > 8:
        raise SizeTooLargeError("batch sampling limited to n <= 8")
    rng = np.random.default_rng(seed)
    chunks = []
    have = 0
    while have < count:
        cand = rng.integers(0, 1 << n, size=(2 * (count - have) + 64, n), dtype=np.uint8)
        good = cand[batch_invertible_mask(cand, n)]
        chunks.append(good)
        have += good.shape[0]
    return np.concatenate(chunks)[:count]


def coset_representatives(
    group: Sequence[BitMatrix],
    subgroup_membership: Callable[[BitMatrix], bool],
    side: str = "left",
) -> list:
    """One representative per (left or right) coset of the subgroup.

    "left" decomposes into cosets gH, "right" into Hg.  The subgroup is
    materialised by filtering the group; a closure sample plus the
    Lagrange count |reps|*|H| = |G| guard against a non-subgroup
    predicate.
    """
    if side not in ("left", "right"):
        raise ValueError(side)
    group = list(group)
    sub = [g for g in group if subgroup_membership(g)]
    if not sub:
        raise NotASubgroupError("empty subgroup (identity missing?)")
    # closure sanity-check on a deterministic sample
    probe = sub[:: max(1, len(sub) // 8)][:8]
    for a in probe:
        for b in probe:
            if not subgroup_membership(a * b):
                raise NotASubgroupError("sampled product escapes the subgroup")
    reps = []
    seen = set()
    for g in group:
        if g.rows in seen:
            continue
        reps.append(g)
        for h in sub:
            t = g * h if side == "left" else h * g
            seen.add(t.rows)
    if len(reps) * len(sub) != len(group):
        raise NotASubgroupError(
            f"|reps|*|H| = {len(reps)}*{len(sub)} != |G| = {len(group)}"
        )
    return reps

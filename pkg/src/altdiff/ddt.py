"""Difference distribution tables for xor and alternative operations.

delta_plus(f)[a][b] counts x with f(x) + f(x+a) = b; the circ variant
replaces both differences with the alternative operation.  Uniformity is
the largest entry outside row a = 0.

Affine maps with respect to an operation are handled as permutation
tables; a map g is circ-affine when x -> g(x) circ g(0) is circ-linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gf2 import BitMatrix, WidthMismatchError, vec_mul


class NotBijectiveError(Exception):
    pass


class NotCircAffineError(Exception):
    pass


@dataclass(frozen=True)
class Sbox:
    """Bijective lookup table on s bits, index = input value."""

    s: int
    table: tuple

    def __post_init__(self):
        size = 1 << self.s
        if len(self.table) != size or sorted(self.table) != list(range(size)):
            raise NotBijectiveError(f"not a permutation of 0..{size - 1}")

    @classmethod
    def from_hex(cls, text: str, s: int) -> "Sbox":
        """2^s entries, most significant bit first; one hex digit per entry
        for s <= 4, two for s = 8."""
        text = "".join(text.split())
        width = max(1, s // 4)
        if len(text) != width << s:
            raise ValueError(f"expected {width << s} hex digits")
        table = tuple(int(text[k * width : (k + 1) * width], 16) for k in range(1 << s))
        return cls(s, table)

    def hex(self) -> str:
        width = max(1, self.s // 4)
        return "".join(format(v, f"0{width}x") for v in self.table)

    def __getitem__(self, x: int) -> int:
        return self.table[x]

    def inverse(self) -> "Sbox":
        inv = [0] * len(self.table)
        for x, y in enumerate(self.table):
            inv[y] = x
        return Sbox(self.s, tuple(inv))


def as_sbox(f, s: int | None = None) -> Sbox:
    if isinstance(f, Sbox):
        return f
    table = tuple(f)
    if s is None:
        s = (len(table) - 1).bit_length()
    return Sbox(s, table)


def compose(*tables: Sequence[int]) -> tuple:
    """Left-to-right (postfix) composition of permutation tables."""
    out = list(range(len(tables[0])))
    for t in tables:
        out = [t[x] for x in out]
    return tuple(out)


def table_from_matrix(m: BitMatrix) -> tuple:
    return tuple(vec_mul(x, m.rows, m.nrows) for x in range(1 << m.nrows))


def invert_table(t: Sequence[int]) -> tuple:
    out = [0] * len(t)
    for x, y in enumerate(t):
        out[y] = x
    return tuple(out)


@dataclass(eq=False)
class DDTable:
    s: int
    counts: np.ndarray  # (2^s, 2^s) integer counts
    flavor: str = "plus"

    @property
    def uniformity(self) -> int:
        return int(self.counts[1:].max())

    def row(self, a: int) -> np.ndarray:
        return self.counts[a]

    def render(self) -> str:
        return "\n".join(" ".join(f"{int(v):3d}" for v in row) for row in self.counts)

    def to_csv_text(self) -> str:
        lines = ["a,b,count"]
        size = 1 << self.s
        for a in range(size):
            for b in range(size):
                lines.append(f"{a},{b},{int(self.counts[a, b])}")
        return "\n".join(lines) + "\n"


def ddt_plus(f) -> DDTable:
    f = as_sbox(f)
    size = 1 << f.s
    table = np.asarray(f.table, dtype=np.int64)
    x = np.arange(size, dtype=np.int64)
    a = x[:, None]
    out = table[x[None, :] ^ a] ^ table[x][None, :]
    keys = (a * size + out).ravel()
    counts = np.bincount(keys, minlength=size * size).reshape(size, size)
    return DDTable(f.s, counts.astype(np.uint16), "plus")


def ddt_circ(f, op) -> DDTable:
    f = as_sbox(f)
    if op.n != f.s:
        raise WidthMismatchError(f"operation width {op.n} != s-box width {f.s}")
    ct = np.asarray(op.circ_table, dtype=np.int64)
    size = 1 << f.s
    table = np.asarray(f.table, dtype=np.int64)
    x = np.arange(size, dtype=np.int64)
    shifted = ct[np.arange(size)[:, None], x[None, :]]  # [a, x] = x circ a
    out = ct[table[shifted], table[x][None, :]]
    keys = (np.arange(size)[:, None] * size + out).ravel()
    counts = np.bincount(keys, minlength=size * size).reshape(size, size)
    return DDTable(f.s, counts.astype(np.uint16), f"circ({op_id(op)})")


def op_id(op) -> str:
    spec = getattr(op, "spec", None)
    if spec is not None:
        return f"n{spec.n}d{spec.d}:" + ",".join(
            f"{i}{j}={bits:x}" for i, j, bits in spec.entries
        )
    blocks = getattr(op, "blocks", None)
    if blocks is not None:
        return "|".join(op_id(b) for b in blocks)
    return f"n{op.n}"


def key_transition_matrix(op) -> np.ndarray:
    """Key-averaged one-step transition of circ differences through xor
    key addition: entry [a, b] = 2^{-2s} #{(x, k) : (x+k) circ ((x circ a)+k) = b}.

    Exact dyadic values in float64; rows sum to 1.
    """
    s = op.n
    if s > 8:
        raise WidthMismatchError("transition matrix materialisation needs s <= 8")
    size = 1 << s
    ct = np.asarray(op.circ_table, dtype=np.int64)
    x = np.arange(size, dtype=np.int64)
    k = x
    counts = np.empty((size, size), dtype=np.int64)
    xk = x[:, None] ^ k[None, :]
    for a in range(size):
        yk = ct[a][x][:, None] ^ k[None, :]
        b = ct[xk, yk]
        counts[a] = np.bincount(b.ravel(), minlength=size)
    return counts.astype(np.float64) / float(size * size)


# --- circ-linear and circ-affine permutation tables ---------------------------


def circ_combination_tables(op, images: Sequence[int]) -> tuple:
    """Given target values for the canonical basis vectors, return the
    table of the circ-linear extension: coefficient word c maps to the
    circ-combination of the selected images, and the matching point
    table for the basis itself."""
    n = op.n
    size = 1 << n
    point = [0] * size  # circ combination of e_i over set bits of c
    value = [0] * size
    for c in range(1, size):
        low = c & (-c)
        bit = low.bit_length() - 1  # e index n - bit
        e = 1 << bit
        point[c] = op.circ(point[c ^ low], e)
        value[c] = op.circ(value[c ^ low], images[n - bit - 1])
    return tuple(point), tuple(value)


def circ_linear_closure(op, table: Sequence[int]) -> tuple:
    """Table of the circ-linear map agreeing with `table` on the basis."""
    n = op.n
    images = [table[1 << (n - 1 - i)] for i in range(n)]
    point, value = circ_combination_tables(op, images)
    out = [0] * (1 << n)
    for c, p in enumerate(point):
        out[p] = value[c]
    return tuple(out)


def is_circ_linear(op, table: Sequence[int]) -> bool:
    if table[0] != 0:
        return False
    if len(set(table)) != len(table):
        return False
    return tuple(table) == circ_linear_closure(op, table)


def is_circ_affine(op, table: Sequence[int]) -> bool:
    t = table[0]
    linear = [op.circ(v, t) for v in table]
    return is_circ_linear(op, linear)


def circ_linear_part(op, table: Sequence[int]) -> tuple:
    """x -> g(x) circ g(0); the difference-relevant part of a circ-affine g."""
    t = table[0]
    return tuple(op.circ(v, t) for v in table)


def translation_table(op, c: int) -> tuple:
    return tuple(op.circ(x, c) for x in range(1 << op.n))


def check_affine_invariance(f, op, g_in, g_out) -> bool:
    """Entrywise check that pre/post-composition with circ-affine maps
    only relabels the DDT: for comp = (g_in, then f, then g_out),

        ddt_circ(comp)[a][b] == ddt_circ(f)[lin_in(a)][lin_out^{-1}(b)].
    """
    f = as_sbox(f)
    g_in, g_out = tuple(g_in), tuple(g_out)
    for g in (g_in, g_out):
        if not is_circ_affine(op, g):
            raise NotCircAffineError("composition map is not circ-affine")
    comp = compose(g_in, f.table, g_out)
    base = ddt_circ(f, op).counts
    got = ddt_circ(as_sbox(comp, f.s), op).counts
    lin_in = circ_linear_part(op, g_in)
    lin_out_inv = invert_table(circ_linear_part(op, g_out))
    size = 1 << f.s
    for a in range(size):
        for b in range(size):
            if got[a, b] != base[lin_in[a], lin_out_inv[b]]:
                return False
    return True


def circ_to_xor_isomorphism(op) -> tuple:
    """Vector-space isomorphism phi: (V, circ) -> (V, +) sending the
    canonical basis to itself; returns (phi, phi_inverse) tables."""
    n = op.n
    images = [1 << (n - 1 - i) for i in range(n)]
    point, _ = circ_combination_tables(op, images)
    phi = [0] * (1 << n)
    for c, p in enumerate(point):
        phi[p] = c
    return tuple(phi), tuple(point)

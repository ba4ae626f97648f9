"""Alternative operations on F2^n in canonical form.

An operation "circ" is fixed by a symmetric zero-diagonal array of
defining vectors b_{i,j} in F2^d (the matrix Theta), one per unordered
pair of strong coordinates 1 <= i < j <= n-d.  The weak space W is the
span of the last d canonical vectors; U, the error space, is spanned by
the embedded b_{i,j}.  Everything here follows the package-wide bit
conventions of gf2 (x_1 = MSB, postfix action x -> xM).

Core identities, in packed-int form:

    dot(x, y)  = sum over pairs of b_{i,j} * (x_i y_j + x_j y_i)   (low d bits)
    circ(x, y) = x ^ y ^ dot(x, y)
    x circ a   = x * M_a + a,  M_a = [[I, E_a], [0, I]]
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .gf2 import (
    BitMatrix,
    BitVec,
    SizeTooLargeError,
    WidthMismatchError,
    inverse,
    is_invertible,
    span,
    vec_mul,
)


class AltOpError(Exception):
    pass


class DimensionOutOfRangeError(AltOpError):
    pass


class InvalidSpecError(AltOpError):
    pass


class HeterogeneousWidthsError(AltOpError):
    pass


class SingularConjugatorError(AltOpError):
    pass


TABLE_LIMIT = 8  # full 2^n x 2^n lookup tables only below this width

# candidate cap for exhaustive Theta enumeration
ENUM_CANDIDATE_LIMIT = 1 << 24


@dataclass(frozen=True)
class ThetaSpec:
    """Defining data of a canonical-form operation: n, d and the
    nonzero b_{i,j} entries (i < j, d-bit packed ints)."""

    n: int
    d: int
    entries: tuple  # sorted tuple of (i, j, bits)

    @classmethod
    def make(cls, n: int, d: int, b_vectors: dict) -> "ThetaSpec":
        """b_vectors maps (i, j) with i < j to a d-bit int or binary string."""
        ent = []
        for (i, j), b in sorted(b_vectors.items()):
            if not 1 <= i < j <= n - d:
                raise InvalidSpecError(f"entry ({i},{j}) outside 1 <= i < j <= n-d")
            bits = BitVec.parse(b).bits if isinstance(b, str) else int(b)
            if bits >> d:
                raise InvalidSpecError(f"entry ({i},{j}) wider than d={d} bits")
            if bits:
                ent.append((i, j, bits))
        return cls(n, d, tuple(ent))

    def b(self, i: int, j: int) -> int:
        """b_{i,j} with the structural symmetry b_{i,j} = b_{j,i}, b_{i,i} = 0."""
        if i == j:
            return 0
        if i > j:
            i, j = j, i
        for a, b_, bits in self.entries:
            if (a, b_) == (i, j):
                return bits
        return 0

    def theta_columns(self) -> list:
        """Columns of Theta, each packed into d*(n-d) bits (row 1 on top)."""
        m = self.n - self.d
        cols = []
        for j in range(1, m + 1):
            col = 0
            for i in range(1, m + 1):
                col |= self.b(i, j) << ((m - i) * self.d)
            cols.append(col)
        return cols


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violating_columns: tuple | None = None  # 1-indexed column subset summing to 0
    message: str = ""


def validate_theta(spec: ThetaSpec) -> ValidationReport:
    """Accept iff no nontrivial F2-combination of Theta's columns vanishes."""
    if spec.d < 1 or spec.d > spec.n - 2:
        raise DimensionOutOfRangeError(f"d={spec.d} outside 1..n-2 for n={spec.n}")
    m = spec.n - spec.d
    cols = spec.theta_columns()
    by_lead: dict = {}
    for j, col in enumerate(cols, start=1):
        combo = 1 << (j - 1)
        while col:
            lead = col.bit_length() - 1
            if lead not in by_lead:
                by_lead[lead] = (col, combo)
                break
            ec, ecombo = by_lead[lead]
            col ^= ec
            combo ^= ecombo
        else:
            # column reduced to zero: combo is a violating combination
            which = tuple(k + 1 for k in range(m) if (combo >> k) & 1)
            return ValidationReport(False, which, f"columns {which} sum to zero")
    return ValidationReport(True, None, "columns independent")


class AltOperation:
    """Executable canonical-form operation built from a validated ThetaSpec."""

    def __init__(self, spec: ThetaSpec):
        report = validate_theta(spec)
        if not report.ok:
            raise InvalidSpecError(report.message)
        self.spec = spec
        self.n = spec.n
        self.d = spec.d
        # pair list with precomputed coordinate masks, for scalar dot()
        self._pairs = tuple(
            (1 << (self.n - i), 1 << (self.n - j), bits) for i, j, bits in spec.entries
        )
        self.weak_basis = tuple(1 << (self.d - 1 - k) for k in range(self.d))
        self.error_basis = tuple(span(bits for _, _, bits in spec.entries))
        self.circ_table = None
        self.dot_table = None
        self._circ_list = None
        self._dot_list = None
        if self.n <= TABLE_LIMIT:
            self.dot_table = self._build_dot_table()
            x = np.arange(1 << self.n, dtype=np.uint8)
            self.circ_table = x[:, None] ^ x[None, :] ^ self.dot_table
            self._circ_list = self.circ_table.tolist()
            self._dot_list = self.dot_table.tolist()

    def _build_dot_table(self):
        size = 1 << self.n
        x = np.arange(size, dtype=np.uint16)
        tab = np.zeros((size, size), dtype=np.uint8)
        for mi, mj, bits in self._pairs:
            xi = ((x & mi) != 0).astype(np.uint8)
            xj = ((x & mj) != 0).astype(np.uint8)
            term = (xi[:, None] & xj[None, :]) ^ (xj[:, None] & xi[None, :])
            tab ^= term * np.uint8(bits)
        return tab

    def dot(self, x: int, y: int) -> int:
        """Product x . y = x + y + x circ y, lands in the error space."""
        if self._dot_list is not None:
            return self._dot_list[x][y]
        acc = 0
        for mi, mj, bits in self._pairs:
            if (1 if x & mi else 0) & (1 if y & mj else 0) ^ (
                1 if x & mj else 0
            ) & (1 if y & mi else 0):
                acc ^= bits
        return acc

    def circ(self, x: int, y: int) -> int:
        if self._circ_list is not None:
            return self._circ_list[x][y]
        return x ^ y ^ self.dot(x, y)

    def e_matrix(self, a: int) -> BitMatrix:
        """E_a in F2^{(n-d) x d}: row i is the sum of b_{k,i} over strong k set in a."""
        m = self.n - self.d
        rows = [0] * m
        for i, j, bits in self.spec.entries:
            if (a >> (self.n - i)) & 1:
                rows[j - 1] ^= bits
            if (a >> (self.n - j)) & 1:
                rows[i - 1] ^= bits
        return BitMatrix(self.d, tuple(rows))

    @property
    def e_matrices(self) -> tuple:
        """E_{e_i} for i = 1..n (zero blocks for the weak coordinates)."""
        return tuple(self.e_matrix(1 << (self.n - i)) for i in range(1, self.n + 1))

    def m_matrix(self, a: int) -> BitMatrix:
        """Translation matrix M_a = [[I, E_a], [0, I]] (full n x n)."""
        m = self.n - self.d
        e_rows = self.e_matrix(a).rows
        rows = [(1 << (self.n - 1 - k)) | e_rows[k] for k in range(m)]
        rows += [1 << (self.d - 1 - k) for k in range(self.d)]
        return BitMatrix(self.n, tuple(rows))

    def is_weak(self, a: int) -> bool:
        return a < (1 << self.d)

    def translation_group(self) -> "TranslationGroup":
        if self.n > TABLE_LIMIT:
            raise SizeTooLargeError("materialising 2^n translations")
        elems = tuple((a, self.m_matrix(a).rows) for a in range(1 << self.n))
        return TranslationGroup(self.n, elems, canonical_origin=(self.spec, BitMatrix.identity(self.n)))


def build_operation(spec: ThetaSpec) -> AltOperation:
    return AltOperation(spec)


def circ_add(op, x: BitVec, y: BitVec) -> BitVec:
    if x.width != op.n or y.width != op.n:
        raise WidthMismatchError(f"operands must have width {op.n}")
    return BitVec(op.n, op.circ(x.bits, y.bits))


def dot(op, x: BitVec, y: BitVec) -> BitVec:
    if x.width != op.n or y.width != op.n:
        raise WidthMismatchError(f"operands must have width {op.n}")
    return BitVec(op.n, op.dot(x.bits, y.bits))


def error_space(op) -> tuple:
    """Basis of U as BitVec values (embedded in the low d coordinates)."""
    return tuple(BitVec(op.n, v) for v in op.error_basis)


class ParallelOperation:
    """Block-wise composition of s-bit operations on an n = s*b bit state.

    Block 1 occupies the most significant s bits, matching e_i^j =
    e_{s(j-1)+i}.
    """

    def __init__(self, blocks: Sequence[AltOperation]):
        widths = {op.n for op in blocks}
        if len(widths) != 1:
            raise HeterogeneousWidthsError(f"block widths {sorted(widths)}")
        self.blocks = tuple(blocks)
        self.s = self.blocks[0].n
        self.nblocks = len(self.blocks)
        self.n = self.s * self.nblocks
        self.d = self.blocks[0].d if len({op.d for op in blocks}) == 1 else None
        self._mask = (1 << self.s) - 1
        self.weak_basis = tuple(
            w << (self.s * (self.nblocks - 1 - j))
            for j, op in enumerate(self.blocks)
            for w in op.weak_basis
        )
        self.error_basis = tuple(
            u << (self.s * (self.nblocks - 1 - j))
            for j, op in enumerate(self.blocks)
            for u in op.error_basis
        )
        self.circ_table = None
        self.dot_table = None
        self._circ_list = None
        self._dot_list = None
        if self.n <= TABLE_LIMIT:
            x = np.arange(1 << self.n, dtype=np.uint16)
            dot_tab = np.zeros((1 << self.n, 1 << self.n), dtype=np.uint8)
            for j, op in enumerate(self.blocks):
                sh = self.s * (self.nblocks - 1 - j)
                comp = ((x >> sh) & self._mask).astype(np.uint8)
                dot_tab |= op.dot_table[comp[:, None], comp[None, :]].astype(np.uint8) << sh
            self.dot_table = dot_tab
            x8 = np.arange(1 << self.n, dtype=np.uint8)
            self.circ_table = x8[:, None] ^ x8[None, :] ^ dot_tab
            self._circ_list = self.circ_table.tolist()
            self._dot_list = self.dot_table.tolist()

    def block_values(self, x: int) -> list:
        return [
            (x >> (self.s * (self.nblocks - 1 - j))) & self._mask
            for j in range(self.nblocks)
        ]

    def circ(self, x: int, y: int) -> int:
        if self._circ_list is not None:
            return self._circ_list[x][y]
        out = 0
        for j, op in enumerate(self.blocks):
            sh = self.s * (self.nblocks - 1 - j)
            out |= op.circ((x >> sh) & self._mask, (y >> sh) & self._mask) << sh
        return out

    def dot(self, x: int, y: int) -> int:
        if self._dot_list is not None:
            return self._dot_list[x][y]
        out = 0
        for j, op in enumerate(self.blocks):
            sh = self.s * (self.nblocks - 1 - j)
            out |= op.dot((x >> sh) & self._mask, (y >> sh) & self._mask) << sh
        return out

    def is_weak(self, a: int) -> bool:
        return all(
            op.is_weak(v) for op, v in zip(self.blocks, self.block_values(a))
        )


def parallel_compose(block_ops: Sequence[AltOperation]) -> ParallelOperation:
    return ParallelOperation(block_ops)


def _perm_pack(perm: Sequence[int], n: int) -> int:
    """Canonical integer encoding of a permutation of 0..2^n-1."""
    out = 0
    for x, y in enumerate(perm):
        out |= y << (n * x)
    return out


class TranslationGroup:
    """A 2-elementary abelian regular subgroup as explicit affine maps.

    elements is a tuple, sorted by a, of (a, rows) pairs describing
    tau_a : x -> x*M_a + a, with rows the packed rows of M_a.
    """

    def __init__(self, n: int, elements: tuple, canonical_origin=None):
        self.n = n
        self.elements = tuple(sorted(elements))
        self.canonical_origin = canonical_origin
        self._by_a = dict(self.elements)
        self._circ_table = None

    def circ(self, x: int, a: int) -> int:
        return vec_mul(x, self._by_a[a], self.n) ^ a

    @property
    def circ_table(self) -> np.ndarray:
        if self._circ_table is None:
            if self.n > TABLE_LIMIT:
                raise SizeTooLargeError("circ table materialisation")
            size = 1 << self.n
            tab = np.zeros((size, size), dtype=np.uint8)
            for a, rows in self.elements:
                tab[:, a] = [vec_mul(x, rows, self.n) ^ a for x in range(size)]
            self._circ_table = tab
        return self._circ_table

    def dot(self, x: int, y: int) -> int:
        return x ^ y ^ self.circ(x, y)

    def weak_space(self) -> list:
        ident = BitMatrix.identity(self.n).rows
        return [a for a, rows in self.elements if rows == ident]

    def fingerprint(self) -> tuple:
        """Representation-independent identity: the sorted set of the
        group's permutations, each packed into one int."""
        perms = []
        for a, rows in self.elements:
            perms.append(
                _perm_pack([vec_mul(x, rows, self.n) ^ a for x in range(1 << self.n)], self.n)
            )
        return tuple(sorted(perms))

    def conjugate(self, g: BitMatrix) -> "TranslationGroup":
        """g T g^{-1}; the element mapping 0 to a*g^{-1} is g tau_a g^{-1}."""
        if not is_invertible(g):
            raise SingularConjugatorError("conjugator not invertible")
        ginv = inverse(g)
        elems = []
        for a, rows in self.elements:
            m = g * BitMatrix(self.n, rows) * ginv
            elems.append((ginv.vec_mul(a), m.rows))
        origin = None
        if self.canonical_origin is not None:
            spec, h = self.canonical_origin
            origin = (spec, g * h)
        return TranslationGroup(self.n, tuple(elems), canonical_origin=origin)

    def is_elementary_abelian_regular(self, sample: int | None = None) -> bool:
        ident = BitMatrix.identity(self.n).rows
        if sorted(self._by_a) != list(range(1 << self.n)):
            return False  # regularity: exactly one element per target
        items = self.elements if sample is None else self.elements[:: max(1, len(self.elements) // sample)]
        elem_set = set(self.elements)
        for a, rows in items:
            ma = BitMatrix(self.n, rows)
            if (ma * ma).rows != ident or ma.vec_mul(a) ^ a != 0:
                return False  # involution
            for b, rows_b in items:
                mb = BitMatrix(self.n, rows_b)
                c = mb.vec_mul(a) ^ b
                if (c, (ma * mb).rows) not in elem_set:
                    return False  # closure
                if (ma * mb).rows != (mb * ma).rows or c != ma.vec_mul(b) ^ a:
                    return False  # commutativity
        return True


def conjugate_group(t: TranslationGroup, g: BitMatrix) -> TranslationGroup:
    return t.conjugate(g)


def theta_pairs(n: int, d: int) -> list:
    return [(i, j) for i in range(1, n - d + 1) for j in range(i + 1, n - d + 1)]


def enumerate_canonical(n: int, d: int) -> Iterator[ThetaSpec]:
    """Every valid canonical ThetaSpec for (n, d), exactly once."""
    if d < 1 or d > n - 2:
        raise DimensionOutOfRangeError(f"d={d} outside 1..n-2")
    pairs = theta_pairs(n, d)
    total_bits = d * len(pairs)
    if (1 << total_bits) > ENUM_CANDIDATE_LIMIT:
        raise SizeTooLargeError(f"2^{total_bits} candidates")
    mask = (1 << d) - 1
    for word in range(1 << total_bits):
        bvs = {}
        for k, pair in enumerate(pairs):
            bits = (word >> (k * d)) & mask
            if bits:
                bvs[pair] = bits
        spec = ThetaSpec.make(n, d, bvs)
        if validate_theta(spec).ok:
            yield spec


def sample_canonical(n: int, d: int, rng) -> ThetaSpec:
    """Uniform valid ThetaSpec by rejection over uniform b-vectors."""
    pairs = theta_pairs(n, d)
    while True:
        bvs = {p: rng.randrange(1 << d) for p in pairs}
        spec = ThetaSpec.make(n, d, {p: v for p, v in bvs.items() if v})
        if validate_theta(spec).ok:
            return spec


@dataclass(frozen=True)
class ConjugacyInvariant:
    d: int
    dim_u: int


def conjugacy_invariant(op) -> ConjugacyInvariant:
    """Complete invariant for d = n-2 (everything conjugate) and d = n-3
    (conjugate iff dim U matches)."""
    return ConjugacyInvariant(d=op.d, dim_u=len(op.error_basis))


def canonical_spec_4bit(b: int = 0b01) -> ThetaSpec:
    """The n=4, d=2 spec defined by a single nonzero vector b."""
    return ThetaSpec.make(4, 2, {(1, 2): b})


@functools.lru_cache(maxsize=None)
def all_translation_groups_n4() -> tuple:
    """All distinct conjugates of the canonical 4-bit group under GL(4,2).

    Conjugates every one of the 20160 elements in a vectorised batch
    (groups as sorted sets of packed permutations) and deduplicates;
    returns a tuple of TranslationGroup, each carrying its conjugator in
    canonical_origin.  The canonical group itself is first.
    """
    from .gf2 import enumerate_gl

    op = build_operation(canonical_spec_4bit())
    tau = np.asarray(op.circ_table, dtype=np.uint8)  # tau[a, x] = x circ a (symmetric)

    gl = list(enumerate_gl(4))
    rows = np.array([g.rows for g in gl], dtype=np.uint8)  # (N, 4)
    N = rows.shape[0]
    tab = np.zeros((N, 16), dtype=np.uint8)  # tab[k, x] = x * g_k
    for x in range(16):
        acc = np.zeros(N, dtype=np.uint8)
        for bit in range(4):
            if (x >> (3 - bit)) & 1:
                acc ^= rows[:, bit]
        tab[:, x] = acc
    tabinv = np.argsort(tab, axis=1).astype(np.uint8)

    packed = np.zeros((N, 16), dtype=np.uint64)
    for a in range(16):
        conj = np.take_along_axis(tabinv, tau[a][tab], axis=1)  # x -> ((x g) circ a) g^{-1}
        packed[:, a] = (conj.astype(np.uint64) << (4 * np.arange(16, dtype=np.uint64))).sum(axis=1)
    packed.sort(axis=1)

    _, first = np.unique(packed, axis=0, return_index=True)
    base = op.translation_group()
    return tuple(base.conjugate(gl[k]) for k in sorted(first))


class XorOperation:
    """Degenerate stand-in with circ = xor and dot = 0 (not an
    alternative operation, its defining data would be all-zero; used to cross-check
    circ-flavoured code against the classical path)."""

    def __init__(self, n: int):
        self.n = n
        self.d = n
        self.weak_basis = tuple(1 << k for k in range(n))
        self.error_basis = ()
        self.circ_table = None
        if n <= TABLE_LIMIT:
            x = np.arange(1 << n, dtype=np.uint8)
            self.circ_table = x[:, None] ^ x[None, :]

    def circ(self, x: int, y: int) -> int:
        return x ^ y

    def dot(self, x: int, y: int) -> int:
        return 0

    def is_weak(self, a: int) -> bool:
        return True


def xor_operation(n: int) -> XorOperation:
    return XorOperation(n)


# --- structured text format -------------------------------------------------
#
#   n: 4
#   d: 2
#   1,2: 01
#
# Omitted entries are zero; '#' starts a comment.


def render_theta_text(spec: ThetaSpec) -> str:
    lines = [f"n: {spec.n}", f"d: {spec.d}"]
    for i, j, bits in spec.entries:
        lines.append(f"{i},{j}: {format(bits, f'0{spec.d}b')}")
    return "\n".join(lines) + "\n"


def parse_theta_text(text: str) -> ThetaSpec:
    n = d = None
    raw_entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise InvalidSpecError(f"line {lineno}: expected 'key: value'")
        key, value = (part.strip() for part in line.split(":", 1))
        if key == "n":
            n = int(value)
        elif key == "d":
            d = int(value)
        elif "," in key:
            i, j = (int(p) for p in key.split(","))
            raw_entries.append(((i, j), value))
        else:
            raise InvalidSpecError(f"line {lineno}: unknown key {key!r}")
    if n is None or d is None:
        raise InvalidSpecError("missing n or d")
    b_vectors = {}
    for (i, j), value in raw_entries:
        if len(value) != d:
            raise InvalidSpecError(f"entry {i},{j}: expected {d} bits")
        b_vectors[(i, j)] = value
    return ThetaSpec.make(n, d, b_vectors)

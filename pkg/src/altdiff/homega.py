"""The group H of maps linear for both xor and a fixed alternative operation.

Membership is the automorphism test of the product algebra: lambda is in
H iff it is invertible and (e_i . e_j) lambda = e_i lambda . e_j lambda
for all basis pairs (sufficient by bilinearity of the product).

Three characterised regimes are constructive:

  * single block, d = s-2:   [[A,B],[0,D]] with A in GL(2), bD = b
  * parallel blocks, d = s-2: block permutation pattern on the A blocks,
    free B blocks, bD_{ij} = b exactly on the permutation, D invertible
  * single block, d = s-3:   [[A,B],[0,D]] with A in GL(3) and the three
    compatibility equations tying b_{ij} D to the rows of A
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .altop import AltOperation, ParallelOperation
from .gf2 import (
    BitMatrix,
    SizeTooLargeError,
    WidthMismatchError,
    enumerate_gl,
    gl_order,
    inverse,
    is_invertible,
    rank,
    vec_mul,
)


class WrongRegimeError(Exception):
    pass


SINGLE_BLOCK_LIMIT = 6  # enumeration guard on the block width s
D_REJECTION_CAP = 10_000


@dataclass(frozen=True)
class BlockDecomposition:
    """Block data of a constructive H element: perm[i] is the block column
    holding the invertible A block of block row i (0-indexed)."""

    perm: tuple
    a_blocks: tuple  # grid of 2x2 BitMatrix
    b_blocks: tuple  # grid of 2x(s-2) BitMatrix
    d_blocks: tuple  # grid of (s-2)x(s-2) BitMatrix


@dataclass(frozen=True)
class LambdaElement:
    matrix: BitMatrix
    decomposition: BlockDecomposition | None = None


def _as_matrix(lam) -> BitMatrix:
    return lam.matrix if isinstance(lam, LambdaElement) else lam


def is_member(op, lam) -> bool:
    """Automorphism test: invertible and dot-compatible on basis pairs."""
    m = _as_matrix(lam)
    n = op.n
    if m.nrows != n or m.cols != n:
        raise WidthMismatchError(f"expected {n}x{n}")
    if not is_invertible(m):
        return False
    rows = m.rows
    for i in range(n):
        for j in range(i + 1, n):
            u = op.dot(1 << (n - 1 - i), 1 << (n - 1 - j))
            if vec_mul(u, rows, n) != op.dot(rows[i], rows[j]):
                return False
    return True


def dot_table_of(op) -> np.ndarray:
    """2^n x 2^n table of op.dot, materialising through scalar calls when
    the operation does not carry one (n <= 8 only)."""
    tab = getattr(op, "dot_table", None)
    if tab is not None:
        return tab
    if op.n > 8:
        raise SizeTooLargeError("dot table materialisation limited to n <= 8")
    ct = getattr(op, "circ_table", None)
    if ct is not None:
        x = np.arange(1 << op.n, dtype=np.uint8)
        return x[:, None] ^ x[None, :] ^ ct
    size = 1 << op.n
    out = np.zeros((size, size), dtype=np.uint8)
    for x in range(size):
        for y in range(size):
            out[x, y] = op.dot(x, y)
    return out


def batch_is_member(op, rows: np.ndarray) -> np.ndarray:
    """Vectorised automorphism test over a batch of invertible matrices.

    rows is (N, n) of packed row words; invertibility is assumed (use
    gf2.batch_invertible_mask first for arbitrary input).
    """
    n = op.n
    dottab = dot_table_of(op)
    count = rows.shape[0]
    ok = np.ones(count, dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            u = int(dottab[1 << (n - 1 - i), 1 << (n - 1 - j)])
            lhs = np.zeros(count, dtype=rows.dtype)
            for k in range(n):
                if (u >> (n - 1 - k)) & 1:
                    lhs ^= rows[:, k]
            ok &= lhs == dottab[rows[:, i], rows[:, j]]
    return ok


def brute_members_gl4(op) -> set:
    """Exhaustive automorphism-test filter over all 20160 elements of
    GL(4,2); the oracle side of the dual-route H count at s = 4.
    Returns the member matrices as row tuples."""
    if op.n != 4:
        raise WrongRegimeError("exhaustive GL filter is for n = 4")
    gl = list(enumerate_gl(4))
    rows = np.array([g.rows for g in gl], dtype=np.uint8)
    mask = batch_is_member(op, rows)
    return {gl[k].rows for k in np.nonzero(mask)[0]}


def assemble_block_matrix(s: int, a_blocks, b_blocks, d_blocks) -> BitMatrix:
    """Stitch b x b grids of (A, B, D) blocks into the full n x n matrix."""
    nb = len(a_blocks)
    n = s * nb
    dd = s - 2
    rows = []
    for i in range(nb):
        for k in range(2):  # strong rows of block row i
            r = 0
            for j in range(nb):
                chunk = (a_blocks[i][j].rows[k] << dd) | b_blocks[i][j].rows[k]
                r |= chunk << (s * (nb - 1 - j))
            rows.append(r)
        for k in range(dd):  # weak rows
            r = 0
            for j in range(nb):
                r |= d_blocks[i][j].rows[k] << (s * (nb - 1 - j))
            rows.append(r)
    return BitMatrix(n, tuple(rows))


def _single_block_b(op: AltOperation) -> int:
    if op.d != op.n - 2:
        raise WrongRegimeError(f"d={op.d} != s-2={op.n - 2}")
    return op.spec.b(1, 2)


def enumerate_single_block(op: AltOperation) -> Iterator[LambdaElement]:
    """All of H for a single block with d = s-2: [[A,B],[0,D]] with bD = b."""
    s, d = op.n, op.d
    if s > SINGLE_BLOCK_LIMIT:
        raise SizeTooLargeError(f"s={s} > {SINGLE_BLOCK_LIMIT}")
    bvec = _single_block_b(op)
    d_choices = [dm for dm in enumerate_gl(d) if vec_mul(bvec, dm.rows, d) == bvec]
    for a in enumerate_gl(2):
        for dm in d_choices:
            for word in range(1 << (2 * d)):
                bm = BitMatrix(d, (word >> d, word & ((1 << d) - 1)))
                mat = assemble_block_matrix(s, ((a,),), ((bm,),), ((dm,),))
                yield LambdaElement(mat, BlockDecomposition((0,), ((a,),), ((bm,),), ((dm,),)))


def count_single_block(op: AltOperation) -> int:
    s, d = op.n, op.d
    bvec = _single_block_b(op)
    stab = sum(1 for dm in enumerate_gl(d) if vec_mul(bvec, dm.rows, d) == bvec)
    return 6 * (1 << (2 * d)) * stab


def _require_uniform_parallel(op: ParallelOperation) -> int:
    """Parallel regime guard: every block d = s-2 with one shared b."""
    bvecs = set()
    for block in op.blocks:
        if block.d != op.s - 2:
            raise WrongRegimeError("blocks must have d = s-2")
        bvecs.add(block.spec.b(1, 2))
    if len(bvecs) != 1:
        raise WrongRegimeError("blocks must share the defining vector")
    return bvecs.pop()


def _constrained_block(rng: random.Random, bvec: int, d: int, target: int) -> BitMatrix:
    """Uniform D block with (b-combination of rows) = target."""
    pivot = next(r for r in range(d) if (bvec >> (d - 1 - r)) & 1)
    rows = [rng.randrange(1 << d) for _ in range(d)]
    acc = target
    for r in range(d):
        if r != pivot and (bvec >> (d - 1 - r)) & 1:
            acc ^= rows[r]
    rows[pivot] = acc
    return BitMatrix(d, tuple(rows))


def sample_parallel(op: ParallelOperation, rng_seed: int) -> LambdaElement:
    """Random H element for a parallel d = s-2 operation.

    The block permutation, the A blocks and the B blocks are exactly
    uniform; D is drawn uniformly on the constrained-row fiber and
    rejected while singular (capped, then the identity-patterned D).
    """
    bvec = _require_uniform_parallel(op)
    s, nb, d = op.s, op.nblocks, op.s - 2
    rng = random.Random(rng_seed)
    perm = list(range(nb))
    rng.shuffle(perm)
    gl2 = list(enumerate_gl(2))
    zero2 = BitMatrix.zeros(2, 2)
    a_blocks = tuple(
        tuple(rng.choice(gl2) if j == perm[i] else zero2 for j in range(nb))
        for i in range(nb)
    )
    b_blocks = tuple(
        tuple(
            BitMatrix(d, (rng.randrange(1 << d), rng.randrange(1 << d)))
            for _ in range(nb)
        )
        for _ in range(nb)
    )

    ident_d = BitMatrix.identity(d)
    zero_d = BitMatrix.zeros(d, d)
    for attempt in range(D_REJECTION_CAP + 1):
        if attempt == D_REJECTION_CAP:
            d_blocks = tuple(
                tuple(ident_d if j == perm[i] else zero_d for j in range(nb))
                for i in range(nb)
            )
            break
        d_blocks = tuple(
            tuple(
                _constrained_block(rng, bvec, d, bvec if j == perm[i] else 0)
                for j in range(nb)
            )
            for i in range(nb)
        )
        global_rows = []
        for i in range(nb):
            for k in range(d):
                r = 0
                for j in range(nb):
                    r |= d_blocks[i][j].rows[k] << (d * (nb - 1 - j))
                global_rows.append(r)
        if rank(BitMatrix(d * nb, tuple(global_rows))) == d * nb:
            break
    mat = assemble_block_matrix(s, a_blocks, b_blocks, d_blocks)
    return LambdaElement(mat, BlockDecomposition(tuple(perm), a_blocks, b_blocks, d_blocks))


def count_parallel(s: int, blocks: int) -> int:
    """|H| for `blocks` parallel copies of a d = s-2 operation."""
    return math.prod(count_parallel_breakdown(s, blocks).values())


def count_parallel_breakdown(s: int, blocks: int) -> dict:
    """Factorisation of |H|: permutations x A x B x admissible D."""
    d = s - 2
    return {
        "perm": math.factorial(blocks),
        "a": 6 ** blocks,
        "b": 1 << (2 * d * blocks * blocks),
        "d": gl_order((d - 1) * blocks) << ((d - 1) * blocks * blocks),
    }


def count_admissible_d_exhaustive(s: int, blocks: int, bvec: int, perm) -> int:
    """Direct scan of every (d*blocks)^2-bit D against the block
    constraints and invertibility; cross-check for count_parallel."""
    d = s - 2
    n = d * blocks
    if n > 4:
        raise SizeTooLargeError("exhaustive D scan limited to 4x4")
    mask = (1 << d) - 1
    count = 0
    for word in range(1 << (n * n)):
        rows = tuple((word >> (n * k)) & ((1 << n) - 1) for k in range(n))
        ok = True
        for i in range(blocks):
            for j in range(blocks):
                comb = 0
                for r in range(d):
                    if (bvec >> (d - 1 - r)) & 1:
                        comb ^= rows[i * d + r]
                got = (comb >> (d * (blocks - 1 - j))) & mask
                want = bvec if j == perm[i] else 0
                if got != want:
                    ok = False
                    break
            if not ok:
                break
        if ok and rank(BitMatrix(n, rows)) == n:
            count += 1
    return count


_S3_PAIRS = ((1, 2), (1, 3), (2, 3))


def _compat_rhs(a: BitMatrix, spec) -> dict:
    """Right-hand sides of the three compatibility equations for a given A."""

    def entry(i, k):
        return (a.rows[i - 1] >> (3 - k)) & 1

    rhs = {}
    for i, j in _S3_PAIRS:
        acc = 0
        for k1, k2 in _S3_PAIRS:
            if entry(i, k1) & entry(j, k2) ^ entry(i, k2) & entry(j, k1):
                acc ^= spec.b(k1, k2)
        rhs[(i, j)] = acc
    return rhs


def _s_minus_3_pairs(op: AltOperation) -> Iterator[tuple]:
    """Valid (A, D) pairs of the d = s-3 characterisation."""
    s, d = op.n, op.d
    if d != s - 3:
        raise WrongRegimeError(f"d={d} != s-3={s - 3}")
    if s > SINGLE_BLOCK_LIMIT:
        raise SizeTooLargeError(f"s={s} > {SINGLE_BLOCK_LIMIT}")
    a_list = list(enumerate_gl(3))
    d_list = list(enumerate_gl(d))
    dim_u = len(op.error_basis)
    if dim_u == 2:
        # D-first: far fewer admissible D than A
        for dm in d_list:
            images = {
                (i, j): vec_mul(op.spec.b(i, j), dm.rows, d) for i, j in _S3_PAIRS
            }
            for a in a_list:
                if _compat_rhs(a, op.spec) == images:
                    yield a, dm
    else:
        for a in a_list:
            rhs = _compat_rhs(a, op.spec)
            for dm in d_list:
                if all(
                    vec_mul(op.spec.b(i, j), dm.rows, d) == rhs[(i, j)]
                    for i, j in _S3_PAIRS
                ):
                    yield a, dm


def enumerate_s_minus_3(op: AltOperation) -> Iterator[LambdaElement]:
    """All of H for a single block with d = s-3."""
    d = op.d
    for a, dm in _s_minus_3_pairs(op):
        for word in range(1 << (3 * d)):
            mask = (1 << d) - 1
            bm = BitMatrix(d, ((word >> (2 * d)) & mask, (word >> d) & mask, word & mask))
            rows = tuple((a.rows[k] << d) | bm.rows[k] for k in range(3)) + dm.rows
            yield LambdaElement(
                BitMatrix(op.n, rows),
                BlockDecomposition((0,), ((a,),), ((bm,),), ((dm,),)),
            )


def count_s_minus_3(op: AltOperation) -> int:
    return sum(1 for _ in _s_minus_3_pairs(op)) << (3 * op.d)


def admissible_d_matrices(op: AltOperation) -> list:
    return sorted({dm.rows for _, dm in _s_minus_3_pairs(op)})


def conjugate_membership(base_op, g: BitMatrix) -> Callable:
    """Membership predicate for H of the conjugated operation: lambda
    belongs to it iff g^{-1} lambda g belongs to H of base_op."""
    from .altop import SingularConjugatorError

    if not is_invertible(g):
        raise SingularConjugatorError("conjugator not invertible")
    ginv = inverse(g)

    def member(lam) -> bool:
        m = _as_matrix(lam)
        return is_member(base_op, ginv * m * g)

    return member


def has_parallel_shape(lam, op: ParallelOperation) -> bool:
    """Structural test of the parallel d = s-2 characterisation."""
    bvec = _require_uniform_parallel(op)
    m = _as_matrix(lam)
    s, nb, d = op.s, op.nblocks, op.s - 2
    if m.nrows != op.n:
        raise WidthMismatchError(f"expected {op.n}x{op.n}")
    mask_s = (1 << s) - 1
    a = [[None] * nb for _ in range(nb)]
    d_rows_global = []
    for i in range(nb):
        strong = m.rows[i * s : i * s + 2]
        weak = m.rows[i * s + 2 : (i + 1) * s]
        drow_acc = [0] * d
        for j in range(nb):
            sh = s * (nb - 1 - j)
            a_rows = tuple((r >> sh & mask_s) >> d for r in strong)
            c_rows = tuple((r >> sh & mask_s) >> d for r in weak)
            if any(c_rows):
                return False  # C block must vanish
            a[i][j] = a_rows
            for k in range(d):
                drow_acc[k] |= ((weak[k] >> sh) & ((1 << d) - 1)) << (d * (nb - 1 - j))
        d_rows_global.extend(drow_acc)
    # A pattern: exactly one invertible block per row and per column
    col_used = [0] * nb
    for i in range(nb):
        nz = [j for j in range(nb) if any(a[i][j])]
        if len(nz) != 1:
            return False
        j = nz[0]
        col_used[j] += 1
        if rank(BitMatrix(2, a[i][j])) != 2:
            return False
        # b D_{ij} conditions along the block row
        for jj in range(nb):
            dij = tuple(
                (d_rows_global[i * d + k] >> (d * (nb - 1 - jj))) & ((1 << d) - 1)
                for k in range(d)
            )
            want = bvec if jj == j else 0
            if vec_mul(bvec, dij, d) != want:
                return False
    if col_used != [1] * nb:
        return False
    return rank(BitMatrix(d * nb, tuple(d_rows_global))) == d * nb

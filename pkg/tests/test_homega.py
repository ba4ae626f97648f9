import math
import random

import numpy as np
import pytest

from altdiff.altop import (
    ThetaSpec,
    build_operation,
    canonical_spec_4bit,
    parallel_compose,
)
from altdiff.gf2 import (
    BitMatrix,
    batch_invertible_mask,
    enumerate_gl,
    gl_order,
    inverse,
    random_invertible_rows,
    vec_mul,
)
from altdiff.homega import (
    WrongRegimeError,
    admissible_d_matrices,
    batch_is_member,
    brute_members_gl4,
    conjugate_membership,
    count_admissible_d_exhaustive,
    count_parallel,
    count_parallel_breakdown,
    count_s_minus_3,
    count_single_block,
    enumerate_s_minus_3,
    enumerate_single_block,
    has_parallel_shape,
    is_member,
    sample_parallel,
)

EXAMPLE2_SPEC = ThetaSpec.make(6, 3, {(1, 2): "101", (1, 3): "110", (2, 3): "101"})
DIM_U3_SPEC = ThetaSpec.make(6, 3, {(1, 2): "100", (1, 3): "010", (2, 3): "001"})


def op4(b=0b01):
    return build_operation(canonical_spec_4bit(b))


def par16():
    return parallel_compose([op4()] * 4)


# --- membership ----------------------------------------------------------------


def test_identity_is_member():
    assert is_member(op4(), BitMatrix.identity(4))
    assert is_member(par16(), BitMatrix.identity(16))


def test_nonzero_c_block_is_rejected():
    # lower-left (weak -> strong) leakage violates W-preservation
    lam = BitMatrix.from_rows(["1000", "0100", "1010", "0001"])
    op = op4()
    assert not is_member(op, lam)
    # oracle: productive basis pair fails directly
    rows = lam.rows
    bad = any(
        vec_mul(op.dot(1 << (3 - i), 1 << (3 - j)), rows, 4)
        != op.dot(rows[i], rows[j])
        for i in range(4)
        for j in range(i + 1, 4)
    )
    assert bad


def test_singular_matrix_is_not_member():
    assert not is_member(op4(), BitMatrix.zeros(4, 4))


def test_batch_matches_scalar_membership():
    op = op4()
    gl = list(enumerate_gl(4))
    rows = np.array([g.rows for g in gl], dtype=np.uint8)
    mask = batch_is_member(op, rows)
    rng = random.Random(4)
    for k in rng.sample(range(len(gl)), 300):
        assert mask[k] == is_member(op, gl[k])


# --- single block, d = s-2 ------------------------------------------------------


def test_enumerate_single_block_equals_brute_filter():
    op = op4()
    constructed = {le.matrix.rows for le in enumerate_single_block(op)}
    assert len(constructed) == 192
    assert count_single_block(op) == 192
    brute = brute_members_gl4(op)
    assert constructed == brute


def test_single_block_s3():
    # s=3, d=1, b=(1): 6 * 2^2 * 1 = 24, cross-checked against GL(3,2)
    op = build_operation(ThetaSpec.make(3, 1, {(1, 2): "1"}))
    constructed = {le.matrix.rows for le in enumerate_single_block(op)}
    assert len(constructed) == 24
    brute = {g.rows for g in enumerate_gl(3) if is_member(op, g)}
    assert constructed == brute


def test_single_block_soundness():
    op = op4(0b11)
    for le in enumerate_single_block(op):
        assert is_member(op, le)


def test_single_block_wrong_regime():
    with pytest.raises(WrongRegimeError):
        next(enumerate_single_block(build_operation(EXAMPLE2_SPEC)))


def test_closure_under_product_and_inverse():
    op = op4()
    members = [le.matrix for le in enumerate_single_block(op)]
    member_set = {m.rows for m in members}
    rng = random.Random(8)
    for _ in range(60):
        a, b = rng.choice(members), rng.choice(members)
        assert (a * b).rows in member_set
        assert inverse(a).rows in member_set


# --- parallel sampling -----------------------------------------------------------


def test_sample_parallel_soundness():
    par = par16()
    for seed in range(25):
        le = sample_parallel(par, seed)
        assert is_member(par, le)
        assert has_parallel_shape(le, par)


def test_sample_parallel_identity_pattern():
    from altdiff.homega import assemble_block_matrix

    ident2 = BitMatrix.identity(2)
    zero2 = BitMatrix.zeros(2, 2)
    a = tuple(tuple(ident2 if i == j else zero2 for j in range(4)) for i in range(4))
    b = tuple(tuple(zero2 for _ in range(4)) for _ in range(4))
    mat = assemble_block_matrix(4, a, b, a)
    assert mat == BitMatrix.identity(16)
    assert is_member(par16(), mat)


def test_sample_parallel_seed_variety():
    par = par16()
    mats = {sample_parallel(par, seed).matrix.rows for seed in range(100)}
    assert len(mats) >= 99
    # determinism
    assert sample_parallel(par, 7).matrix == sample_parallel(par, 7).matrix


def test_sample_parallel_two_blocks_shape():
    par = parallel_compose([op4()] * 2)
    for seed in range(10):
        le = sample_parallel(par, seed)
        assert has_parallel_shape(le, par)
        assert is_member(par, le)


def test_parallel_shape_negatives():
    par = parallel_compose([op4()] * 2)
    le = sample_parallel(par, 3)
    rows = list(le.matrix.rows)
    # break the C block of block row 0, column 1: set a weak-row strong bit
    rows[2] ^= 1 << 3
    assert not has_parallel_shape(BitMatrix(8, tuple(rows)), par)
    # break a bD = b condition: flip a D bit that the constraint pins
    perm0 = le.decomposition.perm[0]
    sh = 4 * (2 - 1 - perm0)
    rows = list(le.matrix.rows)
    rows[3] ^= 1 << sh  # lowest weak row, pinned by b = (0,1)
    m = BitMatrix(8, tuple(rows))
    assert not has_parallel_shape(m, par) or not is_member(par, m)


# --- parallel counting ------------------------------------------------------------


def test_count_parallel_single_block_matches():
    assert count_parallel(4, 1) == 192
    assert count_parallel(3, 1) == 24


def test_count_parallel_two_blocks_cross_check():
    # exhaustive scan of the constrained D space against the closed form
    breakdown = count_parallel_breakdown(4, 2)
    for perm in ([0, 1], [1, 0]):
        assert count_admissible_d_exhaustive(4, 2, 0b01, perm) == breakdown["d"]
    assert count_parallel(4, 2) == 2 * 6 ** 2 * 16 ** 4 * breakdown["d"]
    assert breakdown["d"] == 96


def test_count_parallel_b_divisibility():
    for s, blocks in ((4, 1), (4, 2), (4, 4), (3, 2), (5, 2)):
        assert count_parallel(s, blocks) % (1 << (2 * (s - 2) * blocks)) == 0


def test_membership_probability_matches_count():
    # fraction of GL(4,2) in H must be 192/20160
    assert gl_order(4) // count_parallel(4, 1) == 105


# --- d = s-3 ----------------------------------------------------------------------


def test_s_minus_3_counts():
    op3 = build_operation(DIM_U3_SPEC)
    assert count_s_minus_3(op3) == 86016
    op2 = build_operation(EXAMPLE2_SPEC)
    assert count_s_minus_3(op2) == 49152
    assert len(admissible_d_matrices(op2)) == 24


def test_s_minus_3_brute_filter_cross_check():
    # oracle: scan all [[A,0],[0,D]] pairs through the automorphism test
    for spec in (EXAMPLE2_SPEC, DIM_U3_SPEC):
        op = build_operation(spec)
        count = 0
        gl3 = list(enumerate_gl(3))
        for a in gl3:
            for dm in gl3:
                rows = tuple((a.rows[k] << 3) for k in range(3)) + dm.rows
                if is_member(op, BitMatrix(6, rows)):
                    count += 1
        assert count * 512 == count_s_minus_3(op)


def test_s_minus_3_soundness_and_b_freedom():
    op = build_operation(EXAMPLE2_SPEC)
    it = enumerate_s_minus_3(op)
    seen = set()
    for _ in range(2048):
        le = next(it)
        assert is_member(op, le)
        seen.add(le.matrix.rows)
    assert len(seen) == 2048


def test_s_minus_3_rejects_paper_counterexample():
    # the invertible A with no compatible D: rows (110, 111, 010)
    op = build_operation(EXAMPLE2_SPEC)
    from altdiff.homega import _compat_rhs, _s_minus_3_pairs

    a_bad = BitMatrix.from_rows(["110", "111", "010"])
    rhs = _compat_rhs(a_bad, op.spec)
    assert rhs[(1, 2)] == 0b011  # b13 + b23
    assert rhs[(2, 3)] == 0b000  # b12 + b23
    assert all(a.rows != a_bad.rows for a, _ in _s_minus_3_pairs(op))


def test_s_minus_3_wrong_regime():
    with pytest.raises(WrongRegimeError):
        next(enumerate_s_minus_3(op4()))


# --- space fixing and conjugation ---------------------------------------------------


def test_members_fix_weak_and_error_spaces():
    op = op4()
    weak = set(range(4))
    error = {0, 1}
    for le in enumerate_single_block(op):
        rows = le.matrix.rows
        assert {vec_mul(w, rows, 4) for w in weak} == weak
        assert {vec_mul(u, rows, 4) for u in error} == error


def test_members_fix_spaces_16bit_sampled():
    par = par16()
    rng = random.Random(14)
    weak_basis = par.weak_basis
    error_basis = par.error_basis
    for seed in range(40):
        rows = sample_parallel(par, seed).matrix.rows
        for w in weak_basis:
            assert par.is_weak(vec_mul(w, rows, 16))
        # error space is spanned blockwise; images must stay inside it
        err_span = {0}
        for u in error_basis:
            err_span |= {u ^ v for v in err_span}
        for u in error_basis:
            assert vec_mul(u, rows, 16) in err_span


def test_conjugate_membership():
    op = op4()
    base_members = brute_members_gl4(op)
    ident = conjugate_membership(op, BitMatrix.identity(4))
    assert ident(BitMatrix.identity(4))
    rng = random.Random(21)
    gl = list(enumerate_gl(4))
    for g in rng.sample(gl, 20):
        pred = conjugate_membership(op, g)
        # conjugating the enumerated H gives exactly the predicate's set
        conj_set = {(g * BitMatrix(4, rows) * inverse(g)).rows for rows in base_members}
        assert all(pred(BitMatrix(4, rows)) for rows in conj_set)
        # direct filter against the conjugated operation agrees
        t_conj = op.translation_group().conjugate(g)
        direct = brute_members_gl4(t_conj)
        assert direct == conj_set
        assert len(direct) == 192


def test_conjugation_distinguishes_s_minus_3_classes():
    # 86016 != 49152, so no conjugator can link the two 6-bit examples
    assert count_s_minus_3(build_operation(DIM_U3_SPEC)) != count_s_minus_3(
        build_operation(EXAMPLE2_SPEC)
    )


# --- batch invertibility helpers ----------------------------------------------------


def test_batch_invertible_mask_matches_rank():
    from altdiff.gf2 import is_invertible

    rng = np.random.default_rng(3)
    rows = rng.integers(0, 256, size=(500, 8), dtype=np.uint8)
    mask = batch_invertible_mask(rows, 8)
    for k in range(500):
        m = BitMatrix.from_rows([int(v) for v in rows[k]], 8)
        assert mask[k] == is_invertible(m)


def test_random_invertible_rows():
    rows = random_invertible_rows(8, 1000, seed=5)
    assert rows.shape == (1000, 8)
    assert batch_invertible_mask(rows, 8).all()

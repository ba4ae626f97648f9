import random
from collections import Counter

import numpy as np
import pytest

from altdiff.altop import (
    all_translation_groups_n4,
    build_operation,
    canonical_spec_4bit,
)
from altdiff.ddt import Sbox, compose, ddt_circ, ddt_plus, table_from_matrix
from altdiff.gf2 import enumerate_gl, inverse
from altdiff.homega import WrongRegimeError, batch_is_member
from altdiff.sboxclass import (
    AES_SBOX_HEX,
    GAMMA,
    OPTIMAL_CLASSES,
    SBOX_CORPUS,
    TABLE2_PRINTED,
    UNIFORMITY_COLUMNS,
    batch_circ_uniformity_4bit,
    campaign_8bit,
    campaign_random_ops,
    candidate_tables,
    circ_table_from_spec,
    circ_uniformity,
    classify_optimal_4bit,
    conjugate_tables,
    coset_rep_pairs,
)


def op4(b=0b01):
    return build_operation(canonical_spec_4bit(b))


# --- embedded corpus ------------------------------------------------------------


def test_optimal_class_table_shape():
    prefix = (0, 1, 2, 0xD, 4, 7, 0xF, 6, 8)
    for g in OPTIMAL_CLASSES:
        assert g.table[:9] == prefix
        assert ddt_plus(g).uniformity == 4


def test_gamma_is_in_g0_class_profile():
    assert ddt_plus(GAMMA).uniformity == 4
    assert ddt_circ(GAMMA, op4()).uniformity == 16


def test_aes_table_matches_algebraic_derivation():
    # oracle: field inversion mod x^8+x^4+x^3+x+1 plus the affine map
    def gmul(a, b):
        p = 0
        for _ in range(8):
            if b & 1:
                p ^= a
            hi = a & 0x80
            a = (a << 1) & 0xFF
            if hi:
                a ^= 0x1B
            b >>= 1
        return p

    inv = [0] * 256
    for x in range(1, 256):
        y = 1
        while gmul(x, y) != 1:
            y += 1
        inv[x] = y

    def affine(v):
        out = 0
        for i in range(8):
            bit = (
                (v >> i)
                ^ (v >> ((i + 4) % 8))
                ^ (v >> ((i + 5) % 8))
                ^ (v >> ((i + 6) % 8))
                ^ (v >> ((i + 7) % 8))
                ^ (0x63 >> i)
            ) & 1
            out |= bit << i
        return out

    derived = tuple(affine(inv[x]) for x in range(256))
    assert SBOX_CORPUS["aes"].table == derived
    assert Sbox.from_hex(AES_SBOX_HEX, 8).table == derived


def test_corpus_classical_uniformities():
    assert ddt_plus(SBOX_CORPUS["aes"]).uniformity == 4
    assert ddt_plus(SBOX_CORPUS["camellia"]).uniformity == 4
    assert ddt_plus(SBOX_CORPUS["kuznyechik"]).uniformity == 8


# --- kernels ----------------------------------------------------------------------


def test_circ_uniformity_matches_ddt_circ():
    rng = random.Random(6)
    op = op4()
    circ = np.asarray(op.circ_table)
    for _ in range(20):
        t = list(range(16))
        rng.shuffle(t)
        assert circ_uniformity(t, circ) == ddt_circ(Sbox(4, tuple(t)), op).uniformity


def test_batch_kernel_matches_scalar():
    rng = random.Random(8)
    op = op4()
    circ = np.asarray(op.circ_table)
    tabs = []
    for _ in range(50):
        t = list(range(16))
        rng.shuffle(t)
        tabs.append(t)
    arr = np.array(tabs, dtype=np.uint8)
    batch = batch_circ_uniformity_4bit(arr, circ)
    for k, t in enumerate(tabs):
        assert int(batch[k]) == circ_uniformity(t, circ)


def test_circ_table_from_spec_matches_operation():
    for spec in (canonical_spec_4bit(0b11),):
        assert (circ_table_from_spec(spec) == np.asarray(build_operation(spec).circ_table)).all()


# --- 4-bit classification ----------------------------------------------------------


def test_coset_rep_pairs_cardinality():
    g2, g1 = coset_rep_pairs(canonical_spec_4bit())
    assert len(g2) == 105 and len(g1) == 105


def test_candidates_are_bijective_and_delta4():
    cands = candidate_tables(canonical_spec_4bit(), 5)
    assert cands.shape == (11025, 16)
    rng = random.Random(3)
    for k in rng.sample(range(11025), 40):
        t = Sbox(4, tuple(int(v) for v in cands[k]))
        assert ddt_plus(t).uniformity == 4  # affine equivalence preserves delta


def test_classify_g0_includes_16():
    rec = classify_optimal_4bit(op4(), 0)
    assert 16 in rec.histogram
    assert rec.histogram.get(2, 0) == 0 and rec.histogram.get(14, 0) == 0
    assert sum(rec.histogram.values()) == 11025


def test_classify_g3_max_10():
    rec = classify_optimal_4bit(op4(), 3)
    assert rec.max_uniformity == 10


def test_classify_wrong_regime():
    from altdiff.altop import ThetaSpec

    op6 = build_operation(ThetaSpec.make(6, 3, {(1, 2): "100", (1, 3): "010", (2, 3): "001"}))
    with pytest.raises(WrongRegimeError):
        classify_optimal_4bit(op6, 0)


def test_conjugation_direction_pin():
    # direct uniformity under a conjugated operation == canonical uniformity
    # of the conjugated table g^{-1} f g
    rng = random.Random(17)
    gl = list(enumerate_gl(4))
    base = op4()
    circ = np.asarray(base.circ_table)
    for g in rng.sample(gl, 5):
        t_conj = base.translation_group().conjugate(g)
        pg = np.array(table_from_matrix(g), dtype=np.uint8)
        pginv = np.array(table_from_matrix(inverse(g)), dtype=np.uint8)
        for _ in range(4):
            t = list(range(16))
            rng.shuffle(t)
            f = np.array([t], dtype=np.uint8)
            direct = ddt_circ(Sbox(4, tuple(t)), t_conj).uniformity
            via_conj = int(batch_circ_uniformity_4bit(conjugate_tables(f, pg, pginv), circ)[0])
            assert direct == via_conj


def test_faithful_per_op_histogram_equals_canonical():
    # re-derive coset representatives for one conjugated operation and
    # check its pair histogram equals the canonical one (coset invariance)
    from altdiff.gf2 import BitMatrix, coset_representatives

    spec = canonical_spec_4bit()
    base_rec = classify_optimal_4bit(op4(), 2)
    t_conj = all_translation_groups_n4()[7]
    gl = list(enumerate_gl(4))
    rows = np.array([g.rows for g in gl], dtype=np.uint8)
    members = {gl[k].rows for k in np.nonzero(batch_is_member(t_conj, rows))[0]}
    assert len(members) == 192
    pred = lambda m: m.rows in members
    g2_reps = coset_representatives(gl, pred, side="right")
    g1_reps = coset_representatives(gl, pred, side="left")
    g2_tabs = np.array([table_from_matrix(m) for m in g2_reps], dtype=np.uint8)
    g1_tabs = np.array([table_from_matrix(m) for m in g1_reps], dtype=np.uint8)
    gtab = np.asarray(OPTIMAL_CLASSES[2].table, dtype=np.uint8)
    t1 = gtab[g2_tabs]
    comp = g1_tabs[np.arange(105)[None, :, None], t1[:, None, :]].reshape(-1, 16)
    unif = batch_circ_uniformity_4bit(comp, np.asarray(t_conj.circ_table))
    hist = Counter(int(u) for u in unif)
    assert dict(hist) == base_rec.histogram


# --- 8-bit campaigns ----------------------------------------------------------------


def test_campaign_d6_exact():
    expected = {
        "aes": {8: 55, 10: 8},
        "camellia": {8: 59, 10: 4},
        "kuznyechik": {10: 54, 12: 9},
    }
    for name, want in expected.items():
        hist, unis = campaign_8bit(SBOX_CORPUS[name], 6)
        assert dict(hist) == want
        assert len(unis) == 63


def test_campaign_random_ops_deterministic():
    aes = SBOX_CORPUS["aes"]
    assert campaign_random_ops(aes, 4, 0, seed=1) == Counter()
    h1 = campaign_random_ops(aes, 4, 40, seed=9)
    h2 = campaign_random_ops(aes, 4, 40, seed=9)
    assert h1 == h2
    assert sum(h1.values()) == 40


def test_campaign_random_ops_shape():
    # modal bucket 10, second 12 for the AES box at d = 4
    hist = campaign_random_ops(SBOX_CORPUS["aes"], 4, 400, seed=3)
    ranked = [u for u, _ in hist.most_common()]
    assert ranked[0] == 10 and ranked[1] == 12
    assert all(u % 2 == 0 and u >= 8 for u in hist)

import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from neon2rvv.errors import ArityMismatch, ImmediateOutOfRange, OutOfBoundsMemory, UnsupportedIntrinsic
from neon2rvv.isa_model import ElementType as E
from neon2rvv.neon_oracle import (
    FAMILIES,
    NeonIntrinsicId,
    by_name,
    catalog,
    eval_neon,
    lookup_name,
    reverse_bits_naive,
)
from neon2rvv.values import CANONICAL_NAN, VectorValue, float_to_bits

NAME_RE = re.compile(r"v[a-z0-9]+?q?(_n|_lane)?_[suf](8|16|32|64)|v(get_high|get_low|combine)_[suf](8|16|32|64)")


def vec(elem, *xs):
    return VectorValue.from_ints(elem, xs)


def fvec(elem, *xs):
    return VectorValue.from_floats(elem, xs)


def test_catalog_names_unique_and_well_formed():
    names = [i.name for i in catalog()]
    assert len(names) == len(set(names))
    assert all(NAME_RE.fullmatch(n) for n in names)
    assert {"vaddq_s32", "vceqq_s32", "vget_high_s32", "vrbitq_u8", "vst1q_s32", "vld1q_s32"} <= set(names)


def test_catalog_size_matches_family_table():
    expected = sum(len(f.elems) * len(f.q_forms) for f in FAMILIES.values())
    assert len(catalog()) == expected


def test_lookup():
    assert lookup_name("vaddq_s32") == NeonIntrinsicId("add", True, E.I32)
    assert lookup_name("vfoo_s32") is None
    with pytest.raises(UnsupportedIntrinsic):
        by_name("vqaddq_s32")
    with pytest.raises(UnsupportedIntrinsic):
        NeonIntrinsicId("rbit", True, E.U32)


def test_ceq_all_ones_or_zero():
    r = eval_neon(by_name("vceqq_s32"), [vec(E.I32, 1, 2, 3, 4), vec(E.I32, 1, 0, 3, 0)])
    assert r.elem is E.U32
    assert r.bits == (0xFFFFFFFF, 0, 0xFFFFFFFF, 0)


def test_signed_vs_unsigned_compare():
    a, b = vec(E.I8, -1, 1, 0, 0, 0, 0, 0, 0), vec(E.I8, 1, -1, 0, 0, 0, 0, 0, 0)
    assert eval_neon(by_name("vcgt_s8"), [a, b]).bits[:2] == (0, 0xFF)
    ua, ub = a.reinterpret(E.U8), b.reinterpret(E.U8)
    assert eval_neon(by_name("vcgt_u8"), [ua, ub]).bits[:2] == (0xFF, 0)


def test_add_wraps():
    r = eval_neon(by_name("vaddq_s32"), [vec(E.I32, 0x7FFFFFFF, 0, 0, 0), vec(E.I32, 1, 0, 0, 0)])
    assert r.signed()[0] == -(2 ** 31)


def test_shr_by_full_width():
    a = vec(E.I32, -8, 8, 0, -1)
    assert eval_neon(by_name("vshrq_n_s32"), [a, 32]).signed() == [-1, 0, 0, -1]
    assert eval_neon(by_name("vshrq_n_u32"), [a.reinterpret(E.U32), 32]).bits == (0, 0, 0, 0)
    assert eval_neon(by_name("vshrq_n_s32"), [a, 2]).signed() == [-2, 2, 0, -1]


def test_shift_immediate_ranges():
    a = vec(E.U16, 1, 2, 3, 4)
    with pytest.raises(ImmediateOutOfRange):
        eval_neon(by_name("vshl_n_u16"), [a, 16])
    with pytest.raises(ImmediateOutOfRange):
        eval_neon(by_name("vshr_n_u16"), [a, 0])


@pytest.mark.parametrize("x,want", [(0x01, 0x80), (0xF0, 0x0F), (0b10110000, 0b00001101), (0xFF, 0xFF), (0, 0)])
def test_rbit_known_bytes(x, want):
    assert reverse_bits_naive(x, 8) == want
    r = eval_neon(by_name("vrbit_u8"), [vec(E.U8, *([x] * 8))])
    assert r.bits == (want,) * 8


def test_lane_moves():
    v = vec(E.I32, 10, 11, 12, 13)
    assert eval_neon(by_name("vgetq_lane_s32"), [v, 2]) == 12
    assert eval_neon(by_name("vsetq_lane_s32"), [99, v, 1]).bits == (10, 99, 12, 13)
    assert eval_neon(by_name("vget_high_s32"), [v]).bits == (12, 13)
    assert eval_neon(by_name("vget_low_s32"), [v]).bits == (10, 11)
    lo, hi = vec(E.I32, 1, 2), vec(E.I32, 3, 4)
    assert eval_neon(by_name("vcombine_s32"), [lo, hi]).bits == (1, 2, 3, 4)
    with pytest.raises(ImmediateOutOfRange):
        eval_neon(by_name("vgetq_lane_s32"), [v, 4])


def test_dup_is_bit_pattern_splat():
    nan_payload = 0x7FC00123
    r = eval_neon(by_name("vdupq_n_f32"), [nan_payload])
    assert r.bits == (nan_payload,) * 4


def test_load_store_little_endian():
    mem = bytearray(range(32))
    r = eval_neon(by_name("vld1q_u16"), [4], mem)
    assert r.bits[0] == 0x0504
    eval_neon(by_name("vst1q_s32"), [8, vec(E.I32, -1, 0, 0, 0)], mem)
    assert mem[8:12] == b"\xff\xff\xff\xff" and mem[12:24] == bytes(12) and mem[24] == 24
    with pytest.raises(OutOfBoundsMemory):
        eval_neon(by_name("vld1q_s32"), [20], mem)


def test_arity_and_type_checks():
    v = vec(E.I32, 1, 2, 3, 4)
    with pytest.raises(ArityMismatch):
        eval_neon(by_name("vaddq_s32"), [v])
    with pytest.raises(ArityMismatch):
        eval_neon(by_name("vaddq_s32"), [v, vec(E.U32, 1, 2, 3, 4)])
    with pytest.raises(ArityMismatch):
        eval_neon(by_name("vadd_s32"), [v, v])


def test_fmin_fmax_nan_and_signed_zero():
    nan = float("nan")
    a = fvec(E.F32, nan, 1.0, -0.0, 0.0)
    b = fvec(E.F32, 1.0, nan, 0.0, -0.0)
    mn = eval_neon(by_name("vminq_f32"), [a, b])
    mx = eval_neon(by_name("vmaxq_f32"), [a, b])
    assert mn.bits[:2] == (CANONICAL_NAN[32],) * 2
    assert mx.bits[:2] == (CANONICAL_NAN[32],) * 2
    assert mn.bits[2:] == (0x80000000, 0x80000000)
    assert mx.bits[2:] == (0, 0)


def test_float_compare_nan_is_false():
    a = fvec(E.F64, float("nan"), 2.0)
    assert eval_neon(by_name("vceqq_f64"), [a, a]).bits == (0, 0xFFFFFFFFFFFFFFFF)


def test_float_neg_flips_sign_only():
    a = VectorValue(E.F32, (0x7FC00001, 0))
    assert eval_neon(by_name("vneg_f32"), [a]).bits == (0xFFC00001, 0x80000000)


finite32 = st.floats(width=32, allow_nan=False, allow_infinity=False)


@given(st.lists(finite32, min_size=4, max_size=4), st.lists(finite32, min_size=4, max_size=4),
       st.sampled_from(["add", "sub", "mul"]))
def test_f32_arith_matches_numpy(xs, ys, fam):
    op = {"add": np.add, "sub": np.subtract, "mul": np.multiply}[fam]
    with np.errstate(all="ignore"):
        want = op(np.array(xs, np.float32), np.array(ys, np.float32))
    got = eval_neon(NeonIntrinsicId(fam, True, E.F32), [fvec(E.F32, *xs), fvec(E.F32, *ys)])
    want_bits = tuple(int(b) for b in want.view(np.uint32))
    assert got.canonical().bits == VectorValue(E.F32, want_bits).canonical().bits


def test_f16_is_move_only():
    assert lookup_name("vadd_f16") is None
    assert lookup_name("vdup_n_f16") is not None


@given(st.lists(st.integers(-128, 127), min_size=16, max_size=16))
def test_rbit_involution(xs):
    v = vec(E.I8, *xs)
    rb = by_name("vrbitq_s8")
    assert eval_neon(rb, [eval_neon(rb, [v])]) == v


@given(st.integers(0, 2 ** 64 - 1), st.sampled_from([8, 16, 32, 64]))
def test_reverse_bits_naive_against_string_reverse(x, w):
    x &= (1 << w) - 1
    assert reverse_bits_naive(x, w) == int(format(x, f"0{w}b")[::-1], 2)


def test_f16_scalar_bits():
    assert float_to_bits(-2.0, 16) == 0xC000

import pytest
from hypothesis import given, strategies as st

from neon2rvv.errors import (
    MalformedProgram,
    OutOfBoundsMemory,
    TypeMismatch,
    UndefinedValueRef,
    VlExceedsCapacity,
)
from neon2rvv.isa_model import ElementClass, ElementType as E, VlenConfig
from neon2rvv.rvv_machine import (
    TAIL_POISON_BYTE,
    MaskValue,
    RvvMachine,
    RvvOp,
    RvvProgram,
    concat_programs,
    exec_program,
    fallback_charge,
    tail_poison,
)
from neon2rvv.values import CANONICAL_NAN, VectorValue

S, U, F = ElementClass.SIGNED, ElementClass.UNSIGNED, ElementClass.FLOAT
CFG = VlenConfig(128)


def run(ops, inputs, cfg=CFG, memory=None):
    env, stats = exec_program(RvvProgram(ops, inputs), cfg, memory)
    return env, stats


def vec(elem, *xs):
    return VectorValue.from_ints(elem, xs)


def test_poison_pattern():
    assert tail_poison(8) == TAIL_POISON_BYTE
    assert tail_poison(32) == 0xA5A5A5A5


def test_bind_pads_to_vlmax_with_poison():
    m = RvvMachine(VlenConfig(256))
    v = m.bind(vec(E.I32, 1, 2, 3, 4))
    assert v.lanes == 8
    assert v.bits[4:] == (0xA5A5A5A5,) * 4


def test_fresh_destination_tail_is_poison():
    env, _ = run([RvvOp("vadd_vv", "r", ("a", "b"), 32, S, 2)],
                 {"a": vec(E.I32, 1, 2, 3, 4), "b": vec(E.I32, 10, 20, 30, 40)})
    assert env["r"].bits == (11, 22, 0xA5A5A5A5, 0xA5A5A5A5)


def test_tail_undisturbed_from_tail_operand():
    env, _ = run([RvvOp("vadd_vv", "r", ("a", "b"), 32, S, 2, tail="a")],
                 {"a": vec(E.I32, 1, 2, 3, 4), "b": vec(E.I32, 10, 20, 30, 40)})
    assert env["r"].bits == (11, 22, 3, 4)


def test_vl_exceeding_vlmax():
    with pytest.raises(VlExceedsCapacity):
        run([RvvOp("vmv_v_x", "r", (0,), 32, S, 5)], {})
    run([RvvOp("vmv_v_x", "r", (0,), 32, S, 8)], {}, cfg=VlenConfig(256))


def test_vl_zero_touches_nothing():
    env, stats = run([RvvOp("vadd_vv", "r", ("a", "a"), 32, S, 0, tail="a")], {"a": vec(E.I32, 1, 2, 3, 4)})
    assert env["r"].bits == (1, 2, 3, 4)
    assert stats.dynamic_op_count == 1


def test_shift_amount_uses_low_bits():
    a = vec(E.U32, 1, 2, 3, 4)
    env, _ = run([RvvOp("vsll_vx", "r", ("a", 33), 32, U, 4)], {"a": a})
    assert env["r"].bits == (2, 4, 6, 8)
    env, _ = run([RvvOp("vsrl_vx", "r", ("a", 32), 32, U, 4)], {"a": a})
    assert env["r"].bits == (1, 2, 3, 4)


def test_arithmetic_shift_is_signed():
    env, _ = run([RvvOp("vsra_vx", "r", ("a", 1), 8, S, 16)], {"a": VectorValue.splat(E.I8, 16, 0x80)})
    assert env["r"].bits == (0xC0,) * 16


def test_class_gating():
    with pytest.raises(TypeMismatch):
        run([RvvOp("vsra_vx", "r", ("a", 1), 32, U, 4)], {"a": vec(E.U32, 1, 2, 3, 4)})
    with pytest.raises(TypeMismatch):
        run([RvvOp("vadd_vv", "r", ("a", "a"), 32, S, 4)], {"a": vec(E.U32, 1, 2, 3, 4)})


def test_compare_and_merge_pattern():
    ops = [
        RvvOp("vmv_v_x", "zero", (0,), 32, U, 4),
        RvvOp("vmseq_vv", "mask", ("a", "b"), 32, S, 4),
        RvvOp("vmerge_vxm", "r", ("zero", -1, "mask"), 32, U, 4),
    ]
    env, stats = run(ops, {"a": vec(E.I32, 1, 2, 3, 4), "b": vec(E.I32, 1, 0, 3, 0)})
    assert isinstance(env["mask"], MaskValue)
    assert env["mask"].bits[:4] == (True, False, True, False)
    assert env["r"].bits == (0xFFFFFFFF, 0, 0xFFFFFFFF, 0)
    assert stats.dynamic_op_count == 3
    assert stats.by_opcode["vmseq_vv"] == 1


def test_merge_requires_mask():
    ops = [RvvOp("vmerge_vxm", "r", ("a", -1, "a"), 32, U, 4)]
    with pytest.raises(MalformedProgram):
        run(ops, {"a": vec(E.U32, 1, 2, 3, 4)})


def test_slidedown_reads_zero_past_vlmax():
    env, _ = run([RvvOp("vslidedown_vx", "r", ("a", 2), 32, S, 4)], {"a": vec(E.I32, 1, 2, 3, 4)})
    assert env["r"].bits == (3, 4, 0, 0)


def test_slideup_keeps_prefix_of_dest():
    env, _ = run([RvvOp("vslideup_vx", "r", ("lo", "hi", 2), 32, S, 4)],
                 {"lo": vec(E.I32, 1, 2, 0, 0), "hi": vec(E.I32, 3, 4, 0, 0)})
    assert env["r"].bits == (1, 2, 3, 4)


def test_store_writes_exactly_vl_elements():
    mem = bytearray([0xC3]) * 64
    env, _ = run([RvvOp("vse", None, (8, "v"), 32, S, 4)], {"v": vec(E.I32, -1, -1, -1, -1)},
                 cfg=VlenConfig(256), memory=mem)
    assert mem[8:24] == b"\xff" * 16
    assert mem[:8] == b"\xc3" * 8 and mem[24:] == b"\xc3" * 40


def test_memory_bounds():
    with pytest.raises(OutOfBoundsMemory):
        run([RvvOp("vle", "r", (60,), 32, S, 4)], {}, memory=bytearray(64))


def test_ssa_validation():
    with pytest.raises(UndefinedValueRef):
        run([RvvOp("vadd_vv", "r", ("a", "nope"), 32, S, 4)], {"a": vec(E.I32, 1, 2, 3, 4)})
    with pytest.raises(MalformedProgram):
        run([RvvOp("vmv_v_x", "r", (0,), 32, S, 4), RvvOp("vmv_v_x", "r", (1,), 32, S, 4)], {})
    with pytest.raises(MalformedProgram):
        run([RvvOp("vfrobnicate", "r", (), 32, S, 4)], {})


def test_element_zero_read_and_vid():
    env, _ = run([RvvOp("vid_v", "i", (), 32, U, 4), RvvOp("vmv_x_s", "x", ("i",), 32, U, 4)], {})
    assert env["i"].bits == (0, 1, 2, 3)
    assert env["x"] == 0


def test_float_ops_and_nan_canonicalisation():
    a = VectorValue.from_floats(E.F32, [1.5, float("inf"), 0.0, 2.0])
    b = VectorValue.from_floats(E.F32, [2.5, float("-inf"), 0.0, 3.0])
    env, _ = run([RvvOp("vfadd_vv", "r", ("a", "b"), 32, F, 4)], {"a": a, "b": b})
    assert env["r"].floats()[0] == 4.0
    assert env["r"].bits[1] == CANONICAL_NAN[32]


def test_vfmin_returns_number_operand():
    a = VectorValue(E.F32, (0x7FC00000, 0x3F800000, 0x80000000, 0))
    b = VectorValue(E.F32, (0x3F800000, 0x7FC00000, 0, 0x80000000))
    env, _ = run([RvvOp("vfmin_vv", "r", ("a", "b"), 32, F, 4)], {"a": a, "b": b})
    assert env["r"].bits == (0x3F800000, 0x3F800000, 0x80000000, 0x80000000)


def test_scalar_pseudo_op_charge():
    op = RvvOp("scalar", "r", ("a",), 32, S, 4, charge=9, call=lambda args, mem: args[0])
    env, stats = run([op], {"a": vec(E.I32, 1, 2, 3, 4)})
    assert stats.dynamic_op_count == 9
    assert env["r"].bits[:4] == (1, 2, 3, 4)


def test_trace_lines():
    lines = []
    RvvMachine(CFG, trace=lines.append).run(RvvProgram([RvvOp("vmv_v_x", "r", (7,), 16, S, 8)]))
    assert lines == ["vmv_v_x e16 vl=8"]


def test_concat_programs_and_result():
    p1 = RvvProgram([RvvOp("vmv_v_x", "x", (1,), 32, S, 4)], {}, "x", E.I32, 4)
    p2 = RvvProgram([RvvOp("vadd_vv", "y", ("x", "x"), 32, S, 4)], {}, "y", E.I32, 4)
    p = concat_programs([p1, p2])
    env, stats = exec_program(p, CFG)
    assert p.result(env).bits == (2, 2, 2, 2)
    assert stats.dynamic_op_count == 2


def test_fallback_charge_formula():
    # two spills, 8 lane reads, 4 x (1 step + 1 write), one reload
    assert fallback_charge([4, 4], 8, 4, 1, True) == 2 + 8 + 8 + 1


@given(st.lists(st.integers(0, 255), min_size=16, max_size=16), st.integers(0, 16))
def test_vl_prefix_property(xs, vl):
    # lanes < vl get the result, lanes >= vl keep the tail source
    a = VectorValue(E.U8, tuple(xs))
    env, _ = run([RvvOp("vxor_vx", "r", ("a", 0xFF), 8, U, vl, tail="a")], {"a": a})
    assert env["r"].bits[:vl] == tuple(x ^ 0xFF for x in xs[:vl])
    assert env["r"].bits[vl:] == tuple(xs[vl:])


@given(st.lists(st.integers(0, 2 ** 16 - 1), min_size=8, max_size=8), st.integers(0, 8))
def test_slidedown_property(xs, off):
    env, _ = run([RvvOp("vslidedown_vx", "r", ("a", off), 16, U, 8)], {"a": VectorValue(E.U16, tuple(xs))})
    assert env["r"].bits == tuple(xs[off:]) + (0,) * off

import pytest
from hypothesis import given, strategies as st

from neon2rvv.isa_model import (
    ElementClass,
    ElementType,
    Mapped,
    NeonVectorType,
    RvvVectorType,
    Unmapped,
    UnmappedReason,
    VlenConfig,
    all_neon_types,
    map_type,
    mapping_records,
    parse_neon_type,
)

NEON = all_neon_types()
vlens = st.sampled_from([32, 64, 128, 256, 512, 1024, 4096, 65536])


def test_twenty_two_types():
    names = [t.name for t in NEON]
    assert len(names) == 22 == len(set(names))
    assert sum(t.total_bits == 64 for t in NEON) == 11


def test_type_names_round_trip():
    for t in NEON:
        assert parse_neon_type(t.name) == t


@pytest.mark.parametrize("bad", ["int32x3_t", "int32x8_t", "poly8x8_t", "bfloat16x4_t", "int32x4", "xint32x4_t"])
def test_parse_rejects_unmodelled(bad):
    assert parse_neon_type(bad) is None


def test_neon_type_width_validated():
    with pytest.raises(ValueError):
        NeonVectorType(ElementType.I32, 3)


def test_half_and_double():
    q = parse_neon_type("int16x8_t")
    assert q.half().name == "int16x4_t"
    assert q.half().double() == q


def test_rvv_type_names():
    t = RvvVectorType(32, ElementClass.SIGNED)
    assert t.name == "vint32m1_t"
    assert t.short == "i32m1"
    assert t.fixed_name == "fixed_vint32m1_t"
    assert RvvVectorType(16, ElementClass.FLOAT).name == "vfloat16m1_t"
    with pytest.raises(ValueError):
        RvvVectorType(32, ElementClass.SIGNED, lmul=2)


@pytest.mark.parametrize("v", [0, 16, 48, 100, 131072, -64])
def test_vlen_validation(v):
    with pytest.raises(ValueError):
        VlenConfig(v)


def test_vlmax():
    assert VlenConfig(128).vlmax(32) == 4
    assert VlenConfig(256).vlmax(8) == 32


def test_int32x4_maps_to_fixed_vint32m1():
    # the typedef target of the int32x4 union member
    res = map_type(parse_neon_type("int32x4_t"), VlenConfig(128))
    assert res == Mapped(RvvVectorType(32, ElementClass.SIGNED), 128)
    assert res.rvv.fixed_name == "fixed_vint32m1_t"


@pytest.mark.parametrize("vlen,expected", [(32, 0), (64, 11), (128, 22), (256, 22)])
def test_availability_counts_with_zvfh(vlen, expected):
    assert sum(r["mapped"] for r in mapping_records(VlenConfig(vlen, zvfh=True))) == expected


def test_f16_rows_need_zvfh():
    rows = {r["neon_type"]: r for r in mapping_records(VlenConfig(128))}
    assert sum(r["mapped"] for r in rows.values()) == 20
    for name in ("float16x4_t", "float16x8_t"):
        assert rows[name]["reason"] == "missing-zvfh"
        assert rows[name]["requires_zvfh"]


def test_vlen_too_small_beats_zvfh():
    res = map_type(parse_neon_type("float16x8_t"), VlenConfig(64))
    assert res == Unmapped(UnmappedReason.VLEN_TOO_SMALL)


def test_record_schema():
    rec = mapping_records(VlenConfig(64))[0]
    assert set(rec) == {"neon_type", "vlen_min", "requires_zvfh", "rvv_type", "mapped", "reason"}


@given(vlens, st.booleans(), st.sampled_from(NEON))
def test_mapping_preserves_width_and_class(vlen, zvfh, t):
    res = map_type(t, VlenConfig(vlen, zvfh))
    if res.mapped:
        assert res.rvv.sew == t.elem.bit_width
        assert res.rvv.elem_class is t.elem.cls
        assert res.rvv.lmul == 1
        assert vlen >= t.total_bits


@given(vlens, st.booleans(), st.sampled_from(NEON))
def test_mapping_monotone_in_vlen(vlen, zvfh, t):
    if vlen < 65536 and map_type(t, VlenConfig(vlen, zvfh)).mapped:
        assert map_type(t, VlenConfig(vlen * 2, zvfh)).mapped

"""Reference lane semantics for the supported NEON intrinsics.

Every scalar crossing this API (``dup_n`` operand, ``get_lane`` result,
lane contents) is a raw bit pattern, so float moves stay bit-exact and only
the arithmetic families ever interpret a float.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

from .errors import ArityMismatch, ImmediateOutOfRange, OutOfBoundsMemory, UnsupportedIntrinsic
from .isa_model import ElementClass, ElementType, NeonVectorType
from .values import CANONICAL_NAN, VectorValue, float_from_bits, float_to_bits, is_nan_bits, to_signed

E = ElementType
INTS = (E.I8, E.I16, E.I32, E.I64, E.U8, E.U16, E.U32, E.U64)
INTS_NO64 = (E.I8, E.I16, E.I32, E.U8, E.U16, E.U32)
SIGNED = (E.I8, E.I16, E.I32, E.I64)
FLOATS = (E.F32, E.F64)
ALL = INTS + (E.F16,) + FLOATS

# Parameter / result kinds:
#   vec     the intrinsic's own vector type (64 or 128 bits per the q flag)
#   vec64   64-bit vector of the element type
#   vec128  128-bit vector of the element type
#   mask    unsigned vector of the same shape (comparison results)
#   ptr     memory address
#   scalar  one lane-sized bit pattern
#   imm     shift immediate
#   lane    lane index immediate
VECTOR_KINDS = ("vec", "vec64", "vec128", "mask")


@dataclass(frozen=True)
class Family:
    name: str
    stem: str
    tail: str
    elems: tuple[ElementType, ...]
    params: tuple[tuple[str, str], ...]
    result: str
    q_forms: tuple[bool, ...] = (False, True)
    elementwise: bool = False


def _fam(name, elems, params, result, stem=None, tail="", q_forms=(False, True), elementwise=False):
    return Family(name, stem or name, tail, tuple(elems), tuple(params), result, q_forms, elementwise)


_VV = (("a", "vec"), ("b", "vec"))
_V = (("a", "vec"),)

FAMILIES: dict[str, Family] = {f.name: f for f in [
    _fam("ld1", ALL, (("ptr", "ptr"),), "vec"),
    _fam("st1", ALL, (("ptr", "ptr"), ("val", "vec")), "void"),
    _fam("dup_n", ALL, (("x", "scalar"),), "vec", stem="dup", tail="_n"),
    _fam("get_lane", ALL, (("v", "vec"), ("lane", "lane")), "scalar", stem="get", tail="_lane"),
    _fam("set_lane", ALL, (("x", "scalar"), ("v", "vec"), ("lane", "lane")), "vec", stem="set", tail="_lane"),
    _fam("get_high", ALL, (("a", "vec128"),), "vec64", q_forms=(False,)),
    _fam("get_low", ALL, (("a", "vec128"),), "vec64", q_forms=(False,)),
    _fam("combine", ALL, (("low", "vec64"), ("high", "vec64")), "vec128", q_forms=(False,)),
    _fam("add", INTS + FLOATS, _VV, "vec", elementwise=True),
    _fam("sub", INTS + FLOATS, _VV, "vec", elementwise=True),
    _fam("mul", INTS_NO64 + FLOATS, _VV, "vec", elementwise=True),
    _fam("neg", SIGNED + FLOATS, _V, "vec", elementwise=True),
    _fam("min", INTS_NO64 + FLOATS, _VV, "vec", elementwise=True),
    _fam("max", INTS_NO64 + FLOATS, _VV, "vec", elementwise=True),
    _fam("and", INTS, _VV, "vec", elementwise=True),
    _fam("orr", INTS, _VV, "vec", elementwise=True),
    _fam("eor", INTS, _VV, "vec", elementwise=True),
    _fam("bic", INTS, _VV, "vec", elementwise=True),
    _fam("mvn", INTS_NO64, _V, "vec", elementwise=True),
    _fam("shl_n", INTS, (("a", "vec"), ("n", "imm")), "vec", stem="shl", tail="_n", elementwise=True),
    _fam("shr_n", INTS, (("a", "vec"), ("n", "imm")), "vec", stem="shr", tail="_n", elementwise=True),
    _fam("ceq", INTS + FLOATS, _VV, "mask", elementwise=True),
    _fam("cgt", INTS + FLOATS, _VV, "mask", elementwise=True),
    _fam("cge", INTS + FLOATS, _VV, "mask", elementwise=True),
    _fam("clt", INTS + FLOATS, _VV, "mask", elementwise=True),
    _fam("cle", INTS + FLOATS, _VV, "mask", elementwise=True),
    _fam("rbit", (E.I8, E.U8), _V, "vec", elementwise=True),
]}


@dataclass(frozen=True)
class NeonIntrinsicId:
    family: str
    q: bool
    elem: ElementType

    def __post_init__(self):
        fam = FAMILIES.get(self.family)
        if fam is None or self.elem not in fam.elems or self.q not in fam.q_forms:
            raise UnsupportedIntrinsic(f"no catalog entry for ({self.family}, q={self.q}, {self.elem.name})")

    @property
    def spec(self) -> Family:
        return FAMILIES[self.family]

    @property
    def name(self) -> str:
        f = self.spec
        return f"v{f.stem}{'q' if self.q else ''}{f.tail}_{self.elem.suffix}"

    def __str__(self):
        return self.name

    def type_of(self, kind: str) -> NeonVectorType | None:
        """NEON vector type for a parameter/result kind; ``None`` for non-vectors."""
        return self._types.get(kind)

    @functools.cached_property
    def _types(self) -> dict:
        return {k: _type_of(self, k) for k in VECTOR_KINDS}

    @functools.cached_property
    def lanes(self) -> int:
        """Lane count of the widest vector in the signature."""
        return max(t.lanes for t in self.signature_types())

    def signature_types(self) -> list[NeonVectorType]:
        f = self.spec
        kinds = [k for _, k in f.params] + [f.result]
        return [t for t in (self.type_of(k) for k in kinds) if t is not None]

    def result_type(self) -> NeonVectorType | None:
        return self.type_of(self.spec.result)

    def imm_range(self, kind: str) -> tuple[int, int]:
        """Inclusive legal range for an ``imm`` or ``lane`` parameter."""
        if kind == "lane":
            return 0, self.type_of("vec").lanes - 1
        if self.family == "shl_n":
            return 0, self.elem.bit_width - 1
        return 1, self.elem.bit_width


def _type_of(id: NeonIntrinsicId, kind: str) -> NeonVectorType | None:
    if kind == "vec":
        return NeonVectorType.for_width(id.elem, 128 if id.q else 64)
    if kind == "mask":
        return NeonVectorType.for_width(id.elem.with_class(ElementClass.UNSIGNED), 128 if id.q else 64)
    if kind == "vec64":
        return NeonVectorType.for_width(id.elem, 64)
    if kind == "vec128":
        return NeonVectorType.for_width(id.elem, 128)
    return None


def catalog() -> list[NeonIntrinsicId]:
    """Every supported intrinsic, in a stable order."""
    out = []
    for fam in FAMILIES.values():
        for q in fam.q_forms:
            for elem in fam.elems:
                out.append(NeonIntrinsicId(fam.name, q, elem))
    return out


_BY_NAME: dict[str, NeonIntrinsicId] = {i.name: i for i in catalog()}


def by_name(name: str) -> NeonIntrinsicId:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise UnsupportedIntrinsic(f"{name} is not in the supported catalog") from None


def lookup_name(name: str) -> NeonIntrinsicId | None:
    return _BY_NAME.get(name)


# --- lane kernels ---------------------------------------------------------

def _fbin(op):
    def kernel(a, b, elem):
        w = elem.bit_width
        return float_to_bits(op(float_from_bits(a, w), float_from_bits(b, w)), w)
    return kernel


def _fminmax(pick_min):
    def kernel(a, b, elem):
        w = elem.bit_width
        if is_nan_bits(a, w) or is_nan_bits(b, w):
            return CANONICAL_NAN[w]
        x, y = float_from_bits(a, w), float_from_bits(b, w)
        if x == y == 0.0:
            # -0 orders below +0 for FMIN/FMAX
            a_neg = math.copysign(1.0, x) < 0
            if pick_min:
                return a if a_neg else b
            return b if a_neg else a
        if pick_min:
            return a if x < y else b
        return a if x > y else b
    return kernel


def _ival(bits, elem):
    return to_signed(bits, elem.bit_width) if elem.is_signed else bits


def _imin(a, b, elem):
    return a if _ival(a, elem) <= _ival(b, elem) else b


def _imax(a, b, elem):
    return a if _ival(a, elem) >= _ival(b, elem) else b


def _fcmp(op):
    def kernel(a, b, elem):
        w = elem.bit_width
        return elem.mask if op(float_from_bits(a, w), float_from_bits(b, w)) else 0
    return kernel


def _icmp(op):
    def kernel(a, b, elem):
        return elem.mask if op(_ival(a, elem), _ival(b, elem)) else 0
    return kernel


def reverse_bits_naive(value: int, width: int) -> int:
    out = 0
    for i in range(width):
        if value >> i & 1:
            out |= 1 << (width - 1 - i)
    return out


_LT = lambda x, y: x < y
_LE = lambda x, y: x <= y
_GT = lambda x, y: x > y
_GE = lambda x, y: x >= y
_EQ = lambda x, y: x == y

_INT_BINARY: dict[str, Callable] = {
    "add": lambda a, b, e: (a + b) & e.mask,
    "sub": lambda a, b, e: (a - b) & e.mask,
    "mul": lambda a, b, e: (a * b) & e.mask,
    "and": lambda a, b, e: a & b,
    "orr": lambda a, b, e: a | b,
    "eor": lambda a, b, e: a ^ b,
    "bic": lambda a, b, e: a & ~b & e.mask,
    "min": _imin,
    "max": _imax,
    "ceq": _icmp(_EQ),
    "cgt": _icmp(_GT),
    "cge": _icmp(_GE),
    "clt": _icmp(_LT),
    "cle": _icmp(_LE),
}

_FLOAT_BINARY: dict[str, Callable] = {
    "add": _fbin(lambda x, y: x + y),
    "sub": _fbin(lambda x, y: x - y),
    "mul": _fbin(lambda x, y: x * y),
    "min": _fminmax(True),
    "max": _fminmax(False),
    "ceq": _fcmp(_EQ),
    "cgt": _fcmp(_GT),
    "cge": _fcmp(_GE),
    "clt": _fcmp(_LT),
    "cle": _fcmp(_LE),
}


def _unary(family, elem):
    w = elem.bit_width
    if family == "neg":
        if elem.is_float:
            return lambda a: a ^ (1 << (w - 1))
        return lambda a: -a & elem.mask
    if family == "mvn":
        return lambda a: ~a & elem.mask
    if family == "rbit":
        return lambda a: reverse_bits_naive(a, w)
    raise AssertionError(family)


def _shift(family, elem, n):
    if family == "shl_n":
        return lambda a: (a << n) & elem.mask
    if elem.is_signed:
        return lambda a: (to_signed(a, elem.bit_width) >> n) & elem.mask
    return lambda a: a >> n


def lane_kernel(id: NeonIntrinsicId) -> Callable:
    """Per-lane function for an elementwise intrinsic (bit patterns in, out)."""
    fam = id.family
    if fam in ("neg", "mvn", "rbit"):
        return _unary(fam, id.elem)
    table = _FLOAT_BINARY if id.elem.is_float else _INT_BINARY
    k = table[fam]
    elem = id.elem
    return lambda a, b: k(a, b, elem)


# --- evaluation -----------------------------------------------------------

def _check_vec(id, name, kind, value):
    want = id.type_of(kind)
    if not isinstance(value, VectorValue) or value.elem is not want.elem or value.lanes != want.lanes:
        raise ArityMismatch(f"{id.name}: argument {name!r} must be a {want.name} value, got {value!s}")


def _check_imm(id, name, kind, value):
    if not isinstance(value, int):
        raise ArityMismatch(f"{id.name}: argument {name!r} must be an integer immediate")
    lo, hi = id.imm_range(kind)
    if not lo <= value <= hi:
        raise ImmediateOutOfRange(f"{id.name}: {name}={value} outside [{lo}, {hi}]")


def check_args(id: NeonIntrinsicId, args) -> None:
    params = id.spec.params
    if len(args) != len(params):
        raise ArityMismatch(f"{id.name} takes {len(params)} arguments, got {len(args)}")
    for (name, kind), value in zip(params, args):
        if kind in VECTOR_KINDS:
            _check_vec(id, name, kind, value)
        elif kind in ("imm", "lane"):
            _check_imm(id, name, kind, value)
        elif kind == "scalar":
            if not isinstance(value, int) or not 0 <= value <= id.elem.mask:
                raise ArityMismatch(f"{id.name}: scalar {name!r} must be a {id.elem.bit_width}-bit pattern")
        elif kind == "ptr":
            if not isinstance(value, int) or value < 0:
                raise ArityMismatch(f"{id.name}: pointer {name!r} must be a non-negative address")


def _mem_range(memory, addr, nbytes, what):
    if memory is None:
        raise ArityMismatch(f"{what} needs a memory image")
    if addr < 0 or addr + nbytes > len(memory):
        raise OutOfBoundsMemory(f"{what}: [{addr}, {addr + nbytes}) outside memory of {len(memory)} bytes")


def eval_neon(id: NeonIntrinsicId, args, memory: bytearray | None = None):
    """Evaluate ``id`` on ``args``; returns a VectorValue, a bit pattern, or None for stores."""
    if not isinstance(id, NeonIntrinsicId):
        raise UnsupportedIntrinsic(f"{id!r} is not a catalog intrinsic")
    check_args(id, args)
    fam = id.family
    elem = id.elem

    if fam == "ld1":
        t = id.type_of("vec")
        (addr,) = args
        nbytes = t.total_bits // 8
        _mem_range(memory, addr, nbytes, id.name)
        return VectorValue.from_bytes(elem, bytes(memory[addr:addr + nbytes]))
    if fam == "st1":
        addr, val = args
        data = val.to_bytes()
        _mem_range(memory, addr, len(data), id.name)
        memory[addr:addr + len(data)] = data
        return None
    if fam == "dup_n":
        return VectorValue.splat(elem, id.type_of("vec").lanes, args[0])
    if fam == "get_lane":
        v, lane = args
        return v.bits[lane]
    if fam == "set_lane":
        x, v, lane = args
        bits = list(v.bits)
        bits[lane] = x
        return VectorValue(elem, tuple(bits))
    if fam == "get_high":
        (a,) = args
        return a.slice(a.lanes // 2, a.lanes)
    if fam == "get_low":
        (a,) = args
        return a.slice(0, a.lanes // 2)
    if fam == "combine":
        lo, hi = args
        return VectorValue(elem, lo.bits + hi.bits)

    out_elem = id.type_of(id.spec.result).elem
    if fam in ("shl_n", "shr_n"):
        a, n = args
        k = _shift(fam, elem, n)
        return VectorValue(out_elem, tuple(k(x) for x in a.bits))
    k = lane_kernel(id)
    if len(args) == 1:
        return VectorValue(out_elem, tuple(k(x) for x in args[0].bits))
    a, b = args
    return VectorValue(out_elem, tuple(k(x, y) for x, y in zip(a.bits, b.bits)))

"""Mapping database: how each catalog intrinsic is realised with RVV intrinsics.

Recipes are rows of op templates. A template operand is one of:

* a parameter or earlier destination name,
* an ``int`` immediate (``-1`` means all ones at the op's SEW),
* ``"$half"``, half the intrinsic's lane count,
* ``"<param>-<k>"``, an immediate parameter minus a constant.

A template's ``vl`` is ``"full"`` (the widest NEON vector in the signature)
or ``"half"``.
"""

from __future__ import annotations

import enum
import functools
import re
from dataclasses import dataclass

from . import neon_oracle
from .errors import ArityMismatch, BindingMismatch, ImmediateOutOfRange, UnknownIntrinsic, UnsupportedWidth
from .isa_model import ElementClass, VlenConfig, map_type
from .neon_oracle import NeonIntrinsicId, VECTOR_KINDS
from .rvv_machine import RvvOp, RvvProgram, fallback_charge
from .values import VectorValue

S, U, F = ElementClass.SIGNED, ElementClass.UNSIGNED, ElementClass.FLOAT


class Tier(str, enum.Enum):
    DIRECT = "direct"
    COMPOSITE = "composite"
    FALLBACK = "fallback"
    UNSUPPORTED = "unsupported"

    @property
    def customized(self) -> bool:
        return self in (Tier.DIRECT, Tier.COMPOSITE)


@dataclass(frozen=True)
class OpTemplate:
    opcode: str
    dest: str | None
    operands: tuple = ()
    cls: ElementClass | None = None
    vl: str = "full"


def T(opcode, dest, *operands, cls=None, vl="full"):
    return OpTemplate(opcode, dest, tuple(operands), cls, vl)


def rbit_recipe(elem_bits: int = 8, signed: bool = False) -> tuple[OpTemplate, ...]:
    """Masked shift/or cascade that reverses the bits of every 8-bit lane.

    Stage k swaps adjacent k-bit groups:
    ``v = ((v >> k) & m_k) | ((v & m_k) << k)``.
    Signed lanes shift arithmetically; the mask clears every copied sign bit,
    so the outcome matches a logical shift.
    """
    if elem_bits != 8:
        raise UnsupportedWidth(f"rbit is defined on 8-bit lanes, not {elem_bits}")
    shr = "vsra_vx" if signed else "vsrl_vx"
    ops = []
    src = "a"
    for k, m in ((1, 0x55), (2, 0x33), (4, 0x0F)):
        out = "r" if k == 4 else f"s{k}"
        ops += [
            T(shr, f"hi{k}", src, k),
            T("vand_vx", f"hm{k}", f"hi{k}", m),
            T("vand_vx", f"lm{k}", src, m),
            T("vsll_vx", f"lo{k}", f"lm{k}", k),
            T("vor_vv", out, f"hm{k}", f"lo{k}"),
        ]
        src = out
    return tuple(ops)


def _cmp(int_op, uint_op, float_op):
    def body(opcode):
        return (
            T("vmv_v_x", "zero", 0, cls=U),
            T(opcode, "mask", "a", "b"),
            T("vmerge_vxm", "r", "zero", -1, "mask", cls=U),
        )
    return {S: body(int_op), U: body(uint_op), F: body(float_op)}


def _fminmax(opcode):
    # the bare RVV op returns the non-NaN operand; NEON propagates NaN
    return (
        T(opcode, "t", "a", "b"),
        T("vmfeq_vv", "a_ok", "a", "a"),
        T("vmerge_vvm", "t1", "a", "t", "a_ok"),
        T("vmfeq_vv", "b_ok", "b", "b"),
        T("vmerge_vvm", "r", "b", "t1", "b_ok"),
    )


def _same(*ops):
    return {S: ops, U: ops, F: ops}


def _ints(*ops):
    return {S: ops, U: ops}


# family -> {element class -> op templates}
TEMPLATES: dict[str, dict] = {
    "ld1": _same(T("vle", "r", "ptr")),
    "st1": _same(T("vse", None, "ptr", "val")),
    "dup_n": _same(T("vmv_v_x", "r", "x")),
    "get_lane": _same(T("vslidedown_vx", "t", "v", "lane"), T("vmv_x_s", "r", "t")),
    "set_lane": _same(
        T("vid_v", "idx", cls=U),
        T("vmseq_vx", "sel", "idx", "lane", cls=U),
        T("vmerge_vxm", "r", "v", "x", "sel"),
    ),
    "get_high": _same(T("vslidedown_vx", "r", "a", "$half")),
    "get_low": _same(T("vmv_v_v", "r", "a", vl="half")),
    "combine": _same(T("vslideup_vx", "r", "low", "high", "$half")),
    "add": {S: (T("vadd_vv", "r", "a", "b"),), U: (T("vadd_vv", "r", "a", "b"),), F: (T("vfadd_vv", "r", "a", "b"),)},
    "sub": {S: (T("vsub_vv", "r", "a", "b"),), U: (T("vsub_vv", "r", "a", "b"),), F: (T("vfsub_vv", "r", "a", "b"),)},
    "mul": {S: (T("vmul_vv", "r", "a", "b"),), U: (T("vmul_vv", "r", "a", "b"),), F: (T("vfmul_vv", "r", "a", "b"),)},
    "neg": {S: (T("vneg", "r", "a"),), F: (T("vfneg", "r", "a"),)},
    "min": {S: (T("vmin_vv", "r", "a", "b"),), U: (T("vminu_vv", "r", "a", "b"),), F: _fminmax("vfmin_vv")},
    "max": {S: (T("vmax_vv", "r", "a", "b"),), U: (T("vmaxu_vv", "r", "a", "b"),), F: _fminmax("vfmax_vv")},
    "and": _ints(T("vand_vv", "r", "a", "b")),
    "orr": _ints(T("vor_vv", "r", "a", "b")),
    "eor": _ints(T("vxor_vv", "r", "a", "b")),
    "mvn": _ints(T("vnot", "r", "a")),
    "bic": _ints(T("vnot", "nb", "b"), T("vand_vv", "r", "a", "nb")),
    "shl_n": _ints(T("vsll_vx", "r", "a", "n")),
    # RVV shifts use only log2(SEW) bits of the amount, so a shift by the full
    # lane width (legal for NEON shr_n) is split into two steps.
    "shr_n": {
        S: (T("vsra_vx", "t", "a", "n-1"), T("vsra_vx", "r", "t", 1)),
        U: (T("vsrl_vx", "t", "a", "n-1"), T("vsrl_vx", "r", "t", 1)),
    },
    "ceq": _cmp("vmseq_vv", "vmseq_vv", "vmfeq_vv"),
    "cgt": _cmp("vmsgt_vv", "vmsgtu_vv", "vmfgt_vv"),
    "cge": _cmp("vmsge_vv", "vmsgeu_vv", "vmfge_vv"),
    "clt": _cmp("vmslt_vv", "vmsltu_vv", "vmflt_vv"),
    "cle": _cmp("vmsle_vv", "vmsleu_vv", "vmfle_vv"),
    "rbit": {S: rbit_recipe(8, signed=True), U: rbit_recipe(8)},
}

# Per-lane arithmetic steps charged to the scalar fallback path.
FALLBACK_STEPS = {
    "add": 1, "sub": 1, "mul": 1, "neg": 1, "and": 1, "orr": 1, "eor": 1, "mvn": 1,
    "shl_n": 1, "shr_n": 1, "bic": 2, "min": 2, "max": 2,
    "ceq": 2, "cgt": 2, "cge": 2, "clt": 2, "cle": 2,
    "rbit": 15,  # three swap stages of five ops each
}
FLOAT_MINMAX_STEPS = 4  # two NaN tests, compare, select

# Annotation only: intrinsics whose simple arithmetic form is best left to
# vector-attribute code generation rather than hand-written intrinsics.
VECTOR_ATTRIBUTE_FAMILIES = {"add", "sub", "mul", "neg", "and", "orr", "eor", "mvn", "shl_n", "shr_n"}

# Intrinsics declared to have no realisation (see mark_unsupported).
_UNSUPPORTED: dict[NeonIntrinsicId, str] = {}


@dataclass(frozen=True)
class Recipe:
    intrinsic: NeonIntrinsicId
    tier: Tier
    ops: tuple[OpTemplate, ...] = ()
    min_vlen_bits: int = 64
    requires_zvfh: bool = False
    conversion_method: str = "isa-intrinsic"
    reason: str | None = None

    @property
    def opcodes(self) -> list[str]:
        return [t.opcode for t in self.ops]

    def to_record(self) -> dict:
        return {
            "neon_name": self.intrinsic.name,
            "tier": self.tier.value,
            "min_vlen": self.min_vlen_bits,
            "requires_zvfh": self.requires_zvfh,
            "rvv_opcodes": self.opcodes,
            "conversion_method": self.conversion_method,
            "reason": self.reason,
        }


def _resolve(id) -> NeonIntrinsicId:
    if isinstance(id, NeonIntrinsicId):
        return id
    found = neon_oracle.lookup_name(str(id))
    if found is None:
        raise UnknownIntrinsic(f"{id} is not in the recipe database")
    return found


def _requirements(id: NeonIntrinsicId) -> tuple[int, bool]:
    types = id.signature_types()
    return max(t.total_bits for t in types), any(t.elem.name == "F16" for t in types)


def customized_recipe(id: NeonIntrinsicId) -> Recipe:
    row = TEMPLATES[id.family]
    ops = row.get(id.elem.cls)
    if ops is None:
        raise UnknownIntrinsic(f"no customized recipe row for {id.name}")
    min_vlen, zvfh = _requirements(id)
    tier = Tier.DIRECT if len(ops) == 1 else Tier.COMPOSITE
    conversion_method = "vector-attribute" if id.family in VECTOR_ATTRIBUTE_FAMILIES and tier is Tier.DIRECT else "isa-intrinsic"
    return Recipe(id, tier, ops, min_vlen, zvfh, conversion_method)


def fallback_recipe(id: NeonIntrinsicId, reason: str | None = None) -> Recipe:
    min_vlen, zvfh = _requirements(id)
    return Recipe(id, Tier.FALLBACK, (), min_vlen, zvfh, "scalar-loop", reason)


def lookup(id, cfg: VlenConfig) -> Recipe:
    """The recipe for ``id`` under ``cfg``.

    Customized when every vector type in the signature maps to an RVV type,
    the scalar fallback otherwise.
    """
    id = _resolve(id)
    if id in _UNSUPPORTED:
        min_vlen, zvfh = _requirements(id)
        return Recipe(id, Tier.UNSUPPORTED, (), min_vlen, zvfh, "none", _UNSUPPORTED[id])
    for t in id.signature_types():
        res = map_type(t, cfg)
        if not res.mapped:
            return fallback_recipe(id, f"{t.name}: {res.reason.value}")
    return customized_recipe(id)


def mark_unsupported(id, reason: str) -> None:
    """Record that ``id`` has no realisation at all (extension hook)."""
    _UNSUPPORTED[_resolve(id)] = reason


def clear_unsupported(id) -> None:
    _UNSUPPORTED.pop(_resolve(id), None)


def all_recipes(cfg: VlenConfig) -> list[Recipe]:
    return [lookup(i, cfg) for i in neon_oracle.catalog()]


# --- fallback cost ----------------------------------------------------------

@functools.lru_cache(maxsize=None)
def fallback_cost(id: NeonIntrinsicId) -> int:
    fam = id.family
    params = id.spec.params
    vec_in = [id.type_of(k).lanes for _, k in params if k in VECTOR_KINDS]
    result = id.result_type()
    out_lanes = result.lanes if result is not None else 0
    returns_vector = result is not None
    if fam == "ld1":
        return fallback_charge([], 0, out_lanes, 0, True, mem_lanes=out_lanes)
    if fam == "st1":
        lanes = vec_in[0]
        return fallback_charge(vec_in, lanes, 0, 0, False, mem_lanes=lanes)
    if fam == "get_lane":
        return fallback_charge(vec_in, 1, 0, 0, False)
    if fam == "set_lane":
        return fallback_charge(vec_in, sum(vec_in), out_lanes, 0, True) + 1
    if fam in ("dup_n", "get_high", "get_low", "combine"):
        return fallback_charge(vec_in, out_lanes, out_lanes, 0, True)
    steps = FALLBACK_STEPS[fam]
    if fam in ("min", "max") and id.elem.is_float:
        steps = FLOAT_MINMAX_STEPS
    return fallback_charge(vec_in, sum(vec_in), out_lanes, steps, returns_vector)


# --- instantiation ----------------------------------------------------------

_IMM_EXPR = re.compile(r"([A-Za-z_]\w*)-(\d+)")


def _operand(tok, args: dict, lanes: int):
    if isinstance(tok, int):
        return tok
    if tok == "$half":
        return lanes // 2
    m = _IMM_EXPR.fullmatch(tok)
    if m:
        base = args[m.group(1)]
        if not isinstance(base, int):
            raise BindingMismatch(f"{tok}: {m.group(1)} must be an immediate")
        return base - int(m.group(2))
    return args.get(tok, tok)


def _fallback_call(id: NeonIntrinsicId):
    kinds = [k for _, k in id.spec.params]
    lane_counts = [id.type_of(k).lanes if k in VECTOR_KINDS else None for k in kinds]

    def call(args, memory):
        trimmed = [a.slice(0, n) if n is not None and isinstance(a, VectorValue) else a
                   for a, n in zip(args, lane_counts)]
        return neon_oracle.eval_neon(id, trimmed, memory)
    return call


def expand(recipe: Recipe, args: dict, prefix: str = "") -> tuple[list[RvvOp], str | None]:
    ops, out = _expand(recipe, tuple(sorted(args.items())), prefix)
    return list(ops), out


@functools.lru_cache(maxsize=8192)
def _expand(recipe: Recipe, arg_items: tuple, prefix: str) -> tuple[tuple[RvvOp, ...], str | None]:
    """Turn ``recipe`` into concrete ops.

    ``args`` maps each parameter to a value name or an immediate. Template
    temporaries are renamed with ``prefix``. Returns the ops and the name of
    the result value (``None`` for stores).
    """
    args = dict(arg_items)
    id = recipe.intrinsic
    if recipe.tier is Tier.UNSUPPORTED:
        raise BindingMismatch(f"{id.name} has no realisation: {recipe.reason}")
    params = [p for p, _ in id.spec.params]
    if set(args) != set(params):
        raise BindingMismatch(f"{id.name} expects arguments {params}, got {sorted(args)}")
    lanes = id.lanes
    sew = id.elem.bit_width
    result = id.result_type()

    if recipe.tier is Tier.FALLBACK:
        dest = f"{prefix}r" if id.spec.result != "void" else None
        op = RvvOp("scalar", dest, tuple(args[p] for p in params), sew, id.elem.cls, lanes,
                   charge=fallback_cost(id), call=_fallback_call(id))
        return (op,), dest

    names = dict(args)
    ops = []
    out = None
    for t in recipe.ops:
        operands = tuple(_operand(o, names, lanes) for o in t.operands)
        dest = None
        if t.dest is not None:
            dest = f"{prefix}{t.dest}"
            names[t.dest] = dest
            out = dest
        vl = lanes if t.vl == "full" else lanes // 2
        ops.append(RvvOp(t.opcode, dest, operands, sew, t.cls or id.elem.cls, vl))
    if id.spec.result == "void":
        out = None
    return tuple(ops), out


def instantiate(recipe: Recipe, cfg: VlenConfig, bindings: dict) -> RvvProgram:
    """Concrete program for one call of the intrinsic with bound arguments.

    Vector and scalar arguments become program inputs. Immediates are folded
    into the ops.
    """
    id = recipe.intrinsic
    params = id.spec.params
    if set(bindings) != {p for p, _ in params}:
        raise BindingMismatch(f"{id.name} expects bindings {[p for p, _ in params]}, got {sorted(bindings)}")
    try:
        neon_oracle.check_args(id, [bindings[p] for p, _ in params])
    except (ArityMismatch, ImmediateOutOfRange) as exc:
        raise BindingMismatch(str(exc)) from exc
    args, inputs = {}, {}
    for p, kind in params:
        if kind in ("imm", "lane"):
            args[p] = bindings[p]
        else:
            args[p] = p
            inputs[p] = bindings[p]
    ops, out = expand(recipe, args)
    result = id.result_type()
    return RvvProgram(ops, inputs, out,
                      result.elem if result is not None else None,
                      result.lanes if result is not None else 0)


def op_count(recipe: Recipe) -> int:
    """Dynamic op count of one execution (straight-line, so static)."""
    if recipe.tier is Tier.FALLBACK:
        return fallback_cost(recipe.intrinsic)
    return len(recipe.ops)

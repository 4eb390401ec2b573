"""Abstract interpreter for the RVV intrinsic subset emitted by recipes.

Values are SSA bindings rather than architectural registers. A vector value
holds VLMAX = vlen/SEW lanes (LMUL=1). Each op carries its own vl, as RVV
intrinsics do. Lanes at positions >= vl keep the prior destination contents
(tail-undisturbed). The prior contents come from the op's ``tail`` operand,
or from ``vd`` for ops that read it (merge, slideup). A fresh destination
starts out filled with ``TAIL_POISON``.

Float arithmetic goes through numpy. The NEON oracle uses ``struct``
instead, so the two sides of a differential run share no float code.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import (
    MalformedProgram,
    OutOfBoundsMemory,
    TypeMismatch,
    UndefinedValueRef,
    VlExceedsCapacity,
)
from .isa_model import ElementClass, ElementType, RvvVectorType, VlenConfig
from .values import CANONICAL_NAN, VectorValue, to_signed

SIGNED, UNSIGNED, FLOAT = ElementClass.SIGNED, ElementClass.UNSIGNED, ElementClass.FLOAT

TAIL_POISON_BYTE = 0xA5


def tail_poison(sew: int) -> int:
    return int.from_bytes(bytes([TAIL_POISON_BYTE]) * (sew // 8), "little")


@dataclass(frozen=True)
class MaskValue:
    bits: tuple[bool, ...]

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class RvvOp:
    """One intrinsic-level operation.

    ``operands`` entries are value names (str) or immediates (int). For the
    ``scalar`` pseudo-op, ``call`` receives the operand values plus the
    memory image and ``charge`` is added to the dynamic op count instead of 1.
    """

    opcode: str
    dest: str | None
    operands: tuple = ()
    sew: int = 32
    elem_class: ElementClass = SIGNED
    vl: int = 0
    tail: str | None = None
    charge: int = 1
    call: Callable | None = field(default=None, compare=False)

    @property
    def rvv_type(self) -> RvvVectorType:
        return RvvVectorType(self.sew, self.elem_class)

    def __str__(self):
        ops = ", ".join(str(o) for o in self.operands)
        lhs = f"{self.dest} = " if self.dest else ""
        return f"{lhs}{self.opcode}.{self.rvv_type.short}({ops}; vl={self.vl})"


@dataclass
class RvvProgram:
    ops: list[RvvOp]
    inputs: dict = field(default_factory=dict)
    output: str | None = None
    result_elem: ElementType | None = None
    result_lanes: int = 0

    def opcodes(self) -> list[str]:
        return [op.opcode for op in self.ops]

    def validate(self) -> None:
        """Check SSA form: every name is defined once, and before its first use."""
        defined = set(self.inputs)
        masks = set()
        for op in self.ops:
            spec = OPCODES.get(op.opcode)
            if spec is None and op.opcode != "scalar":
                raise MalformedProgram(f"unknown opcode {op.opcode!r}")
            for o in op.operands:
                if isinstance(o, str) and o not in defined:
                    raise UndefinedValueRef(f"{op.opcode}: {o!r} used before definition")
            if op.tail is not None and op.tail not in defined:
                raise UndefinedValueRef(f"{op.opcode}: tail source {op.tail!r} undefined")
            if spec is not None and spec.mask_in is not None:
                m = op.operands[spec.mask_in]
                if m not in masks:
                    raise MalformedProgram(f"{op.opcode} needs a mask operand, got {m!r}")
            if op.dest is not None:
                if op.dest in defined:
                    raise MalformedProgram(f"{op.dest!r} defined twice")
                defined.add(op.dest)
                if spec is not None and spec.makes_mask:
                    masks.add(op.dest)
        if self.output is not None and self.output not in defined:
            raise UndefinedValueRef(f"program output {self.output!r} undefined")

    def result(self, outputs: dict):
        """Extract the NEON-visible result (first ``result_lanes`` lanes)."""
        if self.output is None:
            return None
        val = outputs[self.output]
        if isinstance(val, VectorValue):
            return VectorValue(self.result_elem, val.bits[:self.result_lanes])
        return val


@dataclass
class ExecStats:
    dynamic_op_count: int = 0
    by_opcode: collections.Counter = field(default_factory=collections.Counter)

    def __add__(self, other: "ExecStats") -> "ExecStats":
        return ExecStats(self.dynamic_op_count + other.dynamic_op_count, self.by_opcode + other.by_opcode)


# --- opcode table -----------------------------------------------------------

@dataclass(frozen=True)
class OpSpec:
    classes: frozenset
    makes_mask: bool = False
    mask_in: int | None = None
    vector_ins: tuple[int, ...] = ()


_INT = frozenset({SIGNED, UNSIGNED})
_ANY = frozenset({SIGNED, UNSIGNED, FLOAT})
_S = frozenset({SIGNED})
_U = frozenset({UNSIGNED})
_F = frozenset({FLOAT})

OPCODES: dict[str, OpSpec] = {
    "vle": OpSpec(_ANY),
    "vse": OpSpec(_ANY, vector_ins=(1,)),
    "vmv_v_x": OpSpec(_ANY),
    "vmv_v_v": OpSpec(_ANY, vector_ins=(0,)),
    "vmv_x_s": OpSpec(_ANY, vector_ins=(0,)),
    "vid_v": OpSpec(_U),
    "vadd_vv": OpSpec(_INT, vector_ins=(0, 1)),
    "vadd_vx": OpSpec(_INT, vector_ins=(0,)),
    "vsub_vv": OpSpec(_INT, vector_ins=(0, 1)),
    "vrsub_vx": OpSpec(_INT, vector_ins=(0,)),
    "vmul_vv": OpSpec(_INT, vector_ins=(0, 1)),
    "vneg": OpSpec(_S, vector_ins=(0,)),
    "vand_vv": OpSpec(_INT, vector_ins=(0, 1)),
    "vand_vx": OpSpec(_INT, vector_ins=(0,)),
    "vor_vv": OpSpec(_INT, vector_ins=(0, 1)),
    "vor_vx": OpSpec(_INT, vector_ins=(0,)),
    "vxor_vv": OpSpec(_INT, vector_ins=(0, 1)),
    "vxor_vx": OpSpec(_INT, vector_ins=(0,)),
    "vnot": OpSpec(_INT, vector_ins=(0,)),
    "vsll_vx": OpSpec(_INT, vector_ins=(0,)),
    "vsrl_vx": OpSpec(_U, vector_ins=(0,)),
    "vsra_vx": OpSpec(_S, vector_ins=(0,)),
    "vmin_vv": OpSpec(_S, vector_ins=(0, 1)),
    "vmax_vv": OpSpec(_S, vector_ins=(0, 1)),
    "vminu_vv": OpSpec(_U, vector_ins=(0, 1)),
    "vmaxu_vv": OpSpec(_U, vector_ins=(0, 1)),
    "vmseq_vv": OpSpec(_INT, makes_mask=True, vector_ins=(0, 1)),
    "vmseq_vx": OpSpec(_INT, makes_mask=True, vector_ins=(0,)),
    "vmsne_vv": OpSpec(_INT, makes_mask=True, vector_ins=(0, 1)),
    "vmsgt_vv": OpSpec(_S, makes_mask=True, vector_ins=(0, 1)),
    "vmsge_vv": OpSpec(_S, makes_mask=True, vector_ins=(0, 1)),
    "vmslt_vv": OpSpec(_S, makes_mask=True, vector_ins=(0, 1)),
    "vmsle_vv": OpSpec(_S, makes_mask=True, vector_ins=(0, 1)),
    "vmsgtu_vv": OpSpec(_U, makes_mask=True, vector_ins=(0, 1)),
    "vmsgeu_vv": OpSpec(_U, makes_mask=True, vector_ins=(0, 1)),
    "vmsltu_vv": OpSpec(_U, makes_mask=True, vector_ins=(0, 1)),
    "vmsleu_vv": OpSpec(_U, makes_mask=True, vector_ins=(0, 1)),
    "vmfeq_vv": OpSpec(_F, makes_mask=True, vector_ins=(0, 1)),
    "vmfne_vv": OpSpec(_F, makes_mask=True, vector_ins=(0, 1)),
    "vmfgt_vv": OpSpec(_F, makes_mask=True, vector_ins=(0, 1)),
    "vmfge_vv": OpSpec(_F, makes_mask=True, vector_ins=(0, 1)),
    "vmflt_vv": OpSpec(_F, makes_mask=True, vector_ins=(0, 1)),
    "vmfle_vv": OpSpec(_F, makes_mask=True, vector_ins=(0, 1)),
    "vmerge_vxm": OpSpec(_ANY, mask_in=2, vector_ins=(0,)),
    "vmerge_vvm": OpSpec(_ANY, mask_in=2, vector_ins=(0, 1)),
    "vslidedown_vx": OpSpec(_ANY, vector_ins=(0,)),
    "vslideup_vx": OpSpec(_ANY, vector_ins=(0, 1)),
    "vfadd_vv": OpSpec(_F, vector_ins=(0, 1)),
    "vfsub_vv": OpSpec(_F, vector_ins=(0, 1)),
    "vfmul_vv": OpSpec(_F, vector_ins=(0, 1)),
    "vfneg": OpSpec(_F, vector_ins=(0,)),
    "vfmin_vv": OpSpec(_F, vector_ins=(0, 1)),
    "vfmax_vv": OpSpec(_F, vector_ins=(0, 1)),
}

_NP_FLOAT = {16: (np.float16, np.uint16), 32: (np.float32, np.uint32), 64: (np.float64, np.uint64)}


def _s(bits, sew):
    return to_signed(bits, sew)


def _fbinop(fn):
    def run(a, b, sew):
        ft, ut = _NP_FLOAT[sew]
        x = np.array(a, dtype=ut).view(ft)
        y = np.array(b, dtype=ut).view(ft)
        with np.errstate(all="ignore"):
            r = fn(x, y)
        out = r.astype(ft).view(ut)
        nan = CANONICAL_NAN[sew]
        return [nan if isnan else int(v) for v, isnan in zip(out.tolist(), np.isnan(r).tolist())]
    return run


def _fminmax(is_min):
    # fmin/fmax return the non-NaN operand, as minimumNumber requires
    base = _fbinop(np.fmin if is_min else np.fmax)

    def run(a, b, sew):
        out = base(a, b, sew)
        magnitude = (1 << (sew - 1)) - 1
        for i, (p, q) in enumerate(zip(a, b)):
            if not (p | q) & magnitude:
                # both zeros: -0 orders below +0
                out[i] = (p | q) if is_min else (p & q)
        return out
    return run


def _fcmp(fn):
    def run(a, b, sew):
        ft, ut = _NP_FLOAT[sew]
        x = np.array(a, dtype=ut).view(ft)
        y = np.array(b, dtype=ut).view(ft)
        return fn(x, y).tolist()
    return run


_INT_VV = {
    "vadd_vv": lambda x, y, s: x + y,
    "vsub_vv": lambda x, y, s: x - y,
    "vmul_vv": lambda x, y, s: x * y,
    "vand_vv": lambda x, y, s: x & y,
    "vor_vv": lambda x, y, s: x | y,
    "vxor_vv": lambda x, y, s: x ^ y,
    "vmin_vv": lambda x, y, s: x if _s(x, s) <= _s(y, s) else y,
    "vmax_vv": lambda x, y, s: x if _s(x, s) >= _s(y, s) else y,
    "vminu_vv": lambda x, y, s: min(x, y),
    "vmaxu_vv": lambda x, y, s: max(x, y),
}

_INT_VX = {
    "vadd_vx": lambda x, k, s: x + k,
    "vrsub_vx": lambda x, k, s: k - x,
    "vand_vx": lambda x, k, s: x & k,
    "vor_vx": lambda x, k, s: x | k,
    "vxor_vx": lambda x, k, s: x ^ k,
    "vsll_vx": lambda x, k, s: x << (k & (s - 1)),
    "vsrl_vx": lambda x, k, s: x >> (k & (s - 1)),
    "vsra_vx": lambda x, k, s: _s(x, s) >> (k & (s - 1)),
}

_INT_CMP = {
    "vmseq_vv": lambda x, y, s: x == y,
    "vmsne_vv": lambda x, y, s: x != y,
    "vmsgt_vv": lambda x, y, s: _s(x, s) > _s(y, s),
    "vmsge_vv": lambda x, y, s: _s(x, s) >= _s(y, s),
    "vmslt_vv": lambda x, y, s: _s(x, s) < _s(y, s),
    "vmsle_vv": lambda x, y, s: _s(x, s) <= _s(y, s),
    "vmsgtu_vv": lambda x, y, s: x > y,
    "vmsgeu_vv": lambda x, y, s: x >= y,
    "vmsltu_vv": lambda x, y, s: x < y,
    "vmsleu_vv": lambda x, y, s: x <= y,
}

_FLOAT_VV = {
    "vfadd_vv": _fbinop(np.add),
    "vfsub_vv": _fbinop(np.subtract),
    "vfmul_vv": _fbinop(np.multiply),
    "vfmin_vv": _fminmax(True),
    "vfmax_vv": _fminmax(False),
}

_FLOAT_CMP = {
    "vmfeq_vv": _fcmp(np.equal),
    "vmfne_vv": _fcmp(np.not_equal),
    "vmfgt_vv": _fcmp(np.greater),
    "vmfge_vv": _fcmp(np.greater_equal),
    "vmflt_vv": _fcmp(np.less),
    "vmfle_vv": _fcmp(np.less_equal),
}


class RvvMachine:
    """Executes RvvPrograms against one memory image.

    An instance owns ``memory``; use one instance per concurrent caller.
    """

    def __init__(self, cfg: VlenConfig, memory: bytearray | None = None, trace: Callable[[str], None] | None = None):
        self.cfg = cfg
        self.memory = memory if memory is not None else bytearray()
        self.trace = trace

    # -- binding --

    def bind(self, value):
        """Place a program input into the machine.

        Vectors that fit one register are padded to VLMAX with tail poison;
        wider ones stay memory-resident and only scalar pseudo-ops may use them.
        """
        if isinstance(value, VectorValue):
            vlmax = self.cfg.vlmax(value.elem.bit_width)
            if value.lanes < vlmax:
                pad = tail_poison(value.elem.bit_width)
                return VectorValue(value.elem, value.bits + (pad,) * (vlmax - value.lanes))
        return value

    # -- helpers --

    def _vec(self, env, op, ref, elem):
        v = self._get(env, op, ref)
        if not isinstance(v, VectorValue):
            raise TypeMismatch(f"{op.opcode}: {ref!r} is not a vector value")
        if v.elem is not elem:
            raise TypeMismatch(f"{op.opcode}: {ref!r} is {v.elem.name}, op expects {elem.name}")
        if v.lanes != self.cfg.vlmax(op.sew):
            raise TypeMismatch(f"{op.opcode}: {ref!r} has {v.lanes} lanes, not a register-resident value")
        return v

    def _scalar(self, env, op, ref):
        v = ref if isinstance(ref, int) else self._get(env, op, ref)
        if not isinstance(v, int):
            raise TypeMismatch(f"{op.opcode}: {ref!r} is not a scalar")
        return v

    def _mask(self, env, op, ref):
        m = self._get(env, op, ref)
        if not isinstance(m, MaskValue):
            raise TypeMismatch(f"{op.opcode}: {ref!r} is not a mask")
        if len(m) < op.vl:
            raise TypeMismatch(f"{op.opcode}: mask {ref!r} covers {len(m)} < vl={op.vl} elements")
        return m

    @staticmethod
    def _get(env, op, ref):
        try:
            return env[ref]
        except KeyError:
            raise UndefinedValueRef(f"{op.opcode}: {ref!r} is undefined") from None

    def _tail(self, env, op, elem, default_ref=None):
        ref = op.tail if op.tail is not None else default_ref
        if ref is not None:
            return list(self._vec(env, op, ref, elem).bits)
        return [tail_poison(op.sew)] * self.cfg.vlmax(op.sew)

    def _check_mem(self, op, addr, nbytes):
        if addr < 0 or addr + nbytes > len(self.memory):
            raise OutOfBoundsMemory(
                f"{op.opcode}: [{addr}, {addr + nbytes}) outside memory of {len(self.memory)} bytes")

    # -- execution --

    def run(self, program: RvvProgram) -> tuple[dict, ExecStats]:
        program.validate()
        env = {name: self.bind(v) for name, v in program.inputs.items()}
        stats = ExecStats()
        for op in program.ops:
            self.step(op, env)
            stats.dynamic_op_count += op.charge
            stats.by_opcode[op.opcode] += op.charge
            if self.trace is not None:
                self.trace(f"{op.opcode} e{op.sew} vl={op.vl}")
        return env, stats

    def step(self, op: RvvOp, env: dict) -> None:
        if op.opcode == "scalar":
            args = [self._get(env, op, o) if isinstance(o, str) else o for o in op.operands]
            result = op.call(args, self.memory)
            if op.dest is not None:
                env[op.dest] = self.bind(result)
            return

        spec = OPCODES.get(op.opcode)
        if spec is None:
            raise MalformedProgram(f"unknown opcode {op.opcode!r}")
        if op.elem_class not in spec.classes:
            raise TypeMismatch(f"{op.opcode} is not defined for {op.rvv_type.name}")
        vlmax = self.cfg.vlmax(op.sew)
        if op.vl < 0 or op.vl > vlmax:
            raise VlExceedsCapacity(
                f"{op.opcode}: vl={op.vl} x e{op.sew} exceeds vlen={self.cfg.vlen_bits}")
        elem = ElementType.of(op.sew, op.elem_class)
        result = self._execute(op, spec, env, elem, vlmax)
        if op.dest is not None:
            env[op.dest] = result

    def _execute(self, op, spec, env, elem, vlmax):
        name, vl, sew, o = op.opcode, op.vl, op.sew, op.operands
        m = elem.mask

        if name == "vse":
            addr = self._scalar(env, op, o[0])
            src = self._vec(env, op, o[1], elem)
            nbytes = vl * sew // 8
            self._check_mem(op, addr, nbytes)
            self.memory[addr:addr + nbytes] = VectorValue(elem, src.bits[:vl]).to_bytes()
            return None
        if name == "vmv_x_s":
            return self._vec(env, op, o[0], elem).bits[0]
        if spec.makes_mask:
            return MaskValue(tuple(self._compare(op, env, elem, vl)))

        if name == "vmerge_vxm" or name == "vmerge_vvm":
            out = self._tail(env, op, elem, default_ref=o[0])
        elif name == "vslideup_vx":
            out = self._tail(env, op, elem, default_ref=o[0])
        else:
            out = self._tail(env, op, elem)

        if name == "vle":
            addr = self._scalar(env, op, o[0])
            nbytes = vl * sew // 8
            self._check_mem(op, addr, nbytes)
            out[:vl] = VectorValue.from_bytes(elem, bytes(self.memory[addr:addr + nbytes])).bits
        elif name == "vmv_v_x":
            x = self._scalar(env, op, o[0]) & m
            out[:vl] = [x] * vl
        elif name == "vmv_v_v":
            out[:vl] = self._vec(env, op, o[0], elem).bits[:vl]
        elif name == "vid_v":
            out[:vl] = [i & m for i in range(vl)]
        elif name in _INT_VV:
            a = self._vec(env, op, o[0], elem).bits
            b = self._vec(env, op, o[1], elem).bits
            f = _INT_VV[name]
            out[:vl] = [f(a[i], b[i], sew) & m for i in range(vl)]
        elif name in _INT_VX:
            a = self._vec(env, op, o[0], elem).bits
            k = self._scalar(env, op, o[1]) & m
            f = _INT_VX[name]
            out[:vl] = [f(a[i], k, sew) & m for i in range(vl)]
        elif name == "vnot":
            a = self._vec(env, op, o[0], elem).bits
            out[:vl] = [~a[i] & m for i in range(vl)]
        elif name == "vneg":
            a = self._vec(env, op, o[0], elem).bits
            out[:vl] = [-a[i] & m for i in range(vl)]
        elif name == "vfneg":
            a = self._vec(env, op, o[0], elem).bits
            out[:vl] = [a[i] ^ (1 << (sew - 1)) for i in range(vl)]
        elif name in _FLOAT_VV:
            a = self._vec(env, op, o[0], elem).bits
            b = self._vec(env, op, o[1], elem).bits
            if vl:
                out[:vl] = _FLOAT_VV[name](a[:vl], b[:vl], sew)
        elif name == "vmerge_vxm":
            base = self._vec(env, op, o[0], elem).bits
            x = self._scalar(env, op, o[1]) & m
            mask = self._mask(env, op, o[2]).bits
            out[:vl] = [x if mask[i] else base[i] for i in range(vl)]
        elif name == "vmerge_vvm":
            base = self._vec(env, op, o[0], elem).bits
            other = self._vec(env, op, o[1], elem).bits
            mask = self._mask(env, op, o[2]).bits
            out[:vl] = [other[i] if mask[i] else base[i] for i in range(vl)]
        elif name == "vslidedown_vx":
            src = self._vec(env, op, o[0], elem).bits
            off = self._scalar(env, op, o[1])
            out[:vl] = [src[i + off] if i + off < vlmax else 0 for i in range(vl)]
        elif name == "vslideup_vx":
            src = self._vec(env, op, o[1], elem).bits
            off = self._scalar(env, op, o[2])
            for i in range(off, vl):
                out[i] = src[i - off]
        else:  # pragma: no cover - table and dispatcher out of sync
            raise MalformedProgram(f"no semantics for {name}")
        return VectorValue(elem, tuple(out))

    def _compare(self, op, env, elem, vl):
        name, o, sew = op.opcode, op.operands, op.sew
        a = self._vec(env, op, o[0], elem).bits
        if name == "vmseq_vx":
            k = self._scalar(env, op, o[1]) & elem.mask
            return [a[i] == k for i in range(vl)]
        b = self._vec(env, op, o[1], elem).bits
        if name in _FLOAT_CMP:
            return _FLOAT_CMP[name](a[:vl], b[:vl], sew) if vl else []
        f = _INT_CMP[name]
        return [f(a[i], b[i], sew) for i in range(vl)]


def exec_program(program: RvvProgram, cfg: VlenConfig, memory: bytearray | None = None,
                 trace: Callable[[str], None] | None = None) -> tuple[dict, ExecStats]:
    """Run ``program`` once; ``memory`` is mutated in place by stores."""
    return RvvMachine(cfg, memory, trace).run(program)


def concat_programs(programs: Iterable[RvvProgram]) -> RvvProgram:
    """Sequence programs whose value names are already disjoint."""
    ops, inputs = [], {}
    last = None
    for p in programs:
        ops.extend(p.ops)
        inputs.update(p.inputs)
        last = p
    return RvvProgram(ops, inputs, last.output if last else None,
                      last.result_elem if last else None, last.result_lanes if last else 0)


def fallback_charge(vector_inputs: list[int], lanes_read: int, out_lanes: int, steps: int,
                    returns_vector: bool, mem_lanes: int = 0) -> int:
    """Scalar-op charge for an elementwise-fallback evaluation.

    Models the union round trip of the baseline scalar path. Each vector
    input is spilled (1 op) and then read lane by lane. Each output lane
    costs ``steps`` arithmetic ops plus one write. A vector result is
    reloaded once. ``mem_lanes`` counts element loads or stores that touch
    user memory directly (ld1/st1).
    """
    spills = len(vector_inputs)
    return spills + lanes_read + mem_lanes + out_lanes * steps + out_lanes + (1 if returns_vector else 0)

"""NEON and RVV vector type systems, vlen configuration and the type mapping.

NEON vectors are 64 or 128 bits wide. RVV vector types are sizeless; we only
use LMUL=1 types declared fixed-size through ``riscv_rvv_vector_bits``, so a
NEON type maps to the LMUL=1 RVV type of the same element width and class as
long as one RVV register can hold it.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass


class ElementClass(str, enum.Enum):
    SIGNED = "signed-int"
    UNSIGNED = "unsigned-int"
    FLOAT = "float"


_C_PREFIX = {ElementClass.SIGNED: "int", ElementClass.UNSIGNED: "uint", ElementClass.FLOAT: "float"}
_SUFFIX_LETTER = {ElementClass.SIGNED: "s", ElementClass.UNSIGNED: "u", ElementClass.FLOAT: "f"}
_RVV_LETTER = {ElementClass.SIGNED: "i", ElementClass.UNSIGNED: "u", ElementClass.FLOAT: "f"}


class ElementType(enum.Enum):
    I8 = (8, ElementClass.SIGNED)
    I16 = (16, ElementClass.SIGNED)
    I32 = (32, ElementClass.SIGNED)
    I64 = (64, ElementClass.SIGNED)
    U8 = (8, ElementClass.UNSIGNED)
    U16 = (16, ElementClass.UNSIGNED)
    U32 = (32, ElementClass.UNSIGNED)
    U64 = (64, ElementClass.UNSIGNED)
    F16 = (16, ElementClass.FLOAT)
    F32 = (32, ElementClass.FLOAT)
    F64 = (64, ElementClass.FLOAT)

    def __init__(self, bit_width: int, elem_class: ElementClass):
        # plain attributes: these are read per lane in the interpreters
        self.bit_width = bit_width
        self.cls = elem_class
        self.byte_width = bit_width // 8
        self.is_float = elem_class is ElementClass.FLOAT
        self.is_signed = elem_class is ElementClass.SIGNED
        self.mask = (1 << bit_width) - 1

    @property
    def suffix(self) -> str:
        """NEON intrinsic suffix, e.g. ``s32``."""
        return f"{_SUFFIX_LETTER[self.cls]}{self.bit_width}"

    @property
    def c_scalar(self) -> str:
        if self.is_float:
            return {16: "_Float16", 32: "float", 64: "double"}[self.bit_width]
        return f"{_C_PREFIX[self.cls]}{self.bit_width}_t"

    @classmethod
    def of(cls, bit_width: int, elem_class: ElementClass) -> "ElementType":
        return _BY_WIDTH_CLASS[(bit_width, ElementClass(elem_class))]

    @classmethod
    def from_suffix(cls, suffix: str) -> "ElementType":
        return _BY_SUFFIX[suffix]

    def with_class(self, elem_class: ElementClass) -> "ElementType":
        return ElementType.of(self.bit_width, elem_class)


_BY_WIDTH_CLASS = {(e.bit_width, e.cls): e for e in ElementType}
_BY_SUFFIX = {e.suffix: e for e in ElementType}

NEON_WIDTHS = (64, 128)


@dataclass(frozen=True, order=False)
class NeonVectorType:
    elem: ElementType
    lanes: int

    def __post_init__(self):
        if self.lanes <= 0 or self.elem.bit_width * self.lanes not in NEON_WIDTHS:
            raise ValueError(
                f"{self.elem.name} x {self.lanes} is not a NEON vector width (64 or 128 bits)"
            )

    @property
    def total_bits(self) -> int:
        return self.elem.bit_width * self.lanes

    @property
    def is_q(self) -> bool:
        return self.total_bits == 128

    @property
    def name(self) -> str:
        return f"{_C_PREFIX[self.elem.cls]}{self.elem.bit_width}x{self.lanes}_t"

    def __str__(self):
        return self.name

    def half(self) -> "NeonVectorType":
        return NeonVectorType(self.elem, self.lanes // 2)

    def double(self) -> "NeonVectorType":
        return NeonVectorType(self.elem, self.lanes * 2)

    @classmethod
    def for_width(cls, elem: ElementType, total_bits: int) -> "NeonVectorType":
        return cls(elem, total_bits // elem.bit_width)


NEON_TYPE_RE = re.compile(r"\b(u?int|float)(8|16|32|64)x(\d+)_t\b")


def parse_neon_type(name: str) -> NeonVectorType | None:
    """Parse a NEON type name; ``None`` for anything outside the modelled set."""
    m = NEON_TYPE_RE.fullmatch(name)
    if not m:
        return None
    prefix, bits, lanes = m.group(1), int(m.group(2)), int(m.group(3))
    elem_class = {"int": ElementClass.SIGNED, "uint": ElementClass.UNSIGNED, "float": ElementClass.FLOAT}[prefix]
    try:
        return NeonVectorType(ElementType.of(bits, elem_class), lanes)
    except (KeyError, ValueError):
        return None


_TABLE_ELEMS = (
    ElementType.I8, ElementType.I16, ElementType.I32, ElementType.I64,
    ElementType.U8, ElementType.U16, ElementType.U32, ElementType.U64,
    ElementType.F16, ElementType.F32, ElementType.F64,
)


def all_neon_types() -> list[NeonVectorType]:
    """The 22 modelled NEON types: all 64-bit types, then all 128-bit types."""
    return [NeonVectorType.for_width(e, w) for w in NEON_WIDTHS for e in _TABLE_ELEMS]


@dataclass(frozen=True)
class RvvVectorType:
    sew: int
    elem_class: ElementClass
    lmul: int = 1

    def __post_init__(self):
        if self.sew not in (8, 16, 32, 64):
            raise ValueError(f"bad SEW {self.sew}")
        if self.lmul != 1:
            raise ValueError("only LMUL=1 types are modelled")

    @property
    def elem(self) -> ElementType:
        return ElementType.of(self.sew, self.elem_class)

    @property
    def short(self) -> str:
        """Intrinsic type suffix, e.g. ``i32m1``."""
        return f"{_RVV_LETTER[self.elem_class]}{self.sew}m{self.lmul}"

    @property
    def name(self) -> str:
        return f"v{_C_PREFIX[self.elem_class]}{self.sew}m{self.lmul}_t"

    @property
    def fixed_name(self) -> str:
        return f"fixed_{self.name}"

    def __str__(self):
        return self.name

    @classmethod
    def for_elem(cls, elem: ElementType) -> "RvvVectorType":
        return cls(elem.bit_width, elem.cls)


@dataclass(frozen=True)
class VlenConfig:
    vlen_bits: int
    zvfh: bool = False

    def __post_init__(self):
        v = self.vlen_bits
        if not isinstance(v, int) or v < 32 or v > 65536 or v & (v - 1):
            raise ValueError(f"vlen must be a power of two in [32, 65536], got {v!r}")

    def vlmax(self, sew: int) -> int:
        """Elements per LMUL=1 register at the given SEW."""
        return self.vlen_bits // sew

    def __str__(self):
        return f"vlen={self.vlen_bits}{'+zvfh' if self.zvfh else ''}"


class UnmappedReason(str, enum.Enum):
    VLEN_TOO_SMALL = "vlen-too-small"
    MISSING_ZVFH = "missing-zvfh"
    UNSUPPORTED_ELEMENT_CLASS = "unsupported-element-class"


@dataclass(frozen=True)
class Mapped:
    rvv: RvvVectorType
    fixed_vlen_bits: int

    mapped = True


@dataclass(frozen=True)
class Unmapped:
    reason: UnmappedReason

    mapped = False


MappingResult = Mapped | Unmapped


def map_type(neon: NeonVectorType, cfg: VlenConfig) -> MappingResult:
    if cfg.vlen_bits < neon.total_bits:
        return Unmapped(UnmappedReason.VLEN_TOO_SMALL)
    if neon.elem is ElementType.F16 and not cfg.zvfh:
        return Unmapped(UnmappedReason.MISSING_ZVFH)
    return Mapped(RvvVectorType.for_elem(neon.elem), cfg.vlen_bits)


def mapping_records(cfg: VlenConfig) -> list[dict]:
    """JSON-ready mapping database evaluated at ``cfg``, one record per NEON type."""
    rows = []
    for t in all_neon_types():
        res = map_type(t, cfg)
        rows.append({
            "neon_type": t.name,
            "vlen_min": t.total_bits,
            "requires_zvfh": t.elem is ElementType.F16,
            "rvv_type": RvvVectorType.for_elem(t.elem).name,
            "mapped": res.mapped,
            "reason": None if res.mapped else res.reason.value,
        })
    return rows

"""Token-level rewriting of NEON-intrinsic C code into RVV-intrinsic C code.

The lexer only knows enough C to skip comments, string and character
literals, and preprocessor directives. Call arguments are found by balanced
bracket matching. Macro-generated intrinsic names are not discovered.

Rewrites are expressed as non-overlapping substitutions on the original
text, so every byte outside a substitution span survives unchanged:

* a NEON type name becomes its ``fixed_v*m1_t`` typedef, or a generic
  ``n2r_*`` vector typedef when the type does not fit the configured vlen;
* a Direct call has its callee renamed to the ``__riscv_*`` intrinsic and
  the extra immediates plus the vl argument appended before ``)``;
* Composite and fallback calls are redirected to helper functions emitted
  once into the prelude;
* ``#include <arm_neon.h>`` becomes ``#include <riscv_vector.h>``.
"""

from __future__ import annotations

import bisect
import enum
import functools
import re
from dataclasses import dataclass, field

from . import neon_oracle, recipe_engine
from .errors import LexError, UnmappableType, UnsupportedSite
from .isa_model import (
    ElementClass,
    ElementType,
    NeonVectorType,
    RvvVectorType,
    VlenConfig,
    all_neon_types,
    map_type,
    parse_neon_type,
)
from .neon_oracle import VECTOR_KINDS, NeonIntrinsicId
from .recipe_engine import OpTemplate, Recipe, Tier
from .rvv_machine import OPCODES, ExecStats, RvvOp, RvvProgram, exec_program
from .values import VectorValue, float_to_bits

# --- lexer ------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+|\n)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<char>'(?:\\.|[^'\\\n])*')
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<number>\.?\d(?:[eEpP][+-]|[\w.])*)
  | (?P<punct>.)
""", re.S | re.X)

_DIRECTIVE_RE = re.compile(r"#(?:\\\n|[^\n])*")
_INCLUDE_RE = re.compile(r"#\s*include\s*([<\"])([^>\"]+)[>\"]")
_NEON_HEADERS = ("arm_neon.h", "arm/neon.h")
_CALLEE_LIKE = re.compile(r"v[a-z0-9_]*?q?_(?:n_|lane_)?[suf](?:8|16|32|64)")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int

    @property
    def end(self) -> int:
        return self.start + len(self.text)


def lex(text: str) -> list[Token]:
    """Tokenize C-like text. Whitespace is dropped; comments are kept as tokens."""
    tokens = []
    pos = 0
    at_line_start = True
    n = len(text)
    while pos < n:
        if at_line_start and text[pos] == "#":
            m = _DIRECTIVE_RE.match(text, pos)
            tokens.append(Token("directive", m.group(), pos))
            pos = m.end()
            continue
        m = _TOKEN_RE.match(text, pos)
        kind = m.lastgroup
        if kind == "punct":
            two = text[pos:pos + 2]
            if two == "/*":
                raise LexError("unterminated comment", offset=pos)
            if text[pos] == '"':
                raise LexError("unterminated string literal", offset=pos)
            if text[pos] == "'":
                raise LexError("unterminated character literal", offset=pos)
        if kind == "ws":
            if m.group() == "\n":
                at_line_start = True
        else:
            tokens.append(Token(kind, m.group(), pos))
            if kind != "comment":
                at_line_start = False
        pos = m.end()
    return tokens


# --- source model -------------------------------------------------------------

@dataclass(frozen=True)
class TypeUseSite:
    neon_type: NeonVectorType
    start: int
    end: int


@dataclass(frozen=True)
class IntrinsicCallSite:
    id: NeonIntrinsicId
    start: int          # callee name
    name_end: int
    close: int          # offset of the closing parenthesis
    args: tuple[tuple[int, int], ...]

    @property
    def end(self) -> int:
        return self.close + 1


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    severity: str
    message: str

    def format(self, path: str = "<input>") -> str:
        return f"{path}:{self.line}:{self.col}: {self.severity}: {self.message}"


@dataclass
class SourceUnit:
    text: str
    path: str = "<input>"
    tokens: list[Token] = field(default_factory=list)
    discovered: list = field(default_factory=list)
    notes: list[Diagnostic] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str, path: str = "<input>") -> "SourceUnit":
        unit = cls(text, path, lex(text))
        unit.discovered = _discover(unit)
        return unit

    def position(self, offset: int) -> tuple[int, int]:
        """1-based line and column of ``offset``."""
        starts = self._line_starts
        line = bisect.bisect_right(starts, offset) - 1
        return line + 1, offset - starts[line] + 1

    @functools.cached_property
    def _line_starts(self) -> list[int]:
        return [0] + [i + 1 for i, c in enumerate(self.text) if c == "\n"]

    def diag(self, offset: int, severity: str, message: str) -> Diagnostic:
        line, col = self.position(offset)
        return Diagnostic(line, col, severity, message)


_OPEN = "([{"
_CLOSE = ")]}"


def _split_call(toks: list[Token], i: int):
    """Argument spans and closing offset of the call whose ``(`` is ``toks[i]``.

    ``None`` when the parentheses never balance.
    """
    depth = 0
    groups: list[list[Token]] = [[]]
    for t in toks[i:]:
        if t.kind == "punct" and t.text in _OPEN:
            depth += 1
            if depth == 1:
                continue
        elif t.kind == "punct" and t.text in _CLOSE:
            depth -= 1
            if depth == 0:
                if groups == [[]]:
                    return (), t.start
                spans = tuple((g[0].start, g[-1].end) if g else (t.start, t.start) for g in groups)
                return spans, t.start
        elif depth == 1 and t.text == ",":
            groups.append([])
            continue
        groups[-1].append(t)
    return None


_IDENT_RE = re.compile(r"[A-Za-z_]\w*")


def _warn_macro_uses(unit: SourceUnit, tok: Token) -> None:
    for m in _IDENT_RE.finditer(tok.text):
        name = m.group()
        if neon_oracle.lookup_name(name) is not None or parse_neon_type(name) is not None:
            unit.notes.append(unit.diag(tok.start + m.start(), "warning",
                                        f"{name} inside a preprocessor directive is not rewritten"))


def _discover(unit: SourceUnit) -> list:
    for t in unit.tokens:
        if t.kind == "directive" and not _INCLUDE_RE.match(t.text):
            _warn_macro_uses(unit, t)
    toks = [t for t in unit.tokens if t.kind != "comment"]
    sites = []
    for i, t in enumerate(toks):
        if t.kind != "ident":
            continue
        neon_type = parse_neon_type(t.text)
        if neon_type is not None:
            sites.append(TypeUseSite(neon_type, t.start, t.end))
            continue
        is_call = i + 1 < len(toks) and toks[i + 1].text == "("
        if not is_call:
            continue
        id = neon_oracle.lookup_name(t.text)
        if id is None:
            if _CALLEE_LIKE.fullmatch(t.text):
                unit.notes.append(unit.diag(t.start, "warning", f"{t.text} is not in the supported catalog; left as is"))
            continue
        split = _split_call(toks, i + 1)
        if split is None:
            raise LexError(f"unbalanced parentheses in call to {t.text}", offset=t.start)
        args, close = split
        sites.append(IntrinsicCallSite(id, t.start, t.end, close, args))
    return sites


def scan(source) -> list:
    """NEON call and type-use sites, in source order."""
    unit = source if isinstance(source, SourceUnit) else SourceUnit.parse(source)
    return list(unit.discovered)


def _neon_includes(unit: SourceUnit) -> list[tuple[int, int]]:
    """Spans of ``#include`` directives naming the NEON header."""
    out = []
    for t in unit.tokens:
        if t.kind != "directive":
            continue
        m = _INCLUDE_RE.match(t.text)
        if m and m.group(2).endswith(_NEON_HEADERS):
            out.append((t.start, t.start + m.end()))
    return out


# --- C rendering ----------------------------------------------------------------

_UNARY_V = {"vneg", "vnot", "vfneg"}
_NO_VL = {"vmv_x_s"}  # element-0 reads take no vl argument

# scalar typedefs that arm_neon.h provides and riscv_vector.h does not
_NEON_SCALARS = {"float16_t": "_Float16", "float32_t": "float", "float64_t": "double"}


def rvv_intrinsic_name(opcode: str, sew: int, elem_class: ElementClass) -> str:
    """The ``__riscv_*`` intrinsic that realises one machine opcode."""
    t = RvvVectorType(sew, elem_class).short
    is_float = elem_class is ElementClass.FLOAT
    if opcode in ("vle", "vse"):
        return f"__riscv_{opcode}{sew}_v_{t}"
    if opcode == "vmv_v_x":
        return f"__riscv_vfmv_v_f_{t}" if is_float else f"__riscv_vmv_v_x_{t}"
    if opcode == "vmv_x_s":
        scalar = f"{'f' if is_float else t[0]}{sew}"
        return f"__riscv_vfmv_f_s_{t}_{scalar}" if is_float else f"__riscv_vmv_x_s_{t}_{scalar}"
    if opcode == "vmerge_vxm" and is_float:
        return f"__riscv_vfmerge_vfm_{t}"
    if opcode in _UNARY_V:
        return f"__riscv_{opcode}_v_{t}"
    if OPCODES[opcode].makes_mask:
        return f"__riscv_{opcode}_{t}_b{sew}"
    return f"__riscv_{opcode}_{t}"


def op_intrinsic_name(op: RvvOp) -> str:
    return rvv_intrinsic_name(op.opcode, op.sew, op.elem_class)


def c_type(neon: NeonVectorType, cfg: VlenConfig) -> str:
    """Replacement spelling for a NEON type under ``cfg``."""
    if map_type(neon, cfg).mapped:
        return RvvVectorType.for_elem(neon.elem).fixed_name
    return f"n2r_{neon.name}"


def _fixed_typedef(rvv: RvvVectorType) -> str:
    return f"typedef {rvv.name} {rvv.fixed_name} __attribute__((riscv_rvv_vector_bits(__riscv_v_fixed_vlen)));"


def _generic_typedef(neon: NeonVectorType) -> str:
    return f"typedef {neon.elem.c_scalar} n2r_{neon.name} __attribute__((vector_size({neon.total_bits // 8})));"


def _template_operand(tok, id: NeonIntrinsicId) -> str:
    if isinstance(tok, int):
        return hex(tok) if tok > 9 else str(tok)
    if tok == "$half":
        return str(id.lanes // 2)
    m = recipe_engine._IMM_EXPR.fullmatch(tok)
    if m:
        return f"{m.group(1)} - {m.group(2)}"
    return tok


def _template_vl(t: OpTemplate, id: NeonIntrinsicId) -> int:
    return id.lanes if t.vl == "full" else id.lanes // 2


def _template_name(t: OpTemplate, id: NeonIntrinsicId) -> str:
    return rvv_intrinsic_name(t.opcode, id.elem.bit_width, t.cls or id.elem.cls)


def _value_ctype(t: OpTemplate, id: NeonIntrinsicId) -> str:
    sew = id.elem.bit_width
    cls = t.cls or id.elem.cls
    if OPCODES[t.opcode].makes_mask:
        return f"vbool{sew}_t"
    if t.opcode == "vmv_x_s":
        return ElementType.of(sew, cls).c_scalar
    return RvvVectorType(sew, cls).name


def _param_ctype(id: NeonIntrinsicId, kind: str, cfg: VlenConfig) -> str:
    if kind in VECTOR_KINDS:
        return c_type(id.type_of(kind), cfg)
    if kind == "ptr":
        const = "const " if id.family == "ld1" else ""
        return f"{const}{id.elem.c_scalar} *"
    if kind == "scalar":
        return id.elem.c_scalar
    return "const int"


def _result_ctype(id: NeonIntrinsicId, cfg: VlenConfig) -> str:
    result = id.spec.result
    if result == "void":
        return "void"
    if result == "scalar":
        return id.elem.c_scalar
    return c_type(id.type_of(result), cfg)


def _signature(id: NeonIntrinsicId, cfg: VlenConfig, name: str) -> str:
    params = ", ".join(f"{_param_ctype(id, k, cfg)}{'' if k == 'ptr' else ' '}{p}" for p, k in id.spec.params)
    return f"static inline {_result_ctype(id, cfg)}\n{name}({params})"


def direct_form(recipe: Recipe) -> tuple[str, list[str]] | None:
    """``(intrinsic, trailing args)`` when the call can be renamed in place.

    That needs a single op whose leading operands are exactly the NEON
    parameters in order; the rest must be constants.
    """
    if recipe.tier is not Tier.DIRECT:
        return None
    id = recipe.intrinsic
    (t,) = recipe.ops
    params = [p for p, _ in id.spec.params]
    if tuple(t.operands[:len(params)]) != tuple(params):
        return None
    extra = [_template_operand(o, id) for o in t.operands[len(params):]]
    if any(o in params for o in t.operands[len(params):]):
        return None
    return _template_name(t, id), extra + [str(_template_vl(t, id))]


def composite_helper(recipe: Recipe, cfg: VlenConfig) -> str:
    id = recipe.intrinsic
    lines = [_signature(id, cfg, f"n2r_{id.name}") + " {"]
    last = None
    for t in recipe.ops:
        args = [_template_operand(o, id) for o in t.operands]
        if t.opcode not in _NO_VL:
            args.append(str(_template_vl(t, id)))
        call = f"{_template_name(t, id)}({', '.join(args)})"
        if t.dest is None:
            lines.append(f"    {call};")
        else:
            lines.append(f"    {_value_ctype(t, id)} {t.dest} = {call};")
            last = t.dest
    if id.spec.result != "void":
        lines.append(f"    return {last};")
    lines.append("}")
    return "\n".join(lines)


def _lane_expr(id: NeonIntrinsicId) -> str:
    """C expression for output lane ``i`` of an elementwise family."""
    e = id.elem
    T = e.c_scalar
    U = f"uint{max(32, e.bit_width)}_t"
    a, b = "a_[i]", "b_[i]"
    fam = id.family
    if e.is_float:
        return {
            "add": f"{a} + {b}", "sub": f"{a} - {b}", "mul": f"{a} * {b}", "neg": f"-{a}",
            "min": f"({a} != {a} || {b} != {b}) ? {a} + {b} : ({a} < {b} || ({a} == {b} && signbit({a}))) ? {a} : {b}",
            "max": f"({a} != {a} || {b} != {b}) ? {a} + {b} : ({a} > {b} || ({a} == {b} && !signbit({a}))) ? {a} : {b}",
        }.get(fam) or _cmp_expr(id)
    wrap = {
        "add": f"({T})(({U}){a} + ({U}){b})",
        "sub": f"({T})(({U}){a} - ({U}){b})",
        "mul": f"({T})(({U}){a} * ({U}){b})",
        "neg": f"({T})(0 - ({U}){a})",
        "min": f"{a} < {b} ? {a} : {b}",
        "max": f"{a} > {b} ? {a} : {b}",
        "and": f"{a} & {b}", "orr": f"{a} | {b}", "eor": f"{a} ^ {b}",
        "bic": f"({T})({a} & ~{b})", "mvn": f"({T})~{a}",
        "shl_n": f"({T})(({U}){a} << n)",
        "shr_n": f"({T})({a} >> (n - 1) >> 1)",
        "rbit": "n2r_rbit8((uint8_t)a_[i])",
    }
    return wrap.get(fam) or _cmp_expr(id)


def _cmp_expr(id: NeonIntrinsicId) -> str:
    op = {"ceq": "==", "cgt": ">", "cge": ">=", "clt": "<", "cle": "<="}[id.family]
    r = id.result_type().elem.c_scalar
    return f"a_[i] {op} b_[i] ? ({r})-1 : 0"


_RBIT8 = """static inline uint8_t
n2r_rbit8(uint8_t v) {
    uint8_t o = 0;
    for (int k = 0; k < 8; k++)
        o |= (uint8_t)(((v >> k) & 1) << (7 - k));
    return o;
}"""


def fallback_helper(recipe: Recipe, cfg: VlenConfig) -> str:
    """Scalar-loop helper: spill vectors to arrays, loop per lane, reload."""
    id = recipe.intrinsic
    e = id.elem
    fam = id.family
    lines = [_signature(id, cfg, f"n2r_fb_{id.name}") + " {"]
    for p, k in id.spec.params:
        if k not in VECTOR_KINDS:
            continue
        t = id.type_of(k)
        lines.append(f"    {t.elem.c_scalar} {p}_[{t.lanes}];")
        if map_type(t, cfg).mapped:
            lines.append(f"    {rvv_intrinsic_name('vse', t.elem.bit_width, t.elem.cls)}({p}_, {p}, {t.lanes});")
        else:
            lines.append(f"    memcpy({p}_, &{p}, sizeof {p}_);")
    res = id.result_type()
    if res is not None:
        lines.append(f"    {res.elem.c_scalar} r_[{res.lanes}];")
    if fam == "ld1":
        lines.append("    memcpy(r_, ptr, sizeof r_);")
    elif fam == "st1":
        lines.append("    memcpy(ptr, val_, sizeof val_);")
    elif fam == "dup_n":
        lines.append(f"    for (int i = 0; i < {res.lanes}; i++) r_[i] = x;")
    elif fam == "get_lane":
        lines.append("    return v_[lane];")
    elif fam == "set_lane":
        lines += ["    memcpy(r_, v_, sizeof r_);", "    r_[lane] = x;"]
    elif fam == "get_high":
        lines.append(f"    for (int i = 0; i < {res.lanes}; i++) r_[i] = a_[i + {res.lanes}];")
    elif fam == "get_low":
        lines.append(f"    for (int i = 0; i < {res.lanes}; i++) r_[i] = a_[i];")
    elif fam == "combine":
        half = res.lanes // 2
        lines.append(f"    for (int i = 0; i < {half}; i++) {{ r_[i] = low_[i]; r_[i + {half}] = high_[i]; }}")
    else:
        lines.append(f"    for (int i = 0; i < {res.lanes}; i++) r_[i] = {_lane_expr(id)};")
    if res is not None and fam != "get_lane":
        if map_type(res, cfg).mapped:
            lines.append(f"    return {rvv_intrinsic_name('vle', res.elem.bit_width, res.elem.cls)}(r_, {res.lanes});")
        else:
            lines += [f"    {c_type(res, cfg)} r;", "    memcpy(&r, r_, sizeof r);", "    return r;"]
    lines.append("}")
    return "\n".join(lines)


# --- planning -------------------------------------------------------------------

class Mode(str, enum.Enum):
    STRICT = "strict"
    PERMISSIVE = "permissive"


@dataclass(frozen=True)
class Substitution:
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class PlannedSite:
    site: IntrinsicCallSite
    recipe: Recipe
    rendered: tuple[str, ...]     # __riscv_* intrinsics the site expands to
    helper: str | None = None


@dataclass
class RewritePlan:
    prelude: str = ""
    substitutions: list[Substitution] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    sites: list[PlannedSite] = field(default_factory=list)
    passthrough: int = 0
    min_vlen_bits: int = 0

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


def _rendered_names(recipe: Recipe) -> tuple[str, ...]:
    if recipe.tier is Tier.FALLBACK:
        return ()
    return tuple(_template_name(t, recipe.intrinsic) for t in recipe.ops)


def plan(source, cfg: VlenConfig, mode: Mode | str = Mode.PERMISSIVE) -> RewritePlan:
    """Work out the substitutions and prelude that translate ``source``.

    In strict mode an unmappable type or a site that cannot be realised with
    vector code raises after all diagnostics are collected; the plan is
    attached to the exception as ``context["plan"]``.
    """
    mode = Mode(mode)
    unit = source if isinstance(source, SourceUnit) else SourceUnit.parse(source)
    out = RewritePlan(diagnostics=list(unit.notes))
    subs = out.substitutions
    strict_kind = None
    used_types: set[NeonVectorType] = set()
    helpers: dict[str, str] = {}
    need_rbit = need_string = need_math = False

    for site in unit.discovered:
        if isinstance(site, TypeUseSite):
            t = site.neon_type
            res = map_type(t, cfg)
            used_types.add(t)
            if not res.mapped:
                sev = "error" if mode is Mode.STRICT else "warning"
                out.diagnostics.append(unit.diag(site.start, sev, f"{t.name} has no RVV type at {cfg}: {res.reason.value}"))
                strict_kind = strict_kind or UnmappableType
            subs.append(Substitution(site.start, site.end, c_type(t, cfg)))
            continue

        id = site.id
        recipe = recipe_engine.lookup(id, cfg)
        nparams = len(id.spec.params)
        if len(site.args) != nparams:
            out.diagnostics.append(unit.diag(site.start, "error" if mode is Mode.STRICT else "warning",
                                             f"{id.name} expects {nparams} arguments, got {len(site.args)}; left as is"))
            out.passthrough += 1
            strict_kind = strict_kind or UnsupportedSite
            continue
        if recipe.tier is Tier.UNSUPPORTED:
            out.diagnostics.append(unit.diag(site.start, "error" if mode is Mode.STRICT else "warning",
                                             f"{id.name} has no RVV realisation ({recipe.reason}); left as is"))
            out.passthrough += 1
            strict_kind = strict_kind or UnsupportedSite
            continue
        used_types.update(id.signature_types())

        if recipe.tier is Tier.FALLBACK:
            sev = "error" if mode is Mode.STRICT else "warning"
            out.diagnostics.append(unit.diag(site.start, sev, f"{id.name} needs a scalar fallback at {cfg}: {recipe.reason}"))
            strict_kind = strict_kind or UnmappableType
            name = f"n2r_fb_{id.name}"
            helpers.setdefault(name, fallback_helper(recipe, cfg))
            need_string = True
            need_rbit |= id.family == "rbit"
            need_math |= id.family in ("min", "max") and id.elem.is_float
            subs.append(Substitution(site.start, site.name_end, name))
            out.sites.append(PlannedSite(site, recipe, (), name))
            continue

        direct = direct_form(recipe)
        if direct is not None:
            intrinsic, extra = direct
            subs.append(Substitution(site.start, site.name_end, intrinsic))
            subs.append(Substitution(site.close, site.close, "".join(f", {x}" for x in extra)))
            out.sites.append(PlannedSite(site, recipe, _rendered_names(recipe)))
        else:
            name = f"n2r_{id.name}"
            helpers.setdefault(name, composite_helper(recipe, cfg))
            subs.append(Substitution(site.start, site.name_end, name))
            out.sites.append(PlannedSite(site, recipe, _rendered_names(recipe), name))

    for start, end in _neon_includes(unit):
        subs.append(Substitution(start, end, "#include <riscv_vector.h>"))
    subs.sort(key=lambda s: (s.start, s.end))

    scalars = sorted({t.text for t in unit.tokens if t.kind == "ident" and t.text in _NEON_SCALARS})
    if used_types or helpers:
        mapped = [t for t in used_types if map_type(t, cfg).mapped]
        out.min_vlen_bits = max((t.total_bits for t in mapped), default=0)
        out.prelude = _prelude(cfg, used_types, helpers, out.min_vlen_bits,
                               need_string, need_math, need_rbit, scalars)
    if mode is Mode.STRICT and strict_kind is not None:
        first = out.errors[0]
        raise strict_kind(f"{unit.path}:{first.line}:{first.col}: {first.message}", plan=out)
    return out


def _prelude(cfg, used_types, helpers, min_vlen, need_string, need_math, need_rbit, scalars=()) -> str:
    lines = ["/* neon2rvv: RVV translation prelude */", "#include <riscv_vector.h>", "#include <stdint.h>"]
    if need_string:
        lines.append("#include <string.h>")
    if need_math:
        lines.append("#include <math.h>")
    if min_vlen:
        lines += [
            f"#if !defined(__riscv_v_fixed_vlen) || __riscv_v_fixed_vlen < {min_vlen}",
            f'#error "translated for fixed vlen >= {min_vlen}; build with -mrvv-vector-bits=zvl"',
            "#endif",
        ]
    fixed = [f"typedef {_NEON_SCALARS[n]} {n};" for n in scalars]
    for t in all_neon_types():
        if t not in used_types:
            continue
        if map_type(t, cfg).mapped:
            line = _fixed_typedef(RvvVectorType.for_elem(t.elem))
            if line not in fixed:
                fixed.append(line)
        else:
            fixed.append(_generic_typedef(t))
    lines += fixed
    if need_rbit:
        lines += ["", _RBIT8]
    for body in helpers.values():
        lines += ["", body]
    return "\n".join(lines) + "\n\n"


def apply(source, rewrite: RewritePlan) -> str:
    """Prelude followed by ``source`` with the plan's substitutions spliced in."""
    text = source.text if isinstance(source, SourceUnit) else source
    parts = [rewrite.prelude]
    pos = 0
    for s in rewrite.substitutions:
        parts.append(text[pos:s.start])
        parts.append(s.text)
        pos = s.end
    parts.append(text[pos:])
    return "".join(parts)


def translate(source: str, cfg: VlenConfig, mode: Mode | str = Mode.PERMISSIVE,
              path: str = "<input>") -> tuple[str, RewritePlan]:
    unit = SourceUnit.parse(source, path)
    p = plan(unit, cfg, mode)
    return apply(unit, p), p


# --- replay ----------------------------------------------------------------------
#
# Straight-line ``main`` bodies (array globals, vector locals, intrinsic calls)
# are chained through the RVV machine, one recipe per call site.

_C_ELEM = {
    "int": ElementType.I32, "int32_t": ElementType.I32, "unsigned": ElementType.U32,
    "uint32_t": ElementType.U32, "short": ElementType.I16, "int16_t": ElementType.I16,
    "uint16_t": ElementType.U16, "int8_t": ElementType.I8, "uint8_t": ElementType.U8,
    "int64_t": ElementType.I64, "uint64_t": ElementType.U64, "float": ElementType.F32,
    "double": ElementType.F64,
}
_ARRAY_RE = re.compile(
    r"(?:static\s+)?(?:const\s+)?(" + "|".join(_C_ELEM) + r")\s+(\w+)\s*\[\s*(\d*)\s*\]\s*=\s*\{([^}]*)\}\s*;")


@dataclass
class ReplayResult:
    arrays: dict[str, list]
    program: RvvProgram
    stats: ExecStats
    memory: bytes

    @property
    def opcodes(self) -> list[str]:
        return self.program.opcodes()


def _code_only(unit: SourceUnit) -> str:
    chars = list(unit.text)
    for t in unit.tokens:
        if t.kind in ("comment", "directive"):
            for i in range(t.start, t.end):
                if chars[i] != "\n":
                    chars[i] = " "
    return "".join(chars)


def _literal(text: str):
    t = text.rstrip("uUlLfF") if not text.lower().startswith("0x") else text.rstrip("uUlL")
    try:
        return int(t, 0)
    except ValueError:
        return float(t)


def replay(source, cfg: VlenConfig, entry: str = "main") -> ReplayResult:
    """Execute the intrinsic calls of ``entry`` on the RVV machine.

    Global arrays with brace initialisers become memory; each NEON call is
    expanded with its recipe under ``cfg``. Non-intrinsic statements
    (``printf``, ``return``) are skipped.
    """
    unit = source if isinstance(source, SourceUnit) else SourceUnit.parse(source)
    code = _code_only(unit)

    memory = bytearray(16)
    arrays: dict[str, tuple[int, ElementType, int]] = {}
    for m in _ARRAY_RE.finditer(code):
        elem = _C_ELEM[m.group(1)]
        vals = [_literal(v.strip()) for v in m.group(4).split(",") if v.strip()]
        count = int(m.group(3)) if m.group(3) else len(vals)
        vals += [0] * (count - len(vals))
        vec = (VectorValue.from_floats(elem, vals) if elem.is_float
               else VectorValue.from_ints(elem, [int(v) for v in vals]))
        addr = len(memory)
        memory += vec.to_bytes() + bytes(-len(vec.to_bytes()) % 16)
        arrays[m.group(2)] = (addr, elem, count)

    toks = [t for t in unit.tokens if t.kind not in ("comment", "directive")]
    body = _function_body(toks, entry)
    state = _Replay(cfg, arrays)
    for stmt in _statements(body):
        state.statement(stmt)

    program = RvvProgram(state.ops, {}, None)
    _, stats = exec_program(program, cfg, memory)
    out = {}
    for name, (addr, elem, count) in arrays.items():
        vec = VectorValue.from_bytes(elem, bytes(memory[addr:addr + count * elem.byte_width]))
        out[name] = vec.values()
    return ReplayResult(out, program, stats, bytes(memory))


def _function_body(toks: list[Token], entry: str) -> list[Token]:
    for i, t in enumerate(toks):
        if t.kind == "ident" and t.text == entry and i + 1 < len(toks) and toks[i + 1].text == "(":
            j = i + 1
            while j < len(toks) and toks[j].text != "{":
                if toks[j].text == ";":
                    break
                j += 1
            if j < len(toks) and toks[j].text == "{":
                depth = 0
                for k in range(j, len(toks)):
                    depth += toks[k].text == "{"
                    depth -= toks[k].text == "}"
                    if depth == 0:
                        return toks[j + 1:k]
    raise UnsupportedSite(f"no definition of {entry}() found")


def _statements(body: list[Token]):
    stmt, depth = [], 0
    for t in body:
        if t.text in "([{" and t.kind == "punct":
            depth += 1
        elif t.text in ")]}" and t.kind == "punct":
            depth -= 1
        if t.text == ";" and depth == 0:
            if stmt:
                yield stmt
            stmt = []
        else:
            stmt.append(t)
    if stmt:
        yield stmt


class _Replay:
    def __init__(self, cfg, arrays):
        self.cfg = cfg
        self.arrays = arrays
        self.vars: dict[str, str] = {}
        self.ops: list[RvvOp] = []
        self.n = 0

    def statement(self, toks: list[Token]):
        if toks[0].kind == "ident" and parse_neon_type(toks[0].text) is not None:
            names = [t.text for t in toks[1:] if t.kind == "ident"]
            if any(t.text == "=" for t in toks):
                eq = next(i for i, t in enumerate(toks) if t.text == "=")
                self.vars[toks[1].text] = self.expr(toks[eq + 1:])
            else:
                for n in names:
                    self.vars.setdefault(n, None)
            return
        if len(toks) >= 3 and toks[0].kind == "ident" and toks[1].text == "=":
            if toks[0].text not in self.vars:
                raise UnsupportedSite(f"assignment to undeclared vector {toks[0].text}")
            self.vars[toks[0].text] = self.expr(toks[2:])
            return
        if toks[0].kind == "ident" and neon_oracle.lookup_name(toks[0].text) is not None:
            self.expr(toks)
        # anything else (printf, return, ...) has no vector effect

    def expr(self, toks: list[Token], id: NeonIntrinsicId | None = None, kind: str | None = None):
        if len(toks) == 1:
            t = toks[0]
            if t.kind == "number":
                v = _literal(t.text)
                if kind == "scalar" and id is not None and id.elem.is_float:
                    return float_to_bits(float(v), id.elem.bit_width)
                return v
            if t.kind == "ident":
                if t.text in self.arrays:
                    return self.arrays[t.text][0]
                if self.vars.get(t.text) is not None:
                    return self.vars[t.text]
                raise UnsupportedSite(f"{t.text} is not a known array or initialised vector")
        if len(toks) == 2 and toks[0].text == "-" and toks[1].kind == "number":
            return -_literal(toks[1].text)
        if toks[0].kind == "ident" and toks[1].text == "(" and toks[-1].text == ")":
            callee = neon_oracle.lookup_name(toks[0].text)
            if callee is None:
                raise UnsupportedSite(f"cannot replay call to {toks[0].text}")
            return self.call(callee, _split_tokens(toks[2:-1]))
        raise UnsupportedSite("replay handles identifiers, literals and intrinsic calls only: "
                              + " ".join(t.text for t in toks))

    def call(self, id: NeonIntrinsicId, arg_toks: list[list[Token]]):
        params = id.spec.params
        if len(arg_toks) != len(params):
            raise UnsupportedSite(f"{id.name} expects {len(params)} arguments, got {len(arg_toks)}")
        args = {p: self.expr(a, id, k) for (p, k), a in zip(params, arg_toks)}
        recipe = recipe_engine.lookup(id, self.cfg)
        ops, out = recipe_engine.expand(recipe, args, prefix=f"c{self.n}_")
        self.n += 1
        self.ops.extend(ops)
        return out


def _split_tokens(toks: list[Token]) -> list[list[Token]]:
    if not toks:
        return []
    parts, cur, depth = [], [], 0
    for t in toks:
        if t.kind == "punct" and t.text in _OPEN:
            depth += 1
        elif t.kind == "punct" and t.text in _CLOSE:
            depth -= 1
        if t.text == "," and depth == 0:
            parts.append(cur)
            cur = []
        else:
            cur.append(t)
    parts.append(cur)
    return parts

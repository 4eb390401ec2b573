"""Differential validation of recipes against the NEON oracle, plus op-count proxy."""

from __future__ import annotations

import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from . import neon_oracle
from .c_rewriter import IntrinsicCallSite, scan
from .errors import RecipeUnsupported
from .isa_model import ElementType, VlenConfig
from .neon_oracle import NeonIntrinsicId, VECTOR_KINDS, eval_neon
from .recipe_engine import Tier, fallback_recipe, instantiate, lookup, op_count
from .rvv_machine import exec_program
from .values import VectorValue, float_to_bits

MEMORY_SIZE = 64
PTR = 16
CANARY = 0xC3

# Pure data movement: results are compared bit-exactly, NaN payloads included.
MOVE_FAMILIES = {"ld1", "st1", "dup_n", "get_lane", "set_lane", "get_high", "get_low", "combine"}


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    intrinsic: NeonIntrinsicId
    cfg: VlenConfig
    inputs: dict
    memory: bytes
    seed: int
    label: str

    def args(self) -> list:
        return [self.inputs[p] for p, _ in self.intrinsic.spec.params]


_EXP_BITS = {16: 5, 32: 8, 64: 11}


def _inf_bits(w: int) -> int:
    return ((1 << _EXP_BITS[w]) - 1) << (w - 1 - _EXP_BITS[w])


def _float_specials(elem: ElementType) -> list[int]:
    w = elem.bit_width
    frac = w - 1 - _EXP_BITS[w]
    sign = 1 << (w - 1)
    inf = _inf_bits(w)
    qnan = inf | (1 << (frac - 1))
    snan = inf | 1
    denorm = 1
    max_finite = inf - 1
    one = float_to_bits(1.0, w)
    return [0, sign, inf, sign | inf, qnan, snan, denorm, sign | denorm, max_finite, one, sign | one]


def _edge_patterns(elem: ElementType) -> list[tuple[str, int]]:
    w = elem.bit_width
    m = elem.mask
    if elem.is_float:
        max_finite = _inf_bits(w) - 1
        lo, hi = max_finite | (1 << (w - 1)), max_finite
    elif elem.is_signed:
        lo, hi = 1 << (w - 1), (1 << (w - 1)) - 1
    else:
        lo, hi = 0, m
    return [("zero", 0), ("ones", m), ("min", lo), ("max", hi)]


def _imm_edges(id: NeonIntrinsicId, kind: str) -> tuple[int, int]:
    return id.imm_range(kind)


def _rng(id: NeonIntrinsicId, seed: int) -> random.Random:
    return random.Random(f"neon2rvv:{seed}:{id.name}")


def _random_lane(rng: random.Random, elem: ElementType) -> int:
    w = elem.bit_width
    if elem.is_float and rng.random() < 0.6:
        choice = rng.random()
        if choice < 0.15:
            return rng.choice(_float_specials(elem))
        if choice < 0.5:
            return float_to_bits(float(rng.randint(-100, 100)), w)
        return float_to_bits(rng.uniform(-1e3, 1e3) * 10.0 ** rng.randint(-8, 8), w)
    if not elem.is_float and rng.random() < 0.2:
        return rng.randint(0, 8) if rng.random() < 0.5 else elem.mask - rng.randint(0, 8)
    return rng.getrandbits(w)


def _build(id, cfg, seed, label, vec_lanes, scalar, imms, memory):
    """Assemble a TestCase; ``vec_lanes`` holds one lane list per vector param."""
    inputs = {}
    vi = 0
    for p, kind in id.spec.params:
        if kind in VECTOR_KINDS:
            t = id.type_of(kind)
            inputs[p] = VectorValue(t.elem, tuple(vec_lanes[vi][:t.lanes]))
            vi += 1
        elif kind == "scalar":
            inputs[p] = scalar
        elif kind == "ptr":
            inputs[p] = PTR
        else:
            inputs[p] = imms[kind]
    return TestCase(id, cfg, inputs, bytes(memory), seed, label)


def _memory(id, rng, fill_lanes):
    mem = bytearray([CANARY]) * MEMORY_SIZE
    if id.family == "ld1":
        t = id.type_of("vec")
        data = VectorValue(t.elem, tuple(fill_lanes[:t.lanes])).to_bytes()
        mem[PTR:PTR + len(data)] = data
    return mem


def gen_cases(id, cfg: VlenConfig, n: int, seed: int) -> list[TestCase]:
    """``n`` deterministic cases; mandatory edge cases come before random ones."""
    if n < 1:
        raise ValueError("n must be >= 1")
    id = neon_oracle.by_name(id) if isinstance(id, str) else id
    elem = id.elem
    lanes = id.lanes
    nvec = sum(1 for _, k in id.spec.params if k in VECTOR_KINDS)
    imm_kinds = [k for _, k in id.spec.params if k in ("imm", "lane")]
    rng = _rng(id, seed)
    cases: list[TestCase] = []

    def imms(i):
        out = {}
        for k in imm_kinds:
            lo, hi = _imm_edges(id, k)
            out[k] = (lo, hi)[i % 2] if i < 4 else rng.randint(lo, hi)
        return out

    edges = _edge_patterns(elem)
    plans = []
    for name, pattern in edges:
        plans.append((name, [[pattern] * lanes for _ in range(nvec)], pattern))
    if nvec >= 2:
        lo, hi = edges[2][1], edges[3][1]
        plans.append(("min-max", [[lo] * lanes, [hi] * lanes] + [[lo] * lanes] * (nvec - 2), lo))
        plans.append(("max-min", [[hi] * lanes, [lo] * lanes] + [[hi] * lanes] * (nvec - 2), hi))
    if elem.is_float:
        sp = _float_specials(elem)
        for k in range(len(sp)):
            vecs = [[sp[(i + k * (j + 1) + j) % len(sp)] for i in range(lanes)] for j in range(nvec)]
            plans.append((f"float-specials-{k}", vecs, sp[k]))

    for i, (label, vecs, scalar) in enumerate(plans):
        if len(cases) >= n:
            break
        fill = vecs[0] if vecs else [scalar] * lanes
        cases.append(_build(id, cfg, seed, label, vecs, scalar, imms(i), _memory(id, rng, fill)))

    while len(cases) < n:
        i = len(cases)
        vecs = []
        for j in range(nvec):
            lanes_j = [_random_lane(rng, elem) for _ in range(lanes)]
            if j > 0:
                # share some lanes so equality comparisons see both outcomes
                lanes_j = [vecs[0][k] if rng.random() < 0.25 else x for k, x in enumerate(lanes_j)]
            vecs.append(lanes_j)
        scalar = _random_lane(rng, elem)
        fill = [_random_lane(rng, elem) for _ in range(lanes)]
        cases.append(_build(id, cfg, seed, f"random-{i}", vecs, scalar, imms(i), _memory(id, rng, fill)))
    return cases


def exhaustive_rbit_cases(id: NeonIntrinsicId, cfg: VlenConfig) -> list[TestCase]:
    """256 cases; across them every lane position takes every byte value."""
    lanes = id.lanes
    out = []
    for k in range(256):
        vec = [(k + i * 37) & 0xFF for i in range(lanes)]
        out.append(_build(id, cfg, 0, f"rbit-exhaustive-{k}", [vec], 0, {}, bytearray(MEMORY_SIZE)))
    return out


# --- comparison ---------------------------------------------------------------

def _normalise(id: NeonIntrinsicId, value):
    if isinstance(value, VectorValue) and id.family not in MOVE_FAMILIES:
        return value.canonical()
    return value


def _show(value):
    if value is None:
        return None
    if isinstance(value, VectorValue):
        return str(value)
    return hex(value)


def _run_recipe(recipe, case):
    cfg = case.cfg
    program = instantiate(recipe, cfg, dict(case.inputs))
    mem = bytearray(case.memory)
    outputs, stats = exec_program(program, cfg, mem)
    return program.result(outputs), mem, stats.dynamic_op_count


@dataclass
class DiffEntry:
    intrinsic: str
    vlen: int
    zvfh: bool
    tier: str
    cases_run: int = 0
    mismatches: int = 0
    first_counterexample: dict | None = None
    customized_ops: int | None = None
    fallback_ops: int | None = None
    op_ratio: float | None = None
    skip_reason: str | None = None
    conversion_method: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def run_diff(id, cfg: VlenConfig, cases: Sequence[TestCase]) -> DiffEntry:
    """Compare oracle vs customized recipe vs forced fallback on every case."""
    id = neon_oracle.by_name(id) if isinstance(id, str) else id
    recipe = lookup(id, cfg)
    if recipe.tier is Tier.UNSUPPORTED:
        raise RecipeUnsupported(f"{id.name}: {recipe.reason}")
    fallback = fallback_recipe(id)
    entry = DiffEntry(id.name, cfg.vlen_bits, cfg.zvfh, recipe.tier.value, conversion_method=recipe.conversion_method)
    if not recipe.tier.customized:
        entry.skip_reason = recipe.reason

    cust_ops = fb_ops = 0
    for idx, case in enumerate(cases):
        mem_ref = bytearray(case.memory)
        expected = _normalise(id, eval_neon(id, case.args(), mem_ref))
        sides = [("fallback", fallback)]
        if recipe.tier.customized:
            sides.insert(0, ("customized", recipe))
        bad = None
        for side, r in sides:
            got, mem, ops = _run_recipe(r, case)
            got = _normalise(id, got)
            if side == "customized":
                cust_ops += ops
            else:
                fb_ops += ops
            if bad is None and (got != expected or mem != mem_ref):
                bad = {
                    "case": idx,
                    "label": case.label,
                    "side": side,
                    "inputs": {k: _show(v) for k, v in case.inputs.items()},
                    "expected": _show(expected),
                    "got": _show(got),
                    "memory_ok": mem == mem_ref,
                }
        entry.cases_run += 1
        if bad is not None:
            entry.mismatches += 1
            if entry.first_counterexample is None:
                entry.first_counterexample = bad

    if entry.cases_run:
        entry.fallback_ops = fb_ops // entry.cases_run
        if recipe.tier.customized:
            entry.customized_ops = cust_ops // entry.cases_run
            entry.op_ratio = round(entry.fallback_ops / entry.customized_ops, 4)
    else:
        entry.fallback_ops = op_count(fallback)
    return entry


@dataclass
class DiffReport:
    entries: list[DiffEntry] = field(default_factory=list)
    seed: int = 0
    cases_per_cell: int = 0

    @property
    def total_mismatches(self) -> int:
        return sum(e.mismatches for e in self.entries)

    @property
    def ok(self) -> bool:
        return self.total_mismatches == 0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "cases_per_cell": self.cases_per_cell,
            "total_mismatches": self.total_mismatches,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary_text(self) -> str:
        head = f"{'intrinsic':<20} {'vlen':>5} {'tier':<10} {'cases':>6} {'mismatch':>8} {'op_ratio':>8}"
        lines = [head, "-" * len(head)]
        for e in self.entries:
            ratio = f"{e.op_ratio:.2f}" if e.op_ratio is not None else "-"
            vlen = f"{e.vlen}{'h' if e.zvfh else ''}"
            lines.append(f"{e.intrinsic:<20} {vlen:>5} {e.tier:<10} {e.cases_run:>6} {e.mismatches:>8} {ratio:>8}")
        lines.append(f"total mismatches: {self.total_mismatches}")
        return "\n".join(lines) + "\n"


def run_cell(id: NeonIntrinsicId, cfg: VlenConfig, n: int, seed: int, exhaustive_rbit: bool = True) -> DiffEntry:
    recipe = lookup(id, cfg)
    if recipe.tier is Tier.UNSUPPORTED:
        return DiffEntry(id.name, cfg.vlen_bits, cfg.zvfh, recipe.tier.value, skip_reason=recipe.reason)
    cases = gen_cases(id, cfg, n, seed)
    if exhaustive_rbit and id.family == "rbit":
        cases += exhaustive_rbit_cases(id, cfg)
    return run_diff(id, cfg, cases)


def _cell_worker(job):
    name, vlen, zvfh, n, seed, exhaustive = job
    return run_cell(neon_oracle.by_name(name), VlenConfig(vlen, zvfh), n, seed, exhaustive)


def run_matrix(catalog: Iterable[NeonIntrinsicId], cfgs: Sequence[VlenConfig], n: int, seed: int,
               jobs: int = 1, exhaustive_rbit: bool = True) -> DiffReport:
    """Every (intrinsic, cfg) cell, ordered by catalog order then cfg order."""
    if not cfgs:
        raise ValueError("at least one VlenConfig is required")
    ids = list(catalog)
    cells = [(i.name, c.vlen_bits, c.zvfh, n, seed, exhaustive_rbit) for i in ids for c in cfgs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_cell_worker, cells, chunksize=8))
    else:
        entries = [_cell_worker(c) for c in cells]
    return DiffReport(entries, seed, n)


def check_file(source: str, cfgs: Sequence[VlenConfig], n: int, seed: int, jobs: int = 1) -> DiffReport:
    """Run the matrix over the distinct intrinsics called in one C source."""
    ids = []
    for site in scan(source):
        if isinstance(site, IntrinsicCallSite) and site.id not in ids:
            ids.append(site.id)
    return run_matrix(ids, cfgs, n, seed, jobs=jobs)

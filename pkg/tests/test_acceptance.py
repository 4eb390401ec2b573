"""Primary acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or directly as a script.
"""

import json
import random
import sys
import time
from pathlib import Path

from neon2rvv import c_rewriter
from neon2rvv.cli import main as cli_main
from neon2rvv.diff_harness import CANARY, MEMORY_SIZE, PTR
from neon2rvv.isa_model import ElementType, VlenConfig, mapping_records
from neon2rvv.neon_oracle import by_name, catalog, reverse_bits_naive
from neon2rvv.recipe_engine import Tier, fallback_recipe, instantiate, lookup
from neon2rvv.rvv_machine import exec_program
from neon2rvv.values import VectorValue

FIXTURES = Path(__file__).parent / "fixtures"
SEED = 7
TIME_BUDGET_S = 300.0


def report(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    capture = getattr(report, "capsys", None)
    if capture is not None:
        with capture.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


def _run(recipe, cfg, bindings, memory=None):
    program = instantiate(recipe, cfg, bindings)
    mem = bytearray(memory or b"")
    outputs, stats = exec_program(program, cfg, mem)
    return program.result(outputs), mem, stats.dynamic_op_count


def check_differential_soundness(tmp: Path):
    out = tmp / "check.json"
    start = time.perf_counter()
    code = cli_main(["check", "--vlen", "64,128,256", "--cases", "1000", "--seed", str(SEED),
                     "--out", str(out)])
    elapsed = time.perf_counter() - start
    data = json.loads(out.read_text())
    cells = len(data["entries"])
    ok = code == 0 and data["total_mismatches"] == 0 and cells == 3 * len(catalog()) and elapsed < TIME_BUDGET_S
    report("differential-soundness", ok,
           f"{cells} cells, {data['total_mismatches']} mismatches, exit {code}, {elapsed:.0f}s")


def check_type_table():
    got = {}
    for zvfh in (True, False):
        for vlen in (32, 64, 128):
            rows = mapping_records(VlenConfig(vlen, zvfh))
            got[(vlen, zvfh)] = (len(rows), sum(r["mapped"] for r in rows))
    f16 = [r for r in mapping_records(VlenConfig(128, False)) if r["neon_type"].startswith("float16")]
    ok = ([got[(v, True)] for v in (32, 64, 128)] == [(22, 0), (22, 11), (22, 22)]
          and got[(128, False)] == (22, 22 - len(f16))
          and f16 and all(r["reason"] == "missing-zvfh" for r in f16))
    report("type-table-reproduction", ok,
           f"zvfh mapped {[got[(v, True)][1] for v in (32, 64, 128)]}, "
           f"no-zvfh vlen128 {got[(128, False)][1]} ({len(f16)} f16 rows unmapped)")


def check_rbit():
    cfg = VlenConfig(128)
    rng = random.Random(SEED)
    checked = bad = 0
    for name in ("vrbit_u8", "vrbitq_u8", "vrbit_s8", "vrbitq_s8"):
        id = by_name(name)
        recipe = lookup(id, cfg)
        elem = id.elem
        lanes = id.result_type().lanes
        if recipe.tier is Tier.FALLBACK:
            bad += 1
            continue
        for pos in range(lanes):
            for byte in range(256):
                bits = [rng.randrange(256) for _ in range(lanes)]
                bits[pos] = byte
                got, _, _ = _run(recipe, cfg, {"a": VectorValue(elem, tuple(bits))})
                checked += 1
                if got.bits[pos] != reverse_bits_naive(byte, 8):
                    bad += 1
        for _ in range(1000):
            a = VectorValue(elem, tuple(rng.randrange(256) for _ in range(lanes)))
            once, _, _ = _run(recipe, cfg, {"a": a})
            twice, _, _ = _run(recipe, cfg, {"a": once})
            bad += twice.bits != a.bits
    report("rbit-exhaustive", bad == 0, f"{checked} lane probes + 4000 involution vectors, {bad} failures")


STORE_SRC = """\
#include <arm_neon.h>
int32_t lo[4] = { -1010580541, -1010580541, -1010580541, -1010580541 };
int32_t dst[4] = { 0, 0, 0, 0 };
int32_t hi[4] = { -1010580541, -1010580541, -1010580541, -1010580541 };
int32_t src[4] = { 1, 2, 3, 4 };
int main(void) {
    int32x4_t v = vld1q_s32(src);
    vst1q_s32(dst, v);
    return 0;
}
"""


def check_store_framing():
    cfg = VlenConfig(256)
    before = c_rewriter.replay(STORE_SRC.replace("vst1q_s32(dst, v);", ""), cfg).memory
    after = c_rewriter.replay(STORE_SRC, cfg)
    changed = [i for i, (x, y) in enumerate(zip(before, after.memory)) if x != y]
    replay_ok = (len(before) == len(after.memory) and after.arrays["dst"] == [1, 2, 3, 4]
                 and after.arrays["lo"] == after.arrays["hi"] == [-1010580541] * 4
                 and len(changed) <= 16 and all(16 + 16 <= i < 16 + 32 for i in changed))

    # the same store on a canary-filled buffer, bytes compared one by one
    recipe = lookup("vst1q_s32", cfg)
    val = VectorValue.from_ints(ElementType.I32, [-1, -1, -1, -1])
    _, mem, _ = _run(recipe, cfg, {"ptr": PTR, "val": val}, bytes([CANARY]) * MEMORY_SIZE)
    written = [i for i in range(MEMORY_SIZE) if mem[i] != CANARY]
    direct_ok = written == list(range(PTR, PTR + 16))

    text, _ = c_rewriter.translate(STORE_SRC, cfg)
    ok = replay_ok and direct_ok and "__riscv_vse32_v_i32m1(dst, v, 4)" in text
    report("store-framing", ok,
           f"vlen=256 store touched {len(written)} bytes at [{written[0]}..{written[-1]}], canaries intact={direct_ok}")


def check_round_trip(tmp: Path):
    cfg = VlenConfig(128)
    src = (FIXTURES / "vector_add.c").read_text()
    text, plan = c_rewriter.translate(src, cfg)
    result = c_rewriter.replay(src, cfg)
    names = [n for s in plan.sites for n in s.rendered]
    want = ["__riscv_vle32_v_i32m1", "__riscv_vle32_v_i32m1", "__riscv_vadd_vv_i32m1", "__riscv_vse32_v_i32m1"]
    ok = (result.arrays["A"] == [4, 6, 8, 10] and result.opcodes == ["vle", "vle", "vadd_vv", "vse"]
          and names == want and all(n in text for n in want) and c_rewriter.scan(text) == [])
    report("vector-add-round-trip", ok, f"A={result.arrays['A']}, ops={result.opcodes}")


def check_op_ratio():
    cfg = VlenConfig(128)
    ratios = {}
    for id in catalog():
        recipe = lookup(id, cfg)
        if not recipe.tier.customized:
            continue
        bindings = _sample_bindings(id, cfg)
        _, _, cust = _run(recipe, cfg, bindings[0], bindings[1])
        _, _, fb = _run(fallback_recipe(id), cfg, bindings[0], bindings[1])
        ratios[id.name] = fb / cust
    showcase = {n: ratios.get(n) for n in ("vceqq_s32", "vget_high_s32", "vrbitq_u8")}
    low = sorted(n for n, r in ratios.items() if r < 1.0)
    ok = not low and all(r is not None and r > 1.0 for r in showcase.values())
    shown = ", ".join(f"{n}={r:.2f}" for n, r in showcase.items() if r is not None)
    report("op-ratio-direction", ok, f"{len(ratios)} customized, min {min(ratios.values()):.2f}, {shown}"
           + (f", below 1: {low[:5]}" if low else ""))


def _sample_bindings(id, cfg):
    from neon2rvv.diff_harness import gen_cases
    case = gen_cases(id, cfg, 1, SEED)[0]
    return dict(case.inputs), case.memory


def check_rewriter_fixed_point():
    corpus = sorted(p for p in FIXTURES.glob("*.c") if not p.name.endswith(".rvv.c"))
    failures = []
    for path in corpus:
        src = path.read_text()
        for cfg in (VlenConfig(128, True), VlenConfig(256, False)):
            out, plan = c_rewriter.translate(src, cfg)
            residue = c_rewriter.scan(out) if plan.passthrough == 0 else []
            if residue or c_rewriter.translate(out, cfg)[0] != out or not _preserved(src, out, plan):
                failures.append(f"{path.name}@{cfg.vlen_bits}")
    traps = {"comments_strings.c", "macros.c"} <= {p.name for p in corpus}
    ok = len(corpus) >= 10 and traps and not failures
    report("rewriter-fixed-point", ok, f"{len(corpus)} files x 2 configs, failures={failures}")


def _preserved(src, out, plan):
    # walk substitutions in order; everything between them must be copied verbatim
    pos = 0
    cursor = len(plan.prelude) if plan.prelude and out.startswith(plan.prelude) else 0
    for sub in sorted(plan.substitutions, key=lambda s: s.start):
        gap = src[pos:sub.start]
        if out[cursor:cursor + len(gap)] != gap:
            return False
        cursor += len(gap)
        if out[cursor:cursor + len(sub.text)] != sub.text:
            return False
        cursor += len(sub.text)
        pos = sub.end
    return out[cursor:] == src[pos:]


# --- pytest entry points ---------------------------------------------------------

def _bind(capsys):
    report.capsys = capsys


def test_differential_soundness(tmp_path, capsys):
    _bind(capsys)
    check_differential_soundness(tmp_path)


def test_type_table_reproduction(capsys):
    _bind(capsys)
    check_type_table()


def test_rbit_exhaustive(capsys):
    _bind(capsys)
    check_rbit()


def test_store_framing(capsys):
    _bind(capsys)
    check_store_framing()


def test_vector_add_round_trip(tmp_path, capsys):
    _bind(capsys)
    check_round_trip(tmp_path)


def test_op_ratio_direction(capsys):
    _bind(capsys)
    check_op_ratio()


def test_rewriter_fixed_point(capsys):
    _bind(capsys)
    check_rewriter_fixed_point()


if __name__ == "__main__":
    import tempfile
    failed = 0
    with tempfile.TemporaryDirectory() as d:
        for fn, args in [(check_differential_soundness, (Path(d),)), (check_type_table, ()), (check_rbit, ()),
                         (check_store_framing, ()), (check_round_trip, (Path(d),)), (check_op_ratio, ()),
                         (check_rewriter_fixed_point, ())]:
            try:
                fn(*args)
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)

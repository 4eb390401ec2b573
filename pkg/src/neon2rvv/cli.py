"""``neon2rvv`` command line: translate, check, mappings, coverage, bench-proxy.

Exit status is 1 on a mismatch (check) or a strict-mode violation
(translate), 2 on I/O or usage errors, 0 otherwise.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from collections import Counter
from pathlib import Path

from . import c_rewriter, diff_harness, neon_oracle, recipe_engine
from .errors import LexError, Neon2RvvError, UnmappableType, UnsupportedSite
from .isa_model import VlenConfig, mapping_records

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2
DEFAULT_CHECK_VLENS = "64,128,256"


class UsageError(Exception):
    pass


def _vlens(text: str | None, default: str) -> list[int]:
    text = text or os.environ.get("NEON2RVV_VLEN") or default
    try:
        out = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--vlen expects comma-separated integers, got {text!r}") from None
    if not out:
        raise UsageError("--vlen is empty")
    return out


def _cfgs(args, default: str) -> list[VlenConfig]:
    try:
        return [VlenConfig(v, args.zvfh) for v in _vlens(args.vlen, default)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _only(args) -> list:
    if not args.only:
        return neon_oracle.catalog()
    ids = []
    for name in args.only.split(","):
        found = neon_oracle.lookup_name(name.strip())
        if found is None:
            raise UsageError(f"--only: {name.strip()} is not in the catalog")
        ids.append(found)
    return ids


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- commands -----------------------------------------------------------------

def cmd_translate(args) -> int:
    if not args.paths:
        raise UsageError("translate needs at least one input file")
    vlens = _vlens(args.vlen, "128")
    if len(vlens) != 1:
        raise UsageError("translate targets a single --vlen")
    try:
        cfg = VlenConfig(vlens[0], args.zvfh)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mode = c_rewriter.Mode.STRICT if args.strict else c_rewriter.Mode.PERMISSIVE
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    status = EXIT_OK
    summary = []
    for path in args.paths:
        src_path = Path(path)
        source = src_path.read_text(encoding="utf-8")
        name = src_path.name[:-2] if src_path.name.endswith(".c") else src_path.name
        dest = (out_dir or src_path.parent) / f"{name}.rvv.c"
        try:
            text, rewrite = c_rewriter.translate(source, cfg, mode, path=str(src_path))
        except (UnmappableType, UnsupportedSite) as exc:
            rewrite = exc.context["plan"]
            for d in rewrite.diagnostics:
                print(d.format(str(src_path)), file=sys.stderr)
            summary.append({"path": str(src_path), "output": None, "sites": len(rewrite.sites),
                            "errors": len(rewrite.errors)})
            status = EXIT_FAIL
            continue
        except LexError as exc:
            off = exc.context.get("offset", 0)
            line = source.count("\n", 0, off) + 1
            col = off - (source.rfind("\n", 0, off) + 1) + 1
            print(f"{src_path}:{line}:{col}: error: {exc}", file=sys.stderr)
            summary.append({"path": str(src_path), "output": None, "sites": 0, "errors": 1})
            status = EXIT_FAIL
            continue
        for d in rewrite.diagnostics:
            print(d.format(str(src_path)), file=sys.stderr)
        dest.write_text(text, encoding="utf-8")
        summary.append({"path": str(src_path), "output": str(dest), "sites": len(rewrite.sites),
                        "errors": len(rewrite.errors)})
    if args.format == "json":
        sys.stdout.write(_json({"vlen": cfg.vlen_bits, "zvfh": cfg.zvfh, "files": summary}))
    else:
        for s in summary:
            where = s["output"] or "(not written)"
            print(f"{s['path']} -> {where}: {s['sites']} call sites, {s['errors']} errors")
    return status


def cmd_check(args) -> int:
    cfgs = _cfgs(args, DEFAULT_CHECK_VLENS)
    if args.paths:
        if args.only:
            raise UsageError("--only and input files are mutually exclusive")
        entries = []
        for path in args.paths:
            report = diff_harness.check_file(Path(path).read_text(encoding="utf-8"), cfgs, args.cases, args.seed,
                                             jobs=args.jobs)
            entries += [e for e in report.entries if e not in entries]
        report = diff_harness.DiffReport(entries, args.seed, args.cases)
    else:
        report = diff_harness.run_matrix(_only(args), cfgs, args.cases, args.seed, jobs=args.jobs)
    _emit(args, report.to_json() if args.format == "json" else report.summary_text())
    if args.plot:
        _plot_dir(args.plot)
        from .plotting import plot_op_ratios
        plot_op_ratios(report.entries, Path(args.plot) / "op_ratio.png")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_mappings(args) -> int:
    cfgs = _cfgs(args, "128")
    if args.recipes:
        ids = _only(args)
        tables = {c.vlen_bits: [recipe_engine.lookup(i, c).to_record() for i in ids] for c in cfgs}
    else:
        tables = {c.vlen_bits: mapping_records(c) for c in cfgs}
    if args.format == "json":
        body = tables[cfgs[0].vlen_bits] if len(cfgs) == 1 else {str(k): v for k, v in tables.items()}
        _emit(args, _json(body))
        return EXIT_OK
    lines = []
    for vlen, rows in tables.items():
        lines.append(f"# vlen={vlen}{' zvfh' if args.zvfh else ''}")
        for r in rows:
            if args.recipes:
                lines.append(f"{r['neon_name']:<18} {r['tier']:<10} {' '.join(r['rvv_opcodes']) or '-'}")
            else:
                target = r["rvv_type"] if r["mapped"] else f"- ({r['reason']})"
                lines.append(f"{r['neon_type']:<14} {target}")
        if args.recipes:
            done = sum(r["tier"] in ("direct", "composite") for r in rows)
            lines.append(f"customized: {done}/{len(rows)}")
        else:
            lines.append(f"mapped: {sum(r['mapped'] for r in rows)}/{len(rows)}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def coverage_table(cfg: VlenConfig, ids=None) -> dict:
    ids = neon_oracle.catalog() if ids is None else ids
    tiers: dict[str, list[str]] = {t.value: [] for t in recipe_engine.Tier}
    for i in ids:
        tiers[recipe_engine.lookup(i, cfg).tier.value].append(i.name)
    return {
        "vlen": cfg.vlen_bits,
        "zvfh": cfg.zvfh,
        "total": len(ids),
        "counts": {k: len(v) for k, v in tiers.items()},
        "tiers": tiers,
    }


def cmd_coverage(args) -> int:
    cfgs = _cfgs(args, "128")
    ids = _only(args)
    tables = [coverage_table(c, ids) for c in cfgs]
    if args.format == "json":
        _emit(args, _json(tables[0] if len(tables) == 1 else tables))
    else:
        lines = []
        for t in tables:
            counts = ", ".join(f"{k}={v}" for k, v in t["counts"].items())
            lines.append(f"vlen={t['vlen']}: {t['total']} intrinsics ({counts})")
        _emit(args, "\n".join(lines) + "\n")
    if args.plot:
        _plot_dir(args.plot)
        from .plotting import plot_coverage
        plot_coverage({t["vlen"]: t["counts"] for t in tables}, Path(args.plot) / "coverage.png")
    return EXIT_OK


def cmd_bench_proxy(args) -> int:
    cfgs = _cfgs(args, "128")
    report = diff_harness.run_matrix(_only(args), cfgs, args.cases, args.seed, jobs=args.jobs,
                                     exhaustive_rbit=False)
    rows = [{
        "intrinsic": e.intrinsic, "vlen": e.vlen, "tier": e.tier,
        "customized_ops": e.customized_ops, "fallback_ops": e.fallback_ops, "op_ratio": e.op_ratio,
    } for e in report.entries]
    ratios = [r["op_ratio"] for r in rows if r["op_ratio"] is not None]
    geomean = math.exp(sum(map(math.log, ratios)) / len(ratios)) if ratios else None
    summary = {
        "customized": len(ratios),
        "geomean_op_ratio": round(geomean, 4) if geomean else None,
        "min_op_ratio": min(ratios, default=None),
        "max_op_ratio": max(ratios, default=None),
        "tiers": dict(sorted(Counter(r["tier"] for r in rows).items())),
    }
    if args.format == "json":
        _emit(args, _json({"rows": rows, "summary": summary}))
    else:
        head = f"{'intrinsic':<20} {'vlen':>5} {'tier':<10} {'cust':>5} {'fallback':>8} {'ratio':>7}"
        lines = [head, "-" * len(head)]
        for r in rows:
            ratio = f"{r['op_ratio']:.2f}" if r["op_ratio"] is not None else "-"
            cust = r["customized_ops"] if r["customized_ops"] is not None else "-"
            lines.append(f"{r['intrinsic']:<20} {r['vlen']:>5} {r['tier']:<10} {cust:>5} {r['fallback_ops']:>8} {ratio:>7}")
        if geomean:
            lines.append(f"geomean op_ratio over {len(ratios)} customized cells: {geomean:.3f}")
        _emit(args, "\n".join(lines) + "\n")
    if args.plot:
        _plot_dir(args.plot)
        from .plotting import plot_op_ratios
        plot_op_ratios(report.entries, Path(args.plot) / "op_ratio.png")
    return EXIT_OK


def _plot_dir(path: str) -> None:
    # plotting (and matplotlib) is imported lazily by the commands that need it
    Path(path).mkdir(parents=True, exist_ok=True)


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--vlen", help="vlen in bits; comma list where a command sweeps "
                                       "(default: $NEON2RVV_VLEN, else 128; check sweeps 64,128,256)")
    common.add_argument("--zvfh", action="store_true", help="assume the Zvfh half-precision extension")
    common.add_argument("--format", choices=("json", "text"), help="report format (default: json; text for translate)")
    common.add_argument("--out", help="output file (output directory for translate)")

    matrix = argparse.ArgumentParser(add_help=False)
    matrix.add_argument("--seed", type=int, default=7)
    matrix.add_argument("--cases", type=int, help="random cases per (intrinsic, vlen) cell (default: 1000; 4 for bench-proxy)")
    matrix.add_argument("--only", help="comma list of intrinsic names")
    matrix.add_argument("--jobs", type=int, default=1, help="worker processes for the matrix")

    p = argparse.ArgumentParser(prog="neon2rvv", description="Translate NEON intrinsics to RVV and validate the recipes.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("translate", parents=[common], help="rewrite C files to RVV intrinsics")
    t.add_argument("paths", nargs="*")
    t.add_argument("--strict", action="store_true", help="fail on unmappable types and fallback or unsupported sites")
    t.set_defaults(func=cmd_translate)

    c = sub.add_parser("check", parents=[common, matrix], help="differential check of recipes against the oracle")
    c.add_argument("paths", nargs="*", help="restrict to intrinsics called in these C files")
    c.add_argument("--plot", metavar="DIR", help="also write op_ratio.png into DIR")
    c.set_defaults(func=cmd_check)

    m = sub.add_parser("mappings", parents=[common], help="type-mapping database")
    m.add_argument("--recipes", action="store_true", help="export per-intrinsic recipe records instead")
    m.add_argument("--only", help="comma list of intrinsic names (with --recipes)")
    m.set_defaults(func=cmd_mappings)

    cv = sub.add_parser("coverage", parents=[common], help="catalog intrinsics by tier")
    cv.add_argument("--only", help="comma list of intrinsic names")
    cv.add_argument("--plot", metavar="DIR", help="also write coverage.png into DIR")
    cv.set_defaults(func=cmd_coverage)

    b = sub.add_parser("bench-proxy", parents=[common, matrix], help="customized vs fallback op-count ratios")
    b.add_argument("--plot", metavar="DIR", help="also write op_ratio.png into DIR")
    b.set_defaults(func=cmd_bench_proxy)
    return p


# Subparsers share the parent parsers' actions, so per-command defaults are
# filled in here rather than with set_defaults.
_FORMAT_DEFAULT = {"translate": "text"}
_CASES_DEFAULT = {"check": 1000, "bench-proxy": 4}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = _FORMAT_DEFAULT.get(args.command, "json")
    if getattr(args, "cases", 0) is None:
        args.cases = _CASES_DEFAULT[args.command]
    if getattr(args, "cases", 1) < 1:
        parser.error("--cases must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"neon2rvv {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"neon2rvv {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except Neon2RvvError as exc:
        print(f"neon2rvv {args.command}: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

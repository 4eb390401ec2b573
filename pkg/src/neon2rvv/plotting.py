"""Report figures. Uses the Agg backend, so nothing needs a display."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import neon_oracle  # noqa: E402


def family_ratios(entries) -> dict[int, dict[str, float]]:
    """Geometric-mean op_ratio per family, keyed by vlen."""
    logs: dict[int, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for e in entries:
        if e.op_ratio is None:
            continue
        fam = neon_oracle.by_name(e.intrinsic).family
        logs[e.vlen][fam].append(math.log(e.op_ratio))
    return {v: {f: math.exp(sum(xs) / len(xs)) for f, xs in fams.items()} for v, fams in sorted(logs.items())}


def plot_op_ratios(entries, path) -> Path:
    """Grouped bars of customized-vs-fallback op ratio per family."""
    per_vlen = family_ratios(entries)
    families = [f for f in neon_oracle.FAMILIES if any(f in r for r in per_vlen.values())]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(families) + 2), 4))
    width = 0.8 / max(1, len(per_vlen))
    for k, (vlen, ratios) in enumerate(per_vlen.items()):
        xs = [i + k * width for i in range(len(families))]
        ax.bar(xs, [ratios.get(f, 0.0) for f in families], width, label=f"vlen={vlen}")
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(families))])
    ax.set_xticklabels(families, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("fallback ops / customized ops")
    ax.set_title("Dynamic op-count ratio (geometric mean per family)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_coverage(counts: dict[int, dict[str, int]], path) -> Path:
    """Stacked bars of catalog intrinsics by tier for each vlen."""
    tiers = ["direct", "composite", "fallback", "unsupported"]
    vlens = sorted(counts)
    fig, ax = plt.subplots(figsize=(5, 4))
    bottom = [0] * len(vlens)
    for tier in tiers:
        heights = [counts[v].get(tier, 0) for v in vlens]
        ax.bar([str(v) for v in vlens], heights, bottom=bottom, label=tier)
        bottom = [b + h for b, h in zip(bottom, heights)]
    ax.set_xlabel("vlen (bits)")
    ax.set_ylabel("intrinsics")
    ax.set_title("Catalog coverage by tier")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

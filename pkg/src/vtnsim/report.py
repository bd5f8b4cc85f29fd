"""Figure rendering for sweep results and training curves.

Renders matplotlib figures next to the delimited output: average
latency and offloading percentage against network size (one figure per
data rate, one line per task-size/authentication combination), plus the
per-iteration reward curve for training runs.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sweep import ResultRow

_LINE_STYLES = {"with": "-", "without": "--"}


def _label_size(size_bytes: float) -> str:
    if size_bytes >= 1e6:
        return f"{size_bytes / 1e6:g} MB"
    if size_bytes >= 1e3:
        return f"{size_bytes / 1e3:g} KB"
    return f"{size_bytes:g} B"


def _series(rows: Sequence[ResultRow], rate: float, size: float, ibc: str,
            metric: str):
    cells = [r for r in rows
             if r.rate_mbps == rate and r.task_size_bytes == size and r.ibc_mode == ibc]
    ns = sorted({r.n for r in cells})
    means = []
    for n in ns:
        vals = [getattr(r, metric) for r in cells if r.n == n]
        means.append(sum(vals) / len(vals))
    return ns, means


def _metric_figure(rows: Sequence[ResultRow], rate: float, metric: str,
                   ylabel: str, path: Path) -> Path:
    sizes = sorted({r.task_size_bytes for r in rows})
    modes = [m for m in ("without", "with")
             if any(r.ibc_mode == m for r in rows)]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for size in sizes:
        for mode in modes:
            ns, means = _series(rows, rate, size, mode, metric)
            if not ns:
                continue
            ax.plot(ns, means, marker="o", linestyle=_LINE_STYLES[mode],
                    label=f"{_label_size(size)} ({'w' if mode == 'with' else 'w/o'} auth)")
    ax.set_xlabel("network size n (vehicles)")
    ax.set_ylabel(ylabel)
    ax.set_title(f"{ylabel} at {rate:g} Mbps")
    if len(sizes) > 1:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_figures(rows: Sequence[ResultRow], out_dir) -> List[Path]:
    """Latency and offloading figures, one pair per data rate in the rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for rate in sorted({r.rate_mbps for r in rows}):
        paths.append(_metric_figure(
            rows, rate, "avg_latency_ms", "average latency (ms)",
            out_dir / f"latency_vs_n_{int(rate)}mbps.png"))
        paths.append(_metric_figure(
            rows, rate, "offload_pct", "offloading percentage",
            out_dir / f"offload_pct_vs_n_{int(rate)}mbps.png"))
    return paths


def render_training_curve(curve: Sequence[float], out_dir) -> Path:
    """Per-iteration mean reward of a training run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(range(1, len(curve) + 1), curve)
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean reward (-seconds)")
    ax.set_title("training reward curve")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = out_dir / "training_curve.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

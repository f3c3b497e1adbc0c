"""Report writers: delimited output plus matplotlib figures rendered to files.

Every benchmark or prediction command writes CSV (and a JSON mirror) and, by
default, a PNG figure next to it with the same stem.  Times are integer
nanoseconds throughout.
"""

from __future__ import annotations

import json
import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

BENCH_HEADER = [
    "workers", "strategy", "circuit", "backend", "mean_time", "sd", "ci95",
    "work", "depth", "imbalance", "speedup_vs_serial", "bound", "n", "k", "seed",
]

PREDICT_HEADER = [
    "n", "p", "strategy", "circuit",
    "depth", "work", "d_local1", "d_global", "d_local2",
    "w_local1", "w_global", "w_local2", "bound_scan", "bound_full",
]


def format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if v is None:
        return ""
    return str(v)


def write_csv(path: str, header: Sequence, rows: Sequence) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(row.get(col)) for col in header) + "\n")


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _stem(path: str) -> str:
    base, _ext = os.path.splitext(path)
    return base


def report_paths(out: str) -> dict:
    stem = _stem(out)
    return {"csv": stem + ".csv", "json": stem + ".json", "png": stem + ".png"}


def _series(rows, key):
    groups = {}
    for row in rows:
        groups.setdefault((row["strategy"], row["circuit"]), []).append(row)
    for rs in groups.values():
        rs.sort(key=lambda r: r[key])
    return groups


def plot_strong(rows: Sequence, path: str, title: str = "strong scaling") -> None:
    """Measured speedups per variant with the analytic bound dashed."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (strategy, circuit), rs in _series(rows, "workers").items():
        xs = [r["workers"] for r in rs]
        ax.plot(xs, [r["speedup_vs_serial"] for r in rs], "o-",
                label=f"{strategy}/{circuit}")
    bounds = {}
    for row in rows:
        bounds.setdefault(row["workers"], row["bound"])
    xs = sorted(bounds)
    ax.plot(xs, [bounds[x] for x in xs], "k--", label="bound")
    ax.set_xlabel("workers")
    ax.set_ylabel("speedup vs serial")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_weak(rows: Sequence, path: str, title: str = "weak scaling") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (strategy, circuit), rs in _series(rows, "k").items():
        xs = [r["k"] for r in rs]
        ax.plot(xs, [r["mean_time"] for r in rs], "o-", label=f"{strategy}/{circuit}")
    ax.set_xlabel("scale factor k (n and ranks)")
    ax.set_ylabel("time [ns]")
    ax.set_xscale("log", base=2)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_predict(rows: Sequence, path: str, title: str = "depth and bounds") -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2))
    groups = {}
    for row in rows:
        groups.setdefault((row["strategy"], row["circuit"]), []).append(row)
    for (strategy, circuit), rs in groups.items():
        rs.sort(key=lambda r: r["p"])
        xs = [r["p"] for r in rs]
        ax1.plot(xs, [r["depth"] for r in rs], "o-", label=f"{strategy}/{circuit}")
        ax2.plot(xs, [r["bound_scan"] for r in rs], "o--", label=f"{strategy}/{circuit}")
    for ax, ylabel in ((ax1, "predicted depth [ops]"), (ax2, "speedup bound")):
        ax.set_xlabel("workers")
        ax.set_ylabel(ylabel)
        ax.set_xscale("log", base=2)
        ax.set_yscale("log", base=2)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=7)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

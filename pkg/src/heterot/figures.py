"""Render experiment tables into figures saved next to the CSV output."""

from __future__ import annotations

import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_sweep", "render_scaling", "render_knn", "render_genmodel"]

_METHOD_COLORS = {
    "dse": "#d62728",
    "sgw": "#1f77b4",
    "ri_sgw": "#2ca02c",
    "sw": "#9467bd",
    "entropic_gw": "#ff7f0e",
}


def _read_rows(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _color(method: str) -> str:
    return _METHOD_COLORS.get(method, "#7f7f7f")


def render_sweep(csv_path: str, xkey: str, out_path: str) -> None:
    rows = _read_rows(csv_path)
    series: dict[str, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        series[r["method"]][float(r[xkey])].append(float(r["value"]))
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for method in sorted(series):
        xs = sorted(series[method])
        means = [np.mean(series[method][x]) for x in xs]
        ax.plot(xs, means, marker="o", ms=3.5, lw=1.4,
                color=_color(method), label=method)
    ax.set_xlabel(xkey)
    ax.set_ylabel("discrepancy")
    ax.legend(frameon=False, fontsize=9)
    ax.grid(alpha=0.3, lw=0.5)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_scaling(csv_path: str, out_path: str) -> None:
    rows = _read_rows(csv_path)
    series: dict[str, list[tuple[int, float, float]]] = defaultdict(list)
    for r in rows:
        series[r["method"]].append((int(r["n"]), float(r["mean_s"]), float(r["std_s"])))
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for method in sorted(series):
        pts = sorted(series[method])
        ns = [p[0] for p in pts]
        ms = [p[1] for p in pts]
        es = [p[2] for p in pts]
        ax.errorbar(ns, ms, yerr=es, marker="o", ms=3.5, lw=1.4,
                    color=_color(method), label=method, capsize=2)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("points per cloud")
    ax.set_ylabel("seconds per pair")
    ax.legend(frameon=False, fontsize=9)
    ax.grid(alpha=0.3, lw=0.5, which="both")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_knn(csv_path: str, out_path: str) -> None:
    rows = _read_rows(csv_path)
    per_method: dict[str, list[float]] = defaultdict(list)
    for r in rows:
        per_method[r["method"]].append(float(r["accuracy"]))
    methods = sorted(per_method)
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.boxplot([per_method[m] for m in methods], tick_labels=methods,
               showmeans=True)
    ax.set_ylabel("1-NN accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.3, lw=0.5, axis="y")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_genmodel(out_dir: str, snapshots: list[tuple[int, np.ndarray]],
                    target: np.ndarray, losses: list[float]) -> None:
    shown = snapshots if len(snapshots) <= 4 else (
        [snapshots[0]] + list(np.array(snapshots, dtype=object)[
            np.linspace(1, len(snapshots) - 1, 3).astype(int)]))
    ncols = len(shown) + 1
    fig, axes = plt.subplots(1, ncols, figsize=(2.6 * ncols, 2.8))
    for ax, (it, pts) in zip(axes[:-1], shown):
        ax.scatter(pts[:, 0], pts[:, 1], s=2, alpha=0.4, color="#d62728")
        ax.set_title(f"iter {it}", fontsize=9)
        ax.set_aspect("equal")
    axes[-1].scatter(target[:, 0], target[:, 1], s=2, alpha=0.4, color="#1f77b4")
    axes[-1].set_title("target (first 2 dims)", fontsize=9)
    axes[-1].set_aspect("equal")
    fig.tight_layout()
    fig.savefig(f"{out_dir}/genmodel.png", dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5.2, 3.0))
    ax.plot(losses, lw=0.8, color="#d62728")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.grid(alpha=0.3, lw=0.5)
    fig.tight_layout()
    fig.savefig(f"{out_dir}/loss_trace.png", dpi=150)
    plt.close(fig)

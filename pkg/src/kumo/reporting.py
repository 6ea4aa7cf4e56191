"""Figure rendering for the CLI report paths.

Figures are written as PNG files alongside the delimited outputs. All
layouts are seeded so report runs are reproducible.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import DomainGraph, Partition
from .metrics import ScoreReport


def spring_layout(
    graph: DomainGraph, seed: int = 0, iterations: int = 120
) -> dict[str, tuple[float, float]]:
    """Fruchterman-Reingold layout; deterministic for a given seed."""
    n = len(graph.nodes)
    if n == 0:
        return {}
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-1.0, 1.0, size=(n, 2))
    index = {node: i for i, node in enumerate(graph.nodes)}
    edges = np.array(
        [[index[u], index[v]] for u, v in graph.edges], dtype=int
    ).reshape(-1, 2)
    k = 1.0 / math.sqrt(n)
    temperature = 0.1
    for it in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(delta, axis=-1)
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-6)
        # Repulsion between every pair, attraction along edges.
        force = (k * k / dist**2)[..., None] * delta
        disp = force.sum(axis=1)
        if len(edges):
            d = pos[edges[:, 0]] - pos[edges[:, 1]]
            dist_e = np.maximum(np.linalg.norm(d, axis=-1, keepdims=True), 1e-6)
            pull = d * (dist_e / k)
            np.add.at(disp, edges[:, 0], -pull)
            np.add.at(disp, edges[:, 1], pull)
        length = np.maximum(np.linalg.norm(disp, axis=-1, keepdims=True), 1e-6)
        step = temperature * (1.0 - it / iterations)
        pos += disp / length * np.minimum(length, step)
    pos -= pos.mean(axis=0)
    scale = np.abs(pos).max() or 1.0
    pos /= scale
    return {node: (float(pos[i, 0]), float(pos[i, 1])) for node, i in index.items()}


def domain_graph_figure(
    graph: DomainGraph,
    partition: Partition | None,
    path: str | Path,
    *,
    seed: int = 0,
    title: str = "",
):
    """Truth co-occurrence graph, nodes colored by community."""
    pos = spring_layout(graph, seed=seed)
    fig, ax = plt.subplots(figsize=(8, 8))
    for u, v in graph.edges:
        (x1, y1), (x2, y2) = pos[u], pos[v]
        ax.plot([x1, x2], [y1, y2], color="0.8", linewidth=0.6, zorder=1)
    communities = (
        partition.communities if partition is not None
        else {n: 0 for n in graph.nodes}
    )
    n_comm = max(communities.values(), default=0) + 1
    cmap = plt.get_cmap("tab10" if n_comm <= 10 else "tab20")
    xs = [pos[n][0] for n in graph.nodes]
    ys = [pos[n][1] for n in graph.nodes]
    colors = [cmap(communities[n] % cmap.N) for n in graph.nodes]
    ax.scatter(xs, ys, c=colors, s=60, zorder=2, edgecolors="white", linewidths=0.5)
    label = title or f"{len(graph.nodes)} truths, {graph.m} edges"
    if partition is not None:
        label += f"  (Q={partition.q:.3f}, {n_comm} communities)"
    ax.set_title(label)
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def optimal_count_histogram(values: Sequence[float], path: str | Path, *, title: str = ""):
    """Distribution of optimal expected action counts across a bundle."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if values:
        lo = math.floor(min(values))
        hi = math.ceil(max(values)) + 1
        bins = np.arange(lo, hi + 0.5, 0.5)
        ax.hist(values, bins=bins, color="#4878d0", edgecolor="white")
        mean = sum(values) / len(values)
        ax.axvline(mean, color="#d65f5f", linestyle="--", label=f"mean {mean:.2f}")
        ax.legend()
    ax.set_xlabel("optimal expected action count")
    ax.set_ylabel("tasks")
    ax.set_title(title or "Optimal action counts")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def score_report_figure(reports: Sequence[ScoreReport], path: str | Path, *, title: str = ""):
    """Per-group success rate and mean relative action count, side by side."""
    labels = ["/".join(r.group) if r.group else "all" for r in reports]
    y = np.arange(len(reports))
    fig, (ax1, ax2) = plt.subplots(
        1, 2, figsize=(11, max(3.0, 0.45 * len(reports) + 1.5)), sharey=True
    )
    ax1.barh(y, [r.success_rate for r in reports], color="#4878d0")
    ax1.set_yticks(y, labels)
    ax1.set_xlim(0, 1)
    ax1.invert_yaxis()
    ax1.set_xlabel("success rate")
    rel = [r.rel_action_mean if r.rel_action_mean is not None else 0.0 for r in reports]
    ax2.barh(y, rel, color="#6acc64")
    ax2.set_xlabel("mean relative action count")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

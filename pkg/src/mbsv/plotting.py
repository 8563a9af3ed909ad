"""Figures written next to the CLI's tabular output."""

from __future__ import annotations

import itertools
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .graph_model import BlanketSets  # noqa: E402

FULL_LATTICE_MAX = 5


def _label(s) -> str:
    return "{" + ",".join(sorted(s)) + "}" if s else "∅"


def plot_lattice(table: BlanketSets, trajectory: Sequence[frozenset], path,
                 variables: Sequence[str] | None = None) -> None:
    """Draw the subset lattice by level, the EMB nodes, and the trajectory through it.

    The full lattice is only drawn for up to five variables; larger models
    show just the EMB nodes and the visited nodes.
    """
    variables = list(variables or table.order)
    steps = [frozenset()] + [frozenset(s) for s in trajectory]
    embs = {table.emb[x]: x for x in table.order}

    nodes = set(steps) | set(embs)
    if len(variables) <= FULL_LATTICE_MAX:
        for r in range(len(variables) + 1):
            nodes.update(frozenset(c) for c in itertools.combinations(variables, r))

    levels: dict[int, list[frozenset]] = {}
    for n in nodes:
        levels.setdefault(len(n), []).append(n)
    pos = {}
    for k, ns in levels.items():
        ns.sort(key=lambda s: sorted(s))
        for i, n in enumerate(ns):
            pos[n] = (i - (len(ns) - 1) / 2, k)

    fig, ax = plt.subplots(figsize=(max(6, 1.3 * max(len(v) for v in levels.values())), 1.2 * len(levels) + 1))
    for a in nodes:
        for b in nodes:
            if len(b) == len(a) + 1 and a < b:
                ax.plot(*zip(pos[a], pos[b]), color="0.85", lw=0.7, zorder=1)
    path_xy = [pos[s] for s in steps]
    ax.plot(*zip(*path_xy), color="tab:red", lw=2, zorder=2, marker="o", ms=4)
    for n, (x, y) in pos.items():
        style = dict(ha="center", va="center", fontsize=8, zorder=3,
                     bbox=dict(boxstyle="round", fc="white", ec="0.6"))
        if n in embs:
            style["bbox"] = dict(boxstyle="round", fc="lightyellow", ec="tab:orange")
        if n == steps[-1]:
            style["bbox"]["ec"] = "tab:red"
            style["bbox"]["lw"] = 2
        text = _label(n)
        if n in embs:
            text += f"\nEMB({embs[n]})"
        ax.text(x, y, text, **style)
    ax.set_yticks(sorted(levels))
    ax.set_ylabel("number of flagged sensors")
    ax.set_xticks([])
    for side in ("top", "right", "bottom"):
        ax.spines[side].set_visible(False)
    ax.set_title("validation trajectory in the fault lattice")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_verdict_histogram(histogram: dict[str, int], path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    cases = list(histogram)
    ax.bar(range(len(cases)), [histogram[c] for c in cases], color="tab:blue")
    ax.set_xticks(range(len(cases)))
    ax.set_xticklabels(cases, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("episodes")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)

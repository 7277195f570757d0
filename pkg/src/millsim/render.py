"""Offline matplotlib rendering: world frames with sensor cones, training
curves from stats CSVs, and sweep distribution plots."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle, Wedge

from .harness import read_stats
from .world import WorldConfig

ACTIVE_COLOR = "tab:green"
IDLE_COLOR = "0.6"


def render_frame(agents: list[dict], config: WorldConfig,
                 path: str | Path, tick: int | None = None,
                 circliness: float | None = None) -> Path:
    """Draw one world snapshot: body discs, heading whiskers and sensor
    cones colored by activation (green = seeing another agent).

    `agents` rows are {x, y, theta, v, omega, sensor} as emitted in the
    trajectory log.
    """
    fig, ax = plt.subplots(figsize=(6, 6))
    half_fov = config.half_fov
    whisker = 4.0 * config.agent_radius
    for agent in agents:
        x, y, theta = agent["x"], agent["y"], agent["theta"]
        active = bool(agent.get("sensor"))
        color = ACTIVE_COLOR if active else IDLE_COLOR
        ax.add_patch(Wedge((x, y), config.sense_range,
                           math.degrees(theta - half_fov),
                           math.degrees(theta + half_fov),
                           facecolor=color, alpha=0.15, linewidth=0))
        ax.add_patch(Circle((x, y), config.agent_radius,
                            facecolor="tab:blue", edgecolor="black",
                            linewidth=0.5, zorder=3))
        ax.plot([x, x + whisker * math.cos(theta)],
                [y, y + whisker * math.sin(theta)],
                color=color, linewidth=1.5, zorder=4)
    xs = [a["x"] for a in agents]
    ys = [a["y"] for a in agents]
    pad = 6.0 * config.agent_radius
    ax.set_xlim(min(xs) - pad, max(xs) + pad)
    ax.set_ylim(min(ys) - pad, max(ys) + pad)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    title = ""
    if tick is not None:
        title = f"tick {tick}"
    if circliness is not None:
        title += f"   circliness {circliness:.3f}"
    if title:
        ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_training_curve(stats_csv: str | Path, path: str | Path,
                          title: str | None = None) -> Path:
    """Best-so-far and per-epoch population fitness from a stats CSV."""
    rows = read_stats(stats_csv)
    epochs = [int(r["epoch"]) for r in rows]
    best = [float(r["best_raw"]) for r in rows]
    best_so_far = [float(r["best_so_far"]) for r in rows]
    mean = [float(r["mean_raw"]) for r in rows if r["mean_raw"]]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(epochs, best_so_far, label="best so far", color="tab:red")
    ax.plot(epochs, best, label="epoch best", color="tab:blue", alpha=0.6)
    if len(mean) == len(epochs):
        ax.plot(epochs, mean, label="epoch mean", color="tab:gray",
                alpha=0.6)
    ax.set_xlabel("epoch")
    ax.set_ylabel("circliness")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="lower right")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_sweep_violin(values: list[float], path: str | Path,
                        title: str | None = None) -> Path:
    """Distribution of circliness across spawn seeds."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    if values:
        parts = ax.violinplot([values], showmeans=True, showextrema=True)
        for body in parts["bodies"]:
            body.set_alpha(0.6)
    ax.set_xticks([1])
    ax.set_xticklabels(["spawn seeds"])
    ax.set_ylabel("circliness")
    ax.set_ylim(-0.05, 1.05)
    if title:
        ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path

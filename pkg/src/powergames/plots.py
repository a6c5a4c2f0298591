"""Matplotlib rendering for the CLI report path.

Kept out of the numerical modules on purpose: figures are a presentation
concern and the engine stays importable without a display stack.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_region", "render_gains", "render_trace"]

_STATE_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple")


def _new_axes(width=6.4):
    fig, ax = plt.subplots(figsize=(width, width * 0.72))
    ax.grid(alpha=0.3)
    return fig, ax


def render_region(artifacts, path) -> Path:
    """Per-state clouds, the expected hull, and the marked points (2-player only)."""
    path = Path(path)
    region = artifacts.region
    if region.points.shape[1] != 2:
        raise ValueError("region figure is only drawn for two players")
    fig, ax = _new_axes()
    for s, cloud in enumerate(artifacts.state_clouds):
        ax.scatter(
            cloud[:, 0],
            cloud[:, 1],
            s=4,
            alpha=0.25,
            color=_STATE_COLORS[s % len(_STATE_COLORS)],
            label=f"state {s} cloud",
        )
    hull = region.hull
    loop = np.vstack([hull, hull[:1]])
    ax.plot(loop[:, 0], loop[:, 1], "k-", lw=1.5, label="expected region hull")
    ax.scatter(
        region.points[:, 0], region.points[:, 1], s=2, alpha=0.15, color="gray"
    )
    ax.axvline(region.minmax[0], color="crimson", ls=":", lw=1, label="minmax levels")
    ax.axhline(region.minmax[1], color="crimson", ls=":", lw=1)
    for point, marker, label in (
        (artifacts.expected_nash, "s", "expected Nash"),
        (artifacts.expected_fair, "o", "expected fair point"),
        (artifacts.social_star, "*", "social optimum"),
    ):
        ax.plot(
            point.utilities[0],
            point.utilities[1],
            marker,
            color="black",
            ms=12 if marker == "*" else 7,
            mfc="yellow" if marker == "*" else "white",
            label=label,
        )
    ax.set_xlabel("long-run utility of user 1 [bit/J]")
    ax.set_ylabel("long-run utility of user 2 [bit/J]")
    ax.set_title(f"{artifacts.scenario_name}: expected utility region")
    ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_gains(curves, path) -> Path:
    """Cooperation gains vs spectral load, dotted asymptote per curve."""
    path = Path(path)
    fig, ax = _new_axes()
    for curve, color in zip(curves, _STATE_COLORS):
        alphas = [r.alpha for r in curve.rows]
        ax.semilogy(
            alphas,
            [max(r.gain_fair_pct, 1e-3) for r in curve.rows],
            "o-",
            ms=3,
            color=color,
            label=f"fair-point gain, m={curve.block_length}",
        )
        ax.semilogy(
            alphas,
            [max(r.gain_social_pct, 1e-3) for r in curve.rows],
            "s--",
            ms=3,
            color=color,
            alpha=0.7,
            label=f"social-optimum gain, m={curve.block_length}",
        )
        ax.axvline(curve.alpha_max, color=color, ls=":", lw=1)
    ax.set_xlabel("spectral load K/N")
    ax.set_ylabel("welfare gain over one-shot Nash [%]")
    ax.set_title("cooperation gains vs load (dotted: saturation boundary)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trace(trace, path, title="repeated game trace") -> Path:
    """Stage powers (per player) and the public signal."""
    path = Path(path)
    T, K = trace.powers.shape
    stages = np.arange(1, T + 1)
    fig, (ax_p, ax_s) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.4))
    for i in range(K):
        ax_p.step(stages, trace.powers[:, i], where="mid", label=f"user {i + 1}")
    ax_p.set_ylabel("transmit power [W]")
    ax_p.legend(fontsize=8)
    ax_p.grid(alpha=0.3)
    ax_s.step(stages, trace.signals, where="mid", color="black")
    ax_s.set_ylabel("public signal [W]")
    ax_s.set_xlabel("stage")
    ax_s.grid(alpha=0.3)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

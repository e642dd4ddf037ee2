"""Figure rendering for the CLI report paths.

Every command that emits a report can also render a small set of matplotlib
figures next to the data files. Figures are presentation artifacts; the
byte-stable outputs are the JSON/JSONL/CSV files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .monitor import CheckpointComparison
from .tournament import MatchRecord, Standing

_GRID = dict(alpha=0.3, linewidth=0.6)


def _new_axes(width=7.0, height=4.2):
    fig, ax = plt.subplots(figsize=(width, height))
    ax.grid(**_GRID)
    ax.set_axisbelow(True)
    return fig, ax


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_rating_trajectories(match_log: Sequence[MatchRecord], path: Path) -> Path:
    """Rating of every player over the match index."""
    series: Dict[str, Tuple[List[int], List[float]]] = {}
    for record in match_log:
        if record.ratings_after is None:
            continue
        for pid, state in zip((record.player_a, record.player_b), record.ratings_after):
            xs, ys = series.setdefault(pid, ([], []))
            xs.append(record.index)
            ys.append(state.rating)
    fig, ax = _new_axes()
    for pid in sorted(series):
        xs, ys = series[pid]
        ax.plot(xs, ys, label=pid, linewidth=1.2)
    ax.set_xlabel("match index")
    ax.set_ylabel("rating")
    ax.set_title("rating trajectories")
    if series:
        ax.legend(fontsize=8, ncol=2)
    return _save(fig, path)


def save_leaderboard(leaderboard: Sequence[Standing], path: Path) -> Path:
    """Final ratings with deviation error bars."""
    names = [s.player_id for s in leaderboard]
    ratings = [s.rating.rating for s in leaderboard]
    deviations = [s.rating.deviation for s in leaderboard]
    fig, ax = _new_axes(max(6.0, 0.8 * len(names) + 2), 4.0)
    ax.bar(range(len(names)), ratings, yerr=deviations, capsize=3, color="#4878a8")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("rating (error bar: deviation)")
    ax.set_title("final leaderboard")
    return _save(fig, path)


def save_model_scores(
    scores_by_method: Mapping[str, Mapping[str, float]], path: Path
) -> Path:
    """One panel per scoring method."""
    methods = sorted(scores_by_method)
    fig, axes = plt.subplots(
        1, max(1, len(methods)), figsize=(4.2 * max(1, len(methods)), 3.6), squeeze=False
    )
    for ax, method in zip(axes[0], methods):
        model_scores = scores_by_method[method]
        names = sorted(model_scores)
        ax.bar(range(len(names)), [model_scores[n] for n in names], color="#6a9f58")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
        ax.set_title(method, fontsize=10)
        ax.grid(**_GRID)
        ax.set_axisbelow(True)
    return _save(fig, path)


def save_correlation_scatter(
    joined: Mapping[str, Sequence[Tuple[float, float]]],
    annotations: Mapping[str, str],
    path: Path,
    xlabel: str = "metric score",
    ylabel: str = "human score",
) -> Path:
    """One panel per metric: metric value vs human score."""
    methods = sorted(joined)
    fig, axes = plt.subplots(
        1, max(1, len(methods)), figsize=(4.2 * max(1, len(methods)), 3.8), squeeze=False
    )
    for ax, method in zip(axes[0], methods):
        points = joined[method]
        ax.scatter([p[0] for p in points], [p[1] for p in points], s=14, alpha=0.7)
        ax.set_xlabel(xlabel, fontsize=9)
        ax.set_ylabel(ylabel, fontsize=9)
        title = method
        if method in annotations:
            title = f"{method}\n{annotations[method]}"
        ax.set_title(title, fontsize=9)
        ax.grid(**_GRID)
        ax.set_axisbelow(True)
    return _save(fig, path)


def save_monitor_rounds(
    history: Sequence[CheckpointComparison], stop_round: Optional[int], path: Path
) -> Path:
    """Win/loss/tie counts per evaluation round with the stop marker."""
    rounds = [c.round for c in history]
    fig, ax = _new_axes()
    ax.plot(rounds, [c.wins for c in history], marker="o", label="wins", linewidth=1.2)
    ax.plot(rounds, [c.losses for c in history], marker="s", label="losses", linewidth=1.2)
    ax.plot(rounds, [c.ties for c in history], marker="^", label="ties", linewidth=1.0, alpha=0.6)
    if stop_round is not None:
        ax.axvline(stop_round, color="#b04a4a", linestyle="--", linewidth=1.0, label="stop")
    ax.set_xlabel("evaluation round")
    ax.set_ylabel("count")
    ax.set_title("latest checkpoint vs. previous checkpoints")
    ax.legend(fontsize=8)
    return _save(fig, path)


def save_convergence_histogram(matches_to_convergence: Sequence[int], path: Path) -> Path:
    fig, ax = _new_axes(6.0, 3.8)
    if matches_to_convergence:
        ax.hist(matches_to_convergence, bins=min(20, max(5, len(matches_to_convergence))),
                color="#8263a8", alpha=0.85)
    ax.set_xlabel("matches to convergence")
    ax.set_ylabel("trials")
    ax.set_title("convergence cost across trials")
    return _save(fig, path)


def save_recovery_scatter(
    quality_vs_rating: Sequence[Tuple[float, float]], path: Path
) -> Path:
    fig, ax = _new_axes(5.2, 4.2)
    ax.scatter(
        [p[0] for p in quality_vs_rating],
        [p[1] for p in quality_vs_rating],
        s=18, alpha=0.6, color="#4878a8",
    )
    ax.set_xlabel("latent quality")
    ax.set_ylabel("final rating")
    ax.set_title("rating vs latent quality (all trials)")
    return _save(fig, path)

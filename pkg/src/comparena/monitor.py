"""Comparison-driven training supervision: early stopping and model selection.

Each evaluation round pits the latest checkpoint's samples against the
previous ``k`` checkpoints over ``n`` judged comparisons on shared contexts.
Training stops once the latest checkpoint's wins stay strictly below its
losses for ``patience`` consecutive rounds. Hyperparameter selection runs a
full tournament over the candidate models and picks the top rating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .judges import ComparisonRequest, Judge
from .rating import RatingConfig
from .seeding import derive_seed, spawn
from .supervision import Sample
from .tournament import ContextPool, Player, TournamentConfig, run


class InsufficientContextsError(ValueError):
    """Checkpoints share too few contexts for the requested comparisons."""


@dataclass(frozen=True)
class MonitorConfig:
    n_comparisons: int = 1000
    k_baselines: int = 2
    patience: int = 5
    seed: int = 0
    reuse_contexts: bool = True

    def __post_init__(self) -> None:
        if self.n_comparisons < 1:
            raise ValueError("n_comparisons must be >= 1")
        if self.k_baselines < 1:
            raise ValueError("k_baselines must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class CheckpointComparison:
    """Aggregate result of one evaluation round, from the latest side."""

    round: int
    latest_step: int
    baseline_steps: Tuple[int, ...]
    wins: int
    losses: int
    ties: int

    def __post_init__(self) -> None:
        if min(self.wins, self.losses, self.ties) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.wins + self.losses + self.ties

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "latest_step": self.latest_step,
            "baseline_steps": list(self.baseline_steps),
            "wins": self.wins,
            "losses": self.losses,
            "ties": self.ties,
        }


def checkpoint_player_id(model_id: str, step: int) -> str:
    """Stable player id for a checkpoint, used with synthetic judges."""
    return f"{model_id}@{step}"


def _step_of(samples: Sequence[Sample], role: str) -> int:
    steps = {s.checkpoint_step for s in samples}
    if len(steps) != 1 or None in steps:
        raise ValueError(f"{role} samples must share one checkpoint_step, got {steps}")
    return steps.pop()


def _by_context(samples: Sequence[Sample]) -> Dict[str, List[Sample]]:
    grouped: Dict[str, List[Sample]] = {}
    for s in samples:
        grouped.setdefault(s.context, []).append(s)
    return grouped


def compare_checkpoints(
    latest: Sequence[Sample],
    baselines: Sequence[Sequence[Sample]],
    judge: Judge,
    config: MonitorConfig,
    round_index: int = 0,
) -> CheckpointComparison:
    """Run one evaluation round of ``n_comparisons`` judged games.

    Comparisons are split as evenly as possible across the baselines (the
    remainder goes to the earlier-listed ones) and drawn over shared
    contexts, with replacement unless ``reuse_contexts`` is off.
    """
    if not latest:
        raise ValueError("latest checkpoint has no samples")
    if not baselines or any(not b for b in baselines):
        raise ValueError("every baseline needs samples")

    latest_step = _step_of(latest, "latest")
    model_id = latest[0].model_id or "model"
    latest_by_ctx = _by_context(latest)

    n, k = config.n_comparisons, len(baselines)
    quotas = [n // k + (1 if i < n % k else 0) for i in range(k)]

    wins = losses = ties = 0
    baseline_steps = []
    for b_index, (baseline, quota) in enumerate(zip(baselines, quotas)):
        baseline_step = _step_of(baseline, "baseline")
        baseline_steps.append(baseline_step)
        base_by_ctx = _by_context(baseline)
        shared = sorted(set(latest_by_ctx) & set(base_by_ctx))
        if not shared:
            raise InsufficientContextsError(
                f"no shared contexts between steps {latest_step} and {baseline_step}"
            )
        rng = spawn(config.seed, "monitor", round_index, b_index)
        if config.reuse_contexts:
            drawn = [shared[rng.randrange(len(shared))] for _ in range(quota)]
        else:
            if len(shared) < quota:
                raise InsufficientContextsError(
                    f"{len(shared)} shared contexts for {quota} comparisons "
                    f"(steps {latest_step} vs {baseline_step}); enable context reuse"
                )
            drawn = rng.sample(shared, quota)
        for j, ctx in enumerate(drawn):
            latest_sample = rng.choice(latest_by_ctx[ctx])
            base_sample = rng.choice(base_by_ctx[ctx])
            verdict = judge.compare(
                ComparisonRequest(
                    context=ctx,
                    first=latest_sample.text,
                    second=base_sample.text,
                    first_player=checkpoint_player_id(model_id, latest_step),
                    second_player=checkpoint_player_id(model_id, baseline_step),
                    match_seed=derive_seed(config.seed, round_index, b_index, j),
                )
            )
            if verdict.label == "better":
                wins += 1
            elif verdict.label == "worse":
                losses += 1
            else:
                ties += 1

    return CheckpointComparison(
        round=round_index,
        latest_step=latest_step,
        baseline_steps=tuple(baseline_steps),
        wins=wins,
        losses=losses,
        ties=ties,
    )


def should_stop(history: Sequence[CheckpointComparison], patience: int) -> bool:
    """True when the last ``patience`` rounds all had strictly more losses than wins.

    Ties count toward neither side, and a round with wins == losses breaks
    the streak.
    """
    if patience < 1:
        raise ValueError("patience must be >= 1")
    if len(history) < patience:
        return False
    return all(round_.wins < round_.losses for round_ in history[-patience:])


def select_hyperparameters(
    candidates: Sequence[Tuple[str, Player]],
    judge: Judge,
    context_pool: ContextPool,
    tournament_config: TournamentConfig,
    rating_config: Optional[RatingConfig] = None,
) -> str:
    """Tournament over the candidate models; returns the top-rated config id.

    Rating ties resolve by player id, and a single surviving candidate wins
    without a tournament.
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    if len(candidates) == 1:
        return candidates[0][0]
    player_to_config = {player.id: config_id for config_id, player in candidates}
    if len(player_to_config) != len(candidates):
        raise ValueError("candidate players must have unique ids")
    result = run(
        [player for _, player in candidates],
        judge,
        context_pool,
        tournament_config,
        rating_config or RatingConfig(),
    )
    return player_to_config[result.leaderboard[0].player_id]

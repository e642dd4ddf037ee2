"""Sample- and model-level scoring, plus correlation against human scores.

Two ways to turn pairwise verdicts into an absolute sample score:

* reference points — compare the sample against a fixed pool of common
  references, collecting 3 per win, 1 per tie, 0 per loss;
* sample-as-player rating — enter every sample into a tournament as a
  constant-output player under a fixed play budget.

Model scores are either averages of those sample scores or a model-level
tournament rating. Agreement with human annotation is measured by Pearson
and Spearman coefficients with two-sided p-values from the usual
t-approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence

from scipy import stats as _scipy_stats

from .judges import ComparisonRequest, Judge, JudgeError
from .rating import RatingConfig
from .seeding import derive_seed, spawn
from .supervision import Sample
from .tournament import (
    ContextPool,
    Player,
    TournamentConfig,
    TournamentResult,
    constant_player,
    run,
)

WIN_POINTS = 3
TIE_POINTS = 1
LOSS_POINTS = 0

SAMPLE_SCORE_METHODS = ("reference_points", "skill_rating")
MODEL_SCORE_METHODS = ("avg_reference", "avg_sample_rating", "model_skill_rating")


class UndefinedCorrelationError(ValueError):
    """Correlation is undefined (constant input or too few points)."""


@dataclass(frozen=True)
class SampleScore:
    sample_id: str
    method: str
    value: float

    def __post_init__(self) -> None:
        if self.method not in SAMPLE_SCORE_METHODS:
            raise ValueError(f"method must be one of {SAMPLE_SCORE_METHODS}")


@dataclass(frozen=True)
class ModelScore:
    model_id: str
    method: str
    value: float

    def __post_init__(self) -> None:
        if self.method not in MODEL_SCORE_METHODS:
            raise ValueError(f"method must be one of {MODEL_SCORE_METHODS}")


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    n: int
    kind: str

    def as_dict(self) -> dict:
        return {
            "coefficient": self.coefficient,
            "p_value": self.p_value,
            "n": self.n,
            "kind": self.kind,
        }


def draw_references(
    pool: Sequence[Sample], count: int, seed: int
) -> List[Sample]:
    """Draw the fixed set of common references from the generated pool."""
    if count < 1:
        raise ValueError("reference count must be >= 1")
    if len(pool) <= count:
        return list(pool)
    rng = spawn(seed, "references")
    return rng.sample(list(pool), count)


def reference_score(sample: Sample, refs: Sequence[Sample], judge: Judge) -> SampleScore:
    """Points against the common reference set: 3 per win, 1 per tie, 0 per loss.

    Every comparison carries the evaluated sample's own context, since the
    references generally come from other contexts. A failing judge call is
    retried once, then the failure propagates.
    """
    if not refs:
        raise ValueError("reference set must be non-empty")
    total = 0
    for ref in refs:
        request = ComparisonRequest(
            context=sample.context,
            first=sample.text,
            second=ref.text,
            first_player=sample.id,
            second_player=ref.id,
            match_seed=derive_seed("reference", sample.id, ref.id),
        )
        try:
            verdict = judge.compare(request)
        except JudgeError:
            verdict = judge.compare(request)
        if verdict.label == "better":
            total += WIN_POINTS
        elif verdict.label == "tie":
            total += TIE_POINTS
        else:
            total += LOSS_POINTS
    return SampleScore(sample.id, "reference_points", float(total))


def sample_skill_rating(
    samples: Sequence[Sample],
    judge: Judge,
    budget: int = 10_000,
    seed: int = 0,
    rating_config: Optional[RatingConfig] = None,
    min_plays_per_player: int = 50,
) -> Dict[str, float]:
    """Rate each sample as a constant-output player under a play budget."""
    if len(samples) < 2:
        raise ValueError("sample skill rating needs at least 2 samples")
    rating_config = rating_config or RatingConfig()
    players = [constant_player(s.id, s.text, rating_config) for s in samples]
    contexts = sorted({s.context for s in samples}) or [""]
    pool = ContextPool.from_texts(contexts)
    config = TournamentConfig(
        seed=seed,
        min_plays_per_player=min_plays_per_player,
        max_matches=budget,
        plays_budget=budget,
    )
    result = run(players, judge, pool, config, rating_config)
    return result.ratings()


def model_score_avg_reference(
    model_samples: Sequence[Sample],
    refs: Sequence[Sample],
    judge: Judge,
    model_id: Optional[str] = None,
) -> ModelScore:
    """Mean reference-point score over the model's evaluated samples."""
    if not model_samples:
        raise ValueError("model has no samples to score")
    model_id = model_id or model_samples[0].model_id or "unknown"
    scores = [reference_score(s, refs, judge).value for s in model_samples]
    return ModelScore(model_id, "avg_reference", math.fsum(scores) / len(scores))


def model_score_avg_sample_rating(
    sample_ratings: Mapping[str, float],
    sample_ids: Sequence[str],
    model_id: str,
) -> ModelScore:
    """Mean tournament rating of the model's samples."""
    missing = [sid for sid in sample_ids if sid not in sample_ratings]
    if missing:
        raise ValueError(f"no rating for samples: {missing[:5]}")
    if not sample_ids:
        raise ValueError(f"model {model_id!r} has no rated samples")
    values = [sample_ratings[sid] for sid in sample_ids]
    return ModelScore(model_id, "avg_sample_rating", math.fsum(values) / len(values))


def model_skill_rating(
    players: Sequence[Player],
    judge: Judge,
    context_pool: ContextPool,
    config: TournamentConfig,
    rating_config: RatingConfig,
) -> TournamentResult:
    """Model-level tournament; thin delegation kept for symmetry with the scores."""
    return run(players, judge, context_pool, config, rating_config)


def _validate_xy(x: Sequence[float], y: Sequence[float]) -> None:
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise UndefinedCorrelationError("correlation needs at least 3 points")
    for values, name in ((x, "x"), (y, "y")):
        if any(not math.isfinite(v) for v in values):
            raise ValueError(f"{name} contains non-finite values")
        if max(values) == min(values):
            raise UndefinedCorrelationError(f"{name} is constant; correlation undefined")


def _t_p_value(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    return float(2.0 * _scipy_stats.t.sf(t, n - 2))


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation with a two-sided t-approximation p-value."""
    _validate_xy(x, y)
    n = len(x)
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [v - mean_x for v in x]
    dy = [v - mean_y for v in y]
    cov = math.fsum(a * b for a, b in zip(dx, dy))
    var_x = math.fsum(a * a for a in dx)
    var_y = math.fsum(b * b for b in dy)
    r = cov / math.sqrt(var_x * var_y)
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(r, _t_p_value(r, n), n, "pearson")


def average_ranks(values: Sequence[float]) -> List[float]:
    """1-based ranks; tied values share the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Rank correlation: Pearson over average ranks."""
    _validate_xy(x, y)
    inner = pearson(average_ranks(x), average_ranks(y))
    return CorrelationResult(inner.coefficient, inner.p_value, inner.n, "spearman")

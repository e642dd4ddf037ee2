"""Construction of pairwise training examples for a comparison judge.

Three sources, all restricted to pairs sharing a context:

* strong pairs — human-written references beat machine outputs; two texts
  from the same source (both human, or both from the same model checkpoint)
  are labeled indistinguishable.
* weak pairs — a later training checkpoint beats an earlier one of the same
  model, provided the step gap is at least a configured fraction of total
  training and the pair is not drawn from the almost-converged tail.
* human pairs — derived from 1-5 quality scores; a score gap at or above
  ``min_gap`` is decisive, equal scores tie, anything in between is dropped.

Every decisive unordered pair is emitted in both orientations (better one
way, worse the other); ties are emitted in both orientations too.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .seeding import spawn

ORIGINS = ("human", "model")
PAIR_LABELS = ("better", "worse", "tie")
PROVENANCES = ("strong", "weak", "human")

# Slack for fraction-of-total-steps thresholds, so integer margins that hit
# the boundary exactly are not lost to float rounding.
_MARGIN_EPSILON = 1e-9


@dataclass(frozen=True)
class Sample:
    """One text, human-written or generated, with its conditioning context."""

    id: str
    context: str
    text: str
    origin: str
    model_id: Optional[str] = None
    checkpoint_step: Optional[int] = None
    total_steps: Optional[int] = None

    def __post_init__(self) -> None:
        if self.origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}, got {self.origin!r}")
        if self.origin == "model":
            if self.model_id is None or self.checkpoint_step is None:
                raise ValueError(
                    f"model sample {self.id!r} needs model_id and checkpoint_step"
                )
            if self.checkpoint_step < 0:
                raise ValueError(f"checkpoint_step must be >= 0, got {self.checkpoint_step}")
        if self.total_steps is not None:
            if self.total_steps <= 0:
                raise ValueError(f"total_steps must be > 0, got {self.total_steps}")
            if self.checkpoint_step is not None and self.checkpoint_step > self.total_steps:
                raise ValueError(
                    f"checkpoint_step {self.checkpoint_step} exceeds total_steps {self.total_steps}"
                )


@dataclass(frozen=True)
class PairExample:
    """An ordered training pair; ``first`` is labeled relative to ``second``."""

    context: str
    first: Sample
    second: Sample
    label: str
    provenance: str
    margin: Optional[int] = None

    def __post_init__(self) -> None:
        if self.label not in PAIR_LABELS:
            raise ValueError(f"label must be one of {PAIR_LABELS}, got {self.label!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        if self.first.context != self.context or self.second.context != self.context:
            raise ValueError("pair members must share the pair's context")
        if self.margin is not None and self.margin < 0:
            raise ValueError("margin must be >= 0")

    def as_dict(self) -> dict:
        row = {
            "context": self.context,
            "first": self.first.text,
            "second": self.second.text,
            "label": self.label,
            "provenance": self.provenance,
        }
        if self.margin is not None:
            row["margin"] = self.margin
        return row


@dataclass(frozen=True)
class WeakSupervisionConfig:
    min_margin_fraction: float = 0.10
    converged_exclusion_fraction: float = 0.20
    curriculum_stages: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.min_margin_fraction < 1.0:
            raise ValueError("min_margin_fraction must be in (0, 1)")
        if not 0.0 <= self.converged_exclusion_fraction < 1.0:
            raise ValueError("converged_exclusion_fraction must be in [0, 1)")
        if self.curriculum_stages < 1:
            raise ValueError("curriculum_stages must be >= 1")


def _both_orientations(
    winner: Sample, loser: Sample, provenance: str, margin: Optional[int] = None
) -> List[PairExample]:
    ctx = winner.context
    return [
        PairExample(ctx, winner, loser, "better", provenance, margin),
        PairExample(ctx, loser, winner, "worse", provenance, margin),
    ]


def _tie_both_orientations(a: Sample, b: Sample, provenance: str) -> List[PairExample]:
    return [
        PairExample(a.context, a, b, "tie", provenance),
        PairExample(a.context, b, a, "tie", provenance),
    ]


def _group_by_context(samples: Sequence[Sample]) -> Dict[str, List[Sample]]:
    groups: Dict[str, List[Sample]] = {}
    for sample in samples:
        groups.setdefault(sample.context, []).append(sample)
    return groups


def build_strong_pairs(
    real: Sequence[Sample], generated: Sequence[Sample]
) -> List[PairExample]:
    """Cross pairs are decisive (real beats generated); same-source pairs tie.

    Generated samples tie only with outputs of the same model checkpoint;
    cross-checkpoint generated pairs are never emitted here (their relation
    belongs to weak supervision).
    """
    for sample in generated:
        if sample.origin != "model":
            raise ValueError(f"generated sample {sample.id!r} must have origin='model'")
    real_by_ctx = _group_by_context(real)
    gen_by_ctx = _group_by_context(generated)

    pairs: List[PairExample] = []
    for ctx in sorted(set(real_by_ctx) | set(gen_by_ctx)):
        real_here = real_by_ctx.get(ctx, [])
        gen_here = gen_by_ctx.get(ctx, [])
        for s_plus in real_here:
            for s_minus in gen_here:
                pairs.extend(_both_orientations(s_plus, s_minus, "strong"))
        for a, b in itertools.combinations(real_here, 2):
            pairs.extend(_tie_both_orientations(a, b, "strong"))
        by_checkpoint: Dict[Tuple[str, int], List[Sample]] = {}
        for sample in gen_here:
            by_checkpoint.setdefault(
                (sample.model_id, sample.checkpoint_step), []
            ).append(sample)
        for key in sorted(by_checkpoint):
            for a, b in itertools.combinations(by_checkpoint[key], 2):
                pairs.extend(_tie_both_orientations(a, b, "strong"))
    return pairs


def group_by_checkpoint(
    samples: Sequence[Sample],
) -> Dict[Tuple[str, int], List[Sample]]:
    """Index model samples by (model_id, checkpoint_step)."""
    groups: Dict[Tuple[str, int], List[Sample]] = {}
    for sample in samples:
        if sample.origin != "model":
            continue
        groups.setdefault((sample.model_id, sample.checkpoint_step), []).append(sample)
    return groups


def build_weak_pairs(
    checkpoint_samples: Mapping[Tuple[str, int], Sequence[Sample]],
    config: WeakSupervisionConfig,
) -> List[PairExample]:
    """Later checkpoints beat earlier ones of the same model.

    A checkpoint pair qualifies only if its step gap is at least
    ``min_margin_fraction`` of total training, and not when both checkpoints
    sit in the final ``converged_exclusion_fraction`` of training.
    """
    by_model: Dict[str, List[int]] = {}
    for model_id, step in checkpoint_samples:
        by_model.setdefault(model_id, []).append(step)

    pairs: List[PairExample] = []
    for model_id in sorted(by_model):
        steps = sorted(set(by_model[model_id]))
        total_steps = _total_steps_for(model_id, checkpoint_samples)
        min_margin = config.min_margin_fraction * total_steps - _MARGIN_EPSILON
        converged_after = (1.0 - config.converged_exclusion_fraction) * total_steps
        for earlier, later in itertools.combinations(steps, 2):
            margin = later - earlier
            if margin < min_margin:
                continue
            if earlier > converged_after and later > converged_after:
                continue
            early_by_ctx = _group_by_context(checkpoint_samples[(model_id, earlier)])
            late_by_ctx = _group_by_context(checkpoint_samples[(model_id, later)])
            for ctx in sorted(set(early_by_ctx) & set(late_by_ctx)):
                for s_late in late_by_ctx[ctx]:
                    for s_early in early_by_ctx[ctx]:
                        pairs.extend(
                            _both_orientations(s_late, s_early, "weak", margin)
                        )
    return pairs


def _total_steps_for(
    model_id: str, checkpoint_samples: Mapping[Tuple[str, int], Sequence[Sample]]
) -> int:
    totals = {
        sample.total_steps
        for (mid, _), samples in checkpoint_samples.items()
        if mid == model_id
        for sample in samples
    }
    totals.discard(None)
    if not totals:
        raise ValueError(f"model {model_id!r} has no total_steps; weak pairs need it")
    if len(totals) > 1:
        raise ValueError(f"model {model_id!r} has inconsistent total_steps: {sorted(totals)}")
    return totals.pop()


def curriculum_order(
    pairs: Sequence[PairExample], stages: int, seed: int = 0
) -> List[List[PairExample]]:
    """Cumulative large-margin-first schedule.

    Weak pairs are split into ``stages`` equal-frequency margin buckets;
    stage 1 holds the largest margins, stage k adds the next bucket. Strong
    and human pairs appear in every stage. Each stage is shuffled with the
    run seed.
    """
    if stages < 1:
        raise ValueError("stages must be >= 1")
    weak = [p for p in pairs if p.provenance == "weak"]
    always = [p for p in pairs if p.provenance != "weak"]
    weak.sort(key=lambda p: -(p.margin or 0))

    base, remainder = divmod(len(weak), stages)
    buckets: List[List[PairExample]] = []
    cursor = 0
    for stage in range(stages):
        size = base + (1 if stage < remainder else 0)
        buckets.append(weak[cursor : cursor + size])
        cursor += size

    schedule: List[List[PairExample]] = []
    included: List[PairExample] = []
    for stage, bucket in enumerate(buckets, start=1):
        included = included + bucket
        stage_pairs = always + included
        spawn(seed, "curriculum", stage).shuffle(stage_pairs)
        schedule.append(stage_pairs)
    return schedule


def pairs_from_scores(
    scored: Sequence[Tuple[Sample, int]], min_gap: int = 1
) -> List[PairExample]:
    """Human-annotation pairs from 1-5 scores over same-context samples."""
    if min_gap < 1:
        raise ValueError("min_gap must be >= 1")
    for sample, score in scored:
        if not isinstance(score, int) or not 1 <= score <= 5:
            raise ValueError(f"score for {sample.id!r} must be an integer in 1..5, got {score!r}")

    by_ctx: Dict[str, List[Tuple[Sample, int]]] = {}
    for sample, score in scored:
        by_ctx.setdefault(sample.context, []).append((sample, score))

    pairs: List[PairExample] = []
    for ctx in sorted(by_ctx):
        for (sa, score_a), (sb, score_b) in itertools.combinations(by_ctx[ctx], 2):
            gap = score_a - score_b
            if gap == 0:
                pairs.extend(_tie_both_orientations(sa, sb, "human"))
            elif abs(gap) >= min_gap:
                winner, loser = (sa, sb) if gap > 0 else (sb, sa)
                pairs.extend(_both_orientations(winner, loser, "human"))
            # 0 < |gap| < min_gap: neither decisive nor tie, dropped
    return pairs


_SENTENCE_BOUNDARY = re.compile(r"[.!?](?=\s|$)")


def truncate_sample(text: str, max_words: int = 250) -> str:
    """Cut a long text at the sentence boundary nearest ``max_words`` words.

    Texts at or under the limit are returned verbatim. Boundaries are
    terminal punctuation followed by whitespace or end of text; the end of
    the text always counts, so a text with one huge sentence comes back
    whole. Ties between equally distant boundaries go to the shorter prefix.
    """
    if max_words < 1:
        raise ValueError("max_words must be >= 1")
    if len(text.split()) <= max_words:
        return text

    ends = [match.end() for match in _SENTENCE_BOUNDARY.finditer(text)]
    if not ends or ends[-1] != len(text):
        ends.append(len(text))

    best_end = None
    best_key = None
    for end in ends:
        count = len(text[:end].split())
        key = (abs(count - max_words), count)
        if best_key is None or key < best_key:
            best_key = key
            best_end = end
    return text[:best_end]

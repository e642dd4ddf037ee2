"""Synthetic end-to-end validation: can the tournament recover a known ranking?

Each trial builds players with known latent qualities, judges them with a
noisy oracle, runs the tournament, and records whether the final leaderboard
matches the latent order, the rank correlation between rating and quality,
and how many matches convergence took. This is the grounding for the
acceptance checks on ranking recovery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional

from .config import SimulateSpec
from .judges import OracleJudge, OracleJudgeConfig
from .rating import RatingConfig
from .scoring import UndefinedCorrelationError, spearman
from .seeding import derive_seed
from .tournament import ContextPool, TournamentConfig, run, synthetic_player


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    converged: bool
    matches: int
    recovered: Optional[bool]
    spearman_vs_quality: Optional[float]
    final_ratings: Dict[str, float]

    def as_dict(self) -> dict:
        return {
            "trial": self.trial,
            "seed": self.seed,
            "converged": self.converged,
            "matches": self.matches,
            "recovered": self.recovered,
            "spearman_vs_quality": self.spearman_vs_quality,
            "final_ratings": self.final_ratings,
        }


@dataclass
class SimulationReport:
    qualities: Dict[str, float]
    trials: List[TrialResult]
    degenerate: bool

    @property
    def recovery_rate(self) -> Optional[float]:
        decided = [t.recovered for t in self.trials if t.recovered is not None]
        if not decided:
            return None
        return sum(decided) / len(decided)

    @property
    def min_spearman(self) -> Optional[float]:
        values = [t.spearman_vs_quality for t in self.trials if t.spearman_vs_quality is not None]
        return min(values) if values else None

    def as_dict(self) -> dict:
        values = [t.spearman_vs_quality for t in self.trials if t.spearman_vs_quality is not None]
        matches = [t.matches for t in self.trials]
        return {
            "qualities": self.qualities,
            "degenerate": self.degenerate,
            "trials": [t.as_dict() for t in self.trials],
            "recovery_rate": self.recovery_rate,
            "spearman": {
                "min": self.min_spearman,
                "mean": (math.fsum(values) / len(values)) if values else None,
            },
            "convergence": {
                "converged_trials": sum(t.converged for t in self.trials),
                "matches_min": min(matches) if matches else None,
                "matches_mean": (math.fsum(matches) / len(matches)) if matches else None,
                "matches_max": max(matches) if matches else None,
            },
        }


def simulation_qualities(spec: SimulateSpec) -> Dict[str, float]:
    if spec.qualities is not None:
        return {f"p{i}": q for i, q in enumerate(spec.qualities)}
    return {
        f"p{i}": spec.quality_base + i * spec.quality_gap for i in range(spec.players)
    }


def run_simulation(
    spec: SimulateSpec,
    tournament_config: TournamentConfig,
    rating_config: RatingConfig,
    seed: int,
) -> SimulationReport:
    qualities = simulation_qualities(spec)
    # Recovery is undefined when latent qualities are not all distinct.
    degenerate = len(set(qualities.values())) != len(qualities)
    expected_order = sorted(qualities, key=lambda pid: (-qualities[pid], pid))
    pool = ContextPool.from_texts([f"synthetic prompt {i}" for i in range(spec.contexts)])

    trials: List[TrialResult] = []
    for trial in range(spec.trials):
        trial_seed = derive_seed(seed, "trial", trial)
        judge = OracleJudge(
            OracleJudgeConfig(
                latent_quality=qualities,
                sample_noise=spec.sample_noise,
                tie_band=spec.tie_band,
                flip_prob=spec.flip_prob,
                seed=trial_seed,
            )
        )
        players = [synthetic_player(pid, rating_config) for pid in qualities]
        config = TournamentConfig(
            seed=trial_seed,
            min_plays_per_player=tournament_config.min_plays_per_player,
            max_matches=tournament_config.max_matches,
            plays_budget=tournament_config.plays_budget,
            width=tournament_config.width,
            allow_tie=tournament_config.allow_tie,
        )
        result = run(players, judge, pool, config, rating_config)

        order = [s.player_id for s in result.leaderboard]
        recovered = None if degenerate else order == expected_order
        rho: Optional[float] = None
        try:
            ids = sorted(qualities)
            ratings = result.ratings()
            rho = spearman(
                [qualities[pid] for pid in ids], [ratings[pid] for pid in ids]
            ).coefficient
        except UndefinedCorrelationError:
            rho = None
        trials.append(
            TrialResult(
                trial=trial,
                seed=trial_seed,
                converged=result.converged,
                matches=result.matches_played,
                recovered=recovered,
                spearman_vs_quality=rho,
                final_ratings=result.ratings(),
            )
        )
    return SimulationReport(qualities=qualities, trials=trials, degenerate=degenerate)

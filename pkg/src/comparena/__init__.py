"""comparena: rank text generators by judged pairwise comparison.

The library side: a Glicko-2 style rating core with tie handling
(:mod:`comparena.rating`), pluggable judges (:mod:`comparena.judges`),
tournaments (:mod:`comparena.tournament`), training-pair construction
(:mod:`comparena.supervision`), sample/model scoring and correlations
(:mod:`comparena.scoring`), and checkpoint monitoring
(:mod:`comparena.monitor`). The CLI side lives in :mod:`comparena.cli`.
"""

from .judges import (
    ComparisonRequest,
    Judge,
    JudgeError,
    JudgeUnavailableError,
    OracleJudge,
    OracleJudgeConfig,
    ProtocolViolationError,
    RemoteJudge,
    ScoreJudge,
    ScriptedJudge,
    Verdict,
    binary_adapter,
    check_remote_conformance,
)
from .rating import (
    GameOutcome,
    RatingConfig,
    RatingState,
    update_decisive,
    update_inactive,
    update_tie,
)
from .supervision import (
    PairExample,
    Sample,
    WeakSupervisionConfig,
    build_strong_pairs,
    build_weak_pairs,
    curriculum_order,
    pairs_from_scores,
    truncate_sample,
)
from .tournament import (
    ContextPool,
    MatchRecord,
    Player,
    TournamentConfig,
    TournamentResult,
    constant_player,
    pool_player,
    run,
    synthetic_player,
)

__version__ = "0.1.0"

__all__ = [
    "ComparisonRequest",
    "ContextPool",
    "GameOutcome",
    "Judge",
    "JudgeError",
    "JudgeUnavailableError",
    "MatchRecord",
    "OracleJudge",
    "OracleJudgeConfig",
    "PairExample",
    "Player",
    "ProtocolViolationError",
    "RatingConfig",
    "RatingState",
    "RemoteJudge",
    "Sample",
    "ScoreJudge",
    "ScriptedJudge",
    "TournamentConfig",
    "TournamentResult",
    "Verdict",
    "WeakSupervisionConfig",
    "binary_adapter",
    "build_strong_pairs",
    "build_weak_pairs",
    "check_remote_conformance",
    "constant_player",
    "curriculum_order",
    "pairs_from_scores",
    "pool_player",
    "run",
    "synthetic_player",
    "truncate_sample",
    "update_decisive",
    "update_inactive",
    "update_tie",
]

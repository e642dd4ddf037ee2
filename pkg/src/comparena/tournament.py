"""Skill-rating tournaments over judged pairwise games.

The loop: sample a uniformly random pair of players, draw one shared context,
let both players produce a text for it, ask the judge, update both ratings
(each against the other's pre-game state, one game per rating period), and
stop once the leaderboard ordering has stayed put while every player was
selected at least ``min_plays_per_player`` times since it last changed.

All randomness is derived from the run seed plus the match index, so a run
is reproducible and, with a concurrency width above one, the play stage can
be parallelized while rating application stays serialized in index order —
producing a match log identical to the sequential run.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .judges import ComparisonRequest, Judge, JudgeError, Verdict
from .rating import (
    GameOutcome,
    RatingConfig,
    RatingState,
    update_decisive,
    update_tie,
)
from .seeding import spawn

PLAYER_KINDS = ("model", "sample")

_LABEL_TO_OUTCOME = {
    "better": GameOutcome.WIN,
    "worse": GameOutcome.LOSS,
    "tie": GameOutcome.TIE,
}

Sampler = Callable[[str, random.Random], str]


class SamplerError(Exception):
    """A player could not produce a text for the drawn context."""


@dataclass
class Player:
    """A tournament participant: an id, a rating, and a way to produce text."""

    id: str
    kind: str
    rating: RatingState
    sampler: Sampler
    games_played: int = 0

    def __post_init__(self) -> None:
        if self.kind not in PLAYER_KINDS:
            raise ValueError(f"kind must be one of {PLAYER_KINDS}, got {self.kind!r}")

    def copy(self) -> "Player":
        return replace(self)


def constant_player(player_id: str, text: str, rating_config: RatingConfig) -> Player:
    """A sample treated as a player that always answers with the same text."""
    return Player(
        id=player_id,
        kind="sample",
        rating=rating_config.initial_state(),
        sampler=lambda _ctx, _rng, _text=text: _text,
    )


def pool_player(
    player_id: str,
    pools: Mapping[str, Sequence[str]],
    rating_config: RatingConfig,
) -> Player:
    """A model represented by per-context pools of pre-generated texts."""

    def sample(context: str, rng: random.Random) -> str:
        pool = pools.get(context)
        if not pool:
            raise SamplerError(f"player {player_id!r} has no texts for context {context!r}")
        return pool[rng.randrange(len(pool))]

    return Player(
        id=player_id, kind="model", rating=rating_config.initial_state(), sampler=sample
    )


def synthetic_player(player_id: str, rating_config: RatingConfig) -> Player:
    """Placeholder text source for oracle-judged runs (texts are not read)."""
    return Player(
        id=player_id,
        kind="model",
        rating=rating_config.initial_state(),
        sampler=lambda context, _rng, _pid=player_id: f"[{_pid}] response to: {context}",
    )


@dataclass(frozen=True)
class ContextPool:
    """A fixed pool of conditioning inputs, drawn uniformly per match."""

    entries: Tuple[Tuple[str, str], ...]  # (context_id, text)

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("context pool must be non-empty")

    @classmethod
    def from_texts(cls, texts: Sequence[str]) -> "ContextPool":
        return cls(tuple((f"ctx:{i:04d}", text) for i, text in enumerate(texts)))

    def draw(self, rng: random.Random) -> Tuple[str, str]:
        return self.entries[rng.randrange(len(self.entries))]


@dataclass(frozen=True)
class TournamentConfig:
    seed: int = 0
    min_plays_per_player: int = 50
    max_matches: int = 100_000
    plays_budget: Optional[int] = None
    width: int = 1
    allow_tie: bool = True
    failure_policy: str = "skip"  # or "abort"
    failure_cap_fraction: float = 0.01

    def __post_init__(self) -> None:
        if self.min_plays_per_player < 1:
            raise ValueError("min_plays_per_player must be >= 1")
        if self.max_matches < 1:
            raise ValueError("max_matches must be >= 1")
        if self.plays_budget is not None and self.plays_budget < 1:
            raise ValueError("plays_budget must be >= 1 when set")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.failure_policy not in ("skip", "abort"):
            raise ValueError("failure_policy must be 'skip' or 'abort'")
        if not 0.0 <= self.failure_cap_fraction <= 1.0:
            raise ValueError("failure_cap_fraction must be in [0, 1]")


@dataclass(frozen=True)
class MatchRecord:
    """One judged game and its rating consequences."""

    index: int
    player_a: str
    player_b: str
    context_id: str
    text_a: str
    text_b: str
    verdict: Verdict
    outcome: GameOutcome
    ratings_after: Optional[Tuple[RatingState, RatingState]] = None

    def __post_init__(self) -> None:
        if self.player_a == self.player_b:
            raise ValueError("a match needs two distinct players")
        if _LABEL_TO_OUTCOME[self.verdict.label] is not self.outcome:
            raise ValueError(
                f"outcome {self.outcome} inconsistent with verdict {self.verdict.label!r}"
            )

    def as_dict(self) -> dict:
        after = self.ratings_after
        return {
            "index": self.index,
            "player_a": self.player_a,
            "player_b": self.player_b,
            "context_id": self.context_id,
            "text_a": self.text_a,
            "text_b": self.text_b,
            "verdict": self.verdict.as_dict(),
            "outcome": self.outcome.value,
            "ratings_after": None
            if after is None
            else {"a": after[0].as_dict(), "b": after[1].as_dict()},
        }


@dataclass(frozen=True)
class Standing:
    player_id: str
    rating: RatingState
    games_played: int


@dataclass
class TournamentResult:
    leaderboard: List[Standing]
    match_log: List[MatchRecord]
    converged: bool
    matches_played: int
    skipped_matches: int = 0

    def ratings(self) -> Dict[str, float]:
        return {s.player_id: s.rating.rating for s in self.leaderboard}

    def leaderboard_dict(self) -> Dict[str, dict]:
        return {
            s.player_id: {
                "rating": s.rating.rating,
                "deviation": s.rating.deviation,
                "volatility": s.rating.volatility,
                "games": s.games_played,
            }
            for s in self.leaderboard
        }


def schedule_next(rng: random.Random, players: Sequence[Player]) -> Tuple[Player, Player]:
    """A uniformly random ordered pair of distinct players.

    Uniform over ordered pairs, so every unordered pair is equally likely and
    each member leads half the time (neutralizing judge position bias).
    """
    if len(players) < 2:
        raise ValueError("scheduling needs at least 2 players")
    i = rng.randrange(len(players))
    j = rng.randrange(len(players) - 1)
    if j >= i:
        j += 1
    return players[i], players[j]


def leaderboard_order(players: Sequence[Player]) -> Tuple[str, ...]:
    """Strict ordering: rating descending, id ascending as the tie-break."""
    return tuple(p.id for p in sorted(players, key=lambda p: (-p.rating.rating, p.id)))


def play_match(
    a: Player,
    b: Player,
    judge: Judge,
    context_pool: ContextPool,
    index: int,
    seed: int,
    allow_tie: bool = True,
) -> MatchRecord:
    """Play (sample + judge) one game; rating application happens separately."""
    context_id, context = context_pool.draw(spawn(seed, "context", index))
    text_a = a.sampler(context, spawn(seed, "text", index, 0))
    text_b = b.sampler(context, spawn(seed, "text", index, 1))
    verdict = judge.compare(
        ComparisonRequest(
            context=context,
            first=text_a,
            second=text_b,
            allow_tie=allow_tie,
            first_player=a.id,
            second_player=b.id,
            match_seed=index,
        )
    )
    return MatchRecord(
        index=index,
        player_a=a.id,
        player_b=b.id,
        context_id=context_id,
        text_a=text_a,
        text_b=text_b,
        verdict=verdict,
        outcome=_LABEL_TO_OUTCOME[verdict.label],
    )


def apply_outcome(
    record: MatchRecord,
    players: Mapping[str, Player],
    rating_config: RatingConfig,
) -> MatchRecord:
    """Update both players from their pre-game states; returns the completed record."""
    a = players[record.player_a]
    b = players[record.player_b]
    pre_a, pre_b = a.rating, b.rating
    if record.outcome is GameOutcome.WIN:
        a.rating = update_decisive(pre_a, [(pre_b.rating, pre_b.deviation, 1.0)], rating_config)
        b.rating = update_decisive(pre_b, [(pre_a.rating, pre_a.deviation, 0.0)], rating_config)
    elif record.outcome is GameOutcome.LOSS:
        a.rating = update_decisive(pre_a, [(pre_b.rating, pre_b.deviation, 0.0)], rating_config)
        b.rating = update_decisive(pre_b, [(pre_a.rating, pre_a.deviation, 1.0)], rating_config)
    else:
        a.rating = update_tie(pre_a, pre_b, rating_config)
        b.rating = update_tie(pre_b, pre_a, rating_config)
    a.games_played += 1
    b.games_played += 1
    return replace(record, ratings_after=(a.rating, b.rating))


def check_convergence(
    orderings: Sequence[Sequence[str]],
    selections: Sequence[Tuple[str, str]],
    min_plays_per_player: int,
    initial_ordering: Optional[Sequence[str]] = None,
) -> bool:
    """Convergence test over a scripted history.

    ``orderings[i]`` is the leaderboard ordering after match ``i`` and
    ``selections[i]`` the pair that played it. A marker sits after the last
    match that changed the ordering (the changing match itself does not
    count toward the quota); the tournament has converged when every player
    has been selected at least ``min_plays_per_player`` times past the
    marker. ``initial_ordering``, when given, lets a change at match 0 be
    detected.
    """
    if not orderings:
        raise ValueError("ordering history must be non-empty")
    if len(orderings) != len(selections):
        raise ValueError("orderings and selections must be aligned")

    normalized = [tuple(o) for o in orderings]
    start = 0
    if initial_ordering is not None and normalized[0] != tuple(initial_ordering):
        start = 1
    for i in range(1, len(normalized)):
        if normalized[i] != normalized[i - 1]:
            start = i + 1

    counts: Dict[str, int] = {}
    for a, b in selections[start:]:
        counts[a] = counts.get(a, 0) + 1
        counts[b] = counts.get(b, 0) + 1
    return all(counts.get(pid, 0) >= min_plays_per_player for pid in normalized[-1])


class _ConvergenceTracker:
    """Incremental form of :func:`check_convergence` used by the run loop."""

    def __init__(self, initial_ordering: Tuple[str, ...], min_plays: int) -> None:
        self.ordering = initial_ordering
        self.min_plays = min_plays
        self.counts: Dict[str, int] = {pid: 0 for pid in initial_ordering}

    def record(self, ordering: Tuple[str, ...], pair: Tuple[str, str]) -> bool:
        if ordering != self.ordering:
            self.ordering = ordering
            self.counts = {pid: 0 for pid in ordering}
        else:
            for pid in pair:
                self.counts[pid] += 1
        return all(count >= self.min_plays for count in self.counts.values())


def run(
    players: Sequence[Player],
    judge: Judge,
    context_pool: ContextPool,
    config: TournamentConfig,
    rating_config: RatingConfig,
) -> TournamentResult:
    """Run the tournament to convergence or budget exhaustion.

    Input players are not mutated; the result carries updated copies. With
    ``width > 1`` the sample+judge stage runs in a thread pool while rating
    application stays in match-index order, so the log matches a sequential
    run as long as the judge derives randomness from the request.
    """
    if len(players) < 2:
        raise ValueError("a tournament needs at least 2 players")
    ids = [p.id for p in players]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate player ids: {sorted(ids)}")
    if config.max_matches < len(players):
        raise ValueError("max_matches must be at least the number of players")

    # Sorted entry order makes the schedule independent of caller list order.
    roster = sorted((p.copy() for p in players), key=lambda p: p.id)
    by_id = {p.id: p for p in roster}
    cap = config.max_matches
    if config.plays_budget is not None:
        cap = min(cap, config.plays_budget)

    tracker = _ConvergenceTracker(leaderboard_order(roster), config.min_plays_per_player)
    log: List[MatchRecord] = []
    skipped = 0
    converged = False

    def play(index: int) -> MatchRecord:
        rng = spawn(config.seed, "schedule", index)
        a, b = schedule_next(rng, roster)
        return play_match(a, b, judge, context_pool, index, config.seed, config.allow_tie)

    def handle_failure(index: int, error: Exception) -> None:
        nonlocal skipped
        if config.failure_policy == "abort":
            raise error
        skipped += 1
        attempted = len(log) + skipped
        if skipped > max(1.0, config.failure_cap_fraction * attempted):
            raise JudgeError(
                f"aborting: {skipped} failed matches out of {attempted} attempted"
            ) from error

    def apply_played(record: MatchRecord) -> bool:
        completed = apply_outcome(record, by_id, rating_config)
        log.append(completed)
        return tracker.record(
            leaderboard_order(roster), (completed.player_a, completed.player_b)
        )

    index = 0
    index_limit = 2 * cap + 100  # skips consume indices; keep a hard stop
    if config.width == 1:
        while len(log) < cap and index < index_limit:
            try:
                record = play(index)
            except (JudgeError, SamplerError) as error:
                handle_failure(index, error)
                index += 1
                continue
            index += 1
            if apply_played(record):
                converged = True
                break
    else:
        with ThreadPoolExecutor(max_workers=config.width) as pool:
            pending = []
            while len(log) < cap and index < index_limit and not converged:
                while len(pending) < config.width and index < index_limit:
                    pending.append((index, pool.submit(play, index)))
                    index += 1
                head_index, head = pending.pop(0)
                try:
                    record = head.result()
                except (JudgeError, SamplerError) as error:
                    handle_failure(head_index, error)
                    continue
                if apply_played(record):
                    converged = True
            for _, future in pending:
                future.cancel()

    leaderboard = [
        Standing(pid, by_id[pid].rating, by_id[pid].games_played)
        for pid in leaderboard_order(roster)
    ]
    return TournamentResult(
        leaderboard=leaderboard,
        match_log=log,
        converged=converged,
        matches_played=len(log),
        skipped_matches=skipped,
    )

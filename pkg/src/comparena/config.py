"""Run configuration: one JSON file per run, validated before any work starts.

Validation is total: every invalid field is collected and reported at once
by its path (e.g. ``rating.tau: must be > 0``), so a bad config never gets
halfway through a run.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from .judges import OracleJudgeConfig
from .monitor import MonitorConfig
from .rating import RatingConfig
from .supervision import WeakSupervisionConfig
from .tournament import TournamentConfig

ENDPOINT_ENV_VAR = "COMPARENA_JUDGE_ENDPOINT"

JUDGE_KINDS = ("oracle", "remote", "scripted")
PLAYER_MODES = ("model", "sample")


class ConfigError(Exception):
    """One or more config fields are invalid; ``errors`` lists them all."""

    def __init__(self, errors: List[str]):
        self.errors = errors
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass(frozen=True)
class RemoteJudgeSpec:
    endpoint: str = ""
    timeout: float = 10.0
    retries: int = 2


@dataclass(frozen=True)
class JudgeSpec:
    kind: str = "oracle"
    allow_tie: bool = True
    oracle: Optional[OracleJudgeConfig] = None
    remote: RemoteJudgeSpec = RemoteJudgeSpec()
    scripted_labels: tuple = ()


@dataclass(frozen=True)
class ScoreSpec:
    methods: tuple = ("reference", "sample_rating", "model_rating")
    reference_count: int = 50
    sample_budget: int = 10_000
    samples_per_model: int = 100


@dataclass(frozen=True)
class SimulateSpec:
    players: int = 5
    trials: int = 20
    quality_base: float = 0.0
    quality_gap: float = 1.0
    qualities: Optional[tuple] = None
    flip_prob: float = 0.1
    tie_band: float = 0.25
    sample_noise: float = 0.0
    contexts: int = 16


@dataclass(frozen=True)
class PathsSpec:
    out: str = "out"
    samples: Optional[str] = None
    real: Optional[str] = None
    generated: Optional[str] = None
    human_scores: Optional[str] = None
    contexts: Optional[str] = None
    checkpoints: Optional[str] = None
    metric_scores: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    player_mode: str = "model"
    truncate_words: Optional[int] = None
    rating: RatingConfig = field(default_factory=RatingConfig)
    tournament: TournamentConfig = field(default_factory=TournamentConfig)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    weak_supervision: WeakSupervisionConfig = field(default_factory=WeakSupervisionConfig)
    judge: JudgeSpec = field(default_factory=JudgeSpec)
    score: ScoreSpec = field(default_factory=ScoreSpec)
    simulate: SimulateSpec = field(default_factory=SimulateSpec)
    paths: PathsSpec = field(default_factory=PathsSpec)
    raw: Dict[str, Any] = field(default_factory=dict, compare=False)


class _Reader:
    """Typed field extraction that accumulates errors instead of raising."""

    def __init__(self, data: Dict[str, Any], errors: List[str]):
        self.data = data
        self.errors = errors

    def section(self, name: str) -> Dict[str, Any]:
        value = self.data.get(name, {})
        if not isinstance(value, dict):
            self.errors.append(f"{name}: must be an object")
            return {}
        return value

    def value(self, section: Dict[str, Any], path: str, kinds, default, predicate=None, hint=""):
        name = path.rsplit(".", 1)[-1]
        if name not in section:
            return default
        value = section[name]
        if isinstance(value, bool) and bool not in (kinds if isinstance(kinds, tuple) else (kinds,)):
            self.errors.append(f"{path}: expected {self._kind_name(kinds)}, got a boolean")
            return default
        if kinds is float and isinstance(value, int):
            value = float(value)
        if not isinstance(value, kinds):
            self.errors.append(f"{path}: expected {self._kind_name(kinds)}, got {type(value).__name__}")
            return default
        if predicate is not None and not predicate(value):
            self.errors.append(f"{path}: {hint or 'invalid value'} (got {value!r})")
            return default
        return value

    @staticmethod
    def _kind_name(kinds) -> str:
        if isinstance(kinds, tuple):
            return " or ".join(k.__name__ for k in kinds)
        return kinds.__name__


def _build_dataclass(cls, kwargs: Dict[str, Any], path: str, errors: List[str]):
    try:
        return cls(**kwargs)
    except ValueError as exc:
        errors.append(f"{path}: {exc}")
        return cls()


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    """Validate a parsed config document; raises ConfigError listing every problem."""
    if not isinstance(data, dict):
        raise ConfigError(["config root must be a JSON object"])
    errors: List[str] = []
    reader = _Reader(data, errors)

    known_sections = {
        "seed", "player_mode", "truncate_words", "rating", "tournament", "monitor",
        "weak_supervision", "judge", "score", "simulate", "paths",
    }
    for key in sorted(set(data) - known_sections):
        errors.append(f"{key}: unknown config section")

    seed = reader.value(data, "seed", int, 0)
    player_mode = reader.value(
        data, "player_mode", str, "model",
        lambda v: v in PLAYER_MODES, f"must be one of {PLAYER_MODES}",
    )
    truncate_words = reader.value(
        data, "truncate_words", int, None, lambda v: v >= 1, "must be >= 1"
    )

    rating_data = reader.section("rating")
    rating = _build_dataclass(
        RatingConfig,
        {
            "tau": reader.value(rating_data, "rating.tau", float, 0.5),
            "epsilon": reader.value(rating_data, "rating.epsilon", float, 1e-6),
            "tie_ratio": reader.value(rating_data, "rating.tie_ratio", float, 0.1),
            "initial_rating": reader.value(rating_data, "rating.initial_rating", float, 1500.0),
            "initial_deviation": reader.value(rating_data, "rating.initial_deviation", float, 350.0),
            "initial_volatility": reader.value(rating_data, "rating.initial_volatility", float, 0.06),
        },
        "rating", errors,
    )

    judge = _read_judge(reader, seed, errors)

    tournament_data = reader.section("tournament")
    tournament = _build_dataclass(
        TournamentConfig,
        {
            "seed": seed,
            "min_plays_per_player": reader.value(
                tournament_data, "tournament.min_plays_per_player", int, 50
            ),
            "max_matches": reader.value(tournament_data, "tournament.max_matches", int, 100_000),
            "plays_budget": reader.value(tournament_data, "tournament.plays_budget", int, None),
            "width": reader.value(tournament_data, "tournament.width", int, 1),
            "allow_tie": judge.allow_tie,
            "failure_policy": reader.value(
                tournament_data, "tournament.failure_policy", str, "skip",
                lambda v: v in ("skip", "abort"), "must be 'skip' or 'abort'",
            ),
        },
        "tournament", errors,
    )

    monitor_data = reader.section("monitor")
    monitor = _build_dataclass(
        MonitorConfig,
        {
            "n_comparisons": reader.value(monitor_data, "monitor.n_comparisons", int, 1000),
            "k_baselines": reader.value(monitor_data, "monitor.k_baselines", int, 2),
            "patience": reader.value(monitor_data, "monitor.patience", int, 5),
            "seed": seed,
            "reuse_contexts": reader.value(monitor_data, "monitor.reuse_contexts", bool, True),
        },
        "monitor", errors,
    )

    weak_data = reader.section("weak_supervision")
    weak = _build_dataclass(
        WeakSupervisionConfig,
        {
            "min_margin_fraction": reader.value(
                weak_data, "weak_supervision.min_margin_fraction", float, 0.10
            ),
            "converged_exclusion_fraction": reader.value(
                weak_data, "weak_supervision.converged_exclusion_fraction", float, 0.20
            ),
            "curriculum_stages": reader.value(
                weak_data, "weak_supervision.curriculum_stages", int, 1
            ),
        },
        "weak_supervision", errors,
    )

    score = _read_score(reader, errors)
    simulate = _read_simulate(reader, errors)
    paths = _read_paths(reader, errors)

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        seed=seed,
        player_mode=player_mode,
        truncate_words=truncate_words,
        rating=rating,
        tournament=tournament,
        monitor=monitor,
        weak_supervision=weak,
        judge=judge,
        score=score,
        simulate=simulate,
        paths=paths,
        raw=data,
    )


def _read_judge(reader: _Reader, seed: int, errors: List[str]) -> JudgeSpec:
    judge_data = reader.section("judge")
    kind = reader.value(
        judge_data, "judge.kind", str, "oracle",
        lambda v: v in JUDGE_KINDS, f"must be one of {JUDGE_KINDS}",
    )
    allow_tie = reader.value(judge_data, "judge.allow_tie", bool, True)

    oracle = None
    oracle_data = judge_data.get("oracle")
    if oracle_data is not None and not isinstance(oracle_data, dict):
        errors.append("judge.oracle: must be an object")
        oracle_data = None
    if oracle_data is not None:
        quality = oracle_data.get("latent_quality", {})
        if not isinstance(quality, dict) or not all(
            isinstance(k, str) and isinstance(v, (int, float)) and not isinstance(v, bool)
            for k, v in quality.items()
        ):
            errors.append("judge.oracle.latent_quality: must map player ids to numbers")
            quality = {}
        try:
            oracle = OracleJudgeConfig(
                latent_quality={k: float(v) for k, v in quality.items()},
                sample_noise=reader.value(oracle_data, "judge.oracle.sample_noise", float, 0.0),
                tie_band=reader.value(oracle_data, "judge.oracle.tie_band", float, 0.0),
                flip_prob=reader.value(oracle_data, "judge.oracle.flip_prob", float, 0.0),
                seed=reader.value(oracle_data, "judge.oracle.seed", int, seed),
            )
        except ValueError as exc:
            errors.append(f"judge.oracle: {exc}")

    remote_data = judge_data.get("remote", {})
    if not isinstance(remote_data, dict):
        errors.append("judge.remote: must be an object")
        remote_data = {}
    endpoint = reader.value(remote_data, "judge.remote.endpoint", str, "")
    if not endpoint:
        endpoint = os.environ.get(ENDPOINT_ENV_VAR, "")
    remote = RemoteJudgeSpec(
        endpoint=endpoint,
        timeout=reader.value(
            remote_data, "judge.remote.timeout", float, 10.0, lambda v: v > 0, "must be > 0"
        ),
        retries=reader.value(
            remote_data, "judge.remote.retries", int, 2, lambda v: v >= 0, "must be >= 0"
        ),
    )

    labels = judge_data.get("scripted", [])
    if not isinstance(labels, list) or not all(
        isinstance(v, str) and v in ("better", "worse", "tie") for v in labels
    ):
        errors.append("judge.scripted: must be a list of better/worse/tie labels")
        labels = []

    return JudgeSpec(
        kind=kind, allow_tie=allow_tie, oracle=oracle, remote=remote,
        scripted_labels=tuple(labels),
    )


def _read_score(reader: _Reader, errors: List[str]) -> ScoreSpec:
    score_data = reader.section("score")
    methods = score_data.get("methods", ["reference", "sample_rating", "model_rating"])
    valid_methods = ("reference", "sample_rating", "model_rating")
    if not isinstance(methods, list) or not methods or not all(m in valid_methods for m in methods):
        errors.append(f"score.methods: must be a non-empty subset of {valid_methods}")
        methods = list(valid_methods)
    return ScoreSpec(
        methods=tuple(methods),
        reference_count=reader.value(
            score_data, "score.reference_count", int, 50, lambda v: v >= 1, "must be >= 1"
        ),
        sample_budget=reader.value(
            score_data, "score.sample_budget", int, 10_000, lambda v: v >= 1, "must be >= 1"
        ),
        samples_per_model=reader.value(
            score_data, "score.samples_per_model", int, 100, lambda v: v >= 1, "must be >= 1"
        ),
    )


def _read_simulate(reader: _Reader, errors: List[str]) -> SimulateSpec:
    sim_data = reader.section("simulate")
    qualities = sim_data.get("qualities")
    if qualities is not None:
        if not isinstance(qualities, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in qualities
        ):
            errors.append("simulate.qualities: must be a list of numbers")
            qualities = None
        elif len(qualities) < 2:
            errors.append("simulate.qualities: needs at least 2 players")
            qualities = None
    return SimulateSpec(
        players=reader.value(
            sim_data, "simulate.players", int, 5, lambda v: v >= 2, "must be >= 2"
        ),
        trials=reader.value(
            sim_data, "simulate.trials", int, 20, lambda v: v >= 1, "must be >= 1"
        ),
        quality_base=reader.value(sim_data, "simulate.quality_base", float, 0.0),
        quality_gap=reader.value(sim_data, "simulate.quality_gap", float, 1.0),
        qualities=None if qualities is None else tuple(float(q) for q in qualities),
        flip_prob=reader.value(
            sim_data, "simulate.flip_prob", float, 0.1,
            lambda v: 0 <= v < 0.5, "must be in [0, 0.5)",
        ),
        tie_band=reader.value(
            sim_data, "simulate.tie_band", float, 0.25, lambda v: v >= 0, "must be >= 0"
        ),
        sample_noise=reader.value(
            sim_data, "simulate.sample_noise", float, 0.0, lambda v: v >= 0, "must be >= 0"
        ),
        contexts=reader.value(
            sim_data, "simulate.contexts", int, 16, lambda v: v >= 1, "must be >= 1"
        ),
    )


def _read_paths(reader: _Reader, errors: List[str]) -> PathsSpec:
    paths_data = reader.section("paths")
    def path_value(name):
        return reader.value(paths_data, f"paths.{name}", str, None)

    return PathsSpec(
        out=reader.value(paths_data, "paths.out", str, "out"),
        samples=path_value("samples"),
        real=path_value("real"),
        generated=path_value("generated"),
        human_scores=path_value("human_scores"),
        contexts=path_value("contexts"),
        checkpoints=path_value("checkpoints"),
        metric_scores=path_value("metric_scores"),
    )


def load_config(path: Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror or exc}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})"]) from exc
    return config_from_dict(data)


def build_judge(config: RunConfig):
    """Construct the configured judge; kind-specific requirements checked here.

    This runs before any command does work, so a missing oracle table,
    endpoint, or script still fails fast with a named config error.
    """
    from .judges import OracleJudge, RemoteJudge, ScriptedJudge, binary_adapter

    spec = config.judge
    if spec.kind == "oracle":
        if spec.oracle is None or not spec.oracle.latent_quality:
            raise ConfigError(
                ["judge.oracle.latent_quality: required when judge.kind is 'oracle'"]
            )
        judge = OracleJudge(spec.oracle)
    elif spec.kind == "remote":
        if not spec.remote.endpoint:
            raise ConfigError(
                [
                    "judge.remote.endpoint: required for a remote judge "
                    f"(flag --endpoint or ${ENDPOINT_ENV_VAR} also work)"
                ]
            )
        judge = RemoteJudge(
            spec.remote.endpoint, timeout=spec.remote.timeout, retries=spec.remote.retries
        )
    else:
        if not spec.scripted_labels:
            raise ConfigError(
                ["judge.scripted: required (non-empty) when judge.kind is 'scripted'"]
            )
        judge = ScriptedJudge(list(spec.scripted_labels))
    if not spec.allow_tie:
        judge = binary_adapter(judge)
    return judge


def apply_overrides(
    config: RunConfig,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    judge_kind: Optional[str] = None,
    endpoint: Optional[str] = None,
) -> RunConfig:
    """CLI flag overrides; re-validates through the dict path."""
    data = dict(config.raw)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data.setdefault("paths", {})
        data["paths"] = {**data["paths"], "out": out}
    if judge_kind is not None:
        data.setdefault("judge", {})
        data["judge"] = {**data["judge"], "kind": judge_kind}
    if endpoint is not None:
        judge_section = dict(data.get("judge", {}))
        remote_section = dict(judge_section.get("remote", {}))
        remote_section["endpoint"] = endpoint
        judge_section["remote"] = remote_section
        data["judge"] = judge_section
    return config_from_dict(data)

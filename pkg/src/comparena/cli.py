"""Command-line entry points tying the library into reproducible runs.

Subcommands: build-pairs, rate, score, correlate, monitor, simulate. Every
command takes a JSON config file, honors ``--seed``/``--out``/``--judge``
overrides, writes its data outputs atomically into the output directory,
and (unless ``--no-figures``) renders report figures next to them.

Exit codes: 0 ok, 2 config error, 3 input error, 4 judge transport error,
5 finished without convergence (outputs still written).
"""

from __future__ import annotations

import argparse
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import report
from .config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    build_judge,
    load_config,
)
from .judges import JudgeUnavailableError, ProtocolViolationError
from .monitor import CheckpointComparison, compare_checkpoints, should_stop
from .scoring import (
    UndefinedCorrelationError,
    draw_references,
    model_score_avg_reference,
    model_score_avg_sample_rating,
    pearson,
    reference_score,
    sample_skill_rating,
    spearman,
)
from .seeding import spawn
from .simulate import run_simulation
from .storage import (
    InputError,
    config_hash,
    load_contexts,
    load_human_scores,
    load_samples,
    write_csv,
    write_json,
    write_jsonl,
    write_manifest,
    write_run_meta,
)
from .supervision import (
    Sample,
    build_strong_pairs,
    build_weak_pairs,
    curriculum_order,
    group_by_checkpoint,
    pairs_from_scores,
    truncate_sample,
)
from .tournament import (
    ContextPool,
    Player,
    TournamentResult,
    constant_player,
    pool_player,
    run,
    synthetic_player,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_JUDGE = 4
EXIT_NO_CONVERGENCE = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comparena",
        description="Rank text generators by judged pairwise comparison with skill ratings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("build-pairs", "construct strong/weak/human training pairs from sample files"),
        ("rate", "run a skill-rating tournament and emit the leaderboard"),
        ("score", "score samples and models via reference points and ratings"),
        ("correlate", "correlate metric scores with human scores"),
        ("monitor", "evaluate checkpoints in sequence and apply the early-stop rule"),
        ("simulate", "synthetic ranking-recovery validation with an oracle judge"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, type=Path, help="run config JSON")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--out", default=None, help="override the output directory")
        cmd.add_argument(
            "--judge", default=None, choices=("oracle", "remote", "scripted"),
            help="override the judge kind",
        )
        cmd.add_argument("--endpoint", default=None, help="remote judge endpoint URL")
        cmd.add_argument(
            "--no-figures", action="store_true", help="skip rendering report figures"
        )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        config = apply_overrides(
            config, seed=args.seed, out=args.out,
            judge_kind=args.judge, endpoint=args.endpoint,
        )
        out_dir = Path(config.paths.out)
        figures = not args.no_figures
        handler = {
            "build-pairs": cmd_build_pairs,
            "rate": cmd_rate,
            "score": cmd_score,
            "correlate": cmd_correlate,
            "monitor": cmd_monitor,
            "simulate": cmd_simulate,
        }[args.command]
        return handler(config, out_dir, figures)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (JudgeUnavailableError, ProtocolViolationError) as exc:
        print(f"judge error: {exc}", file=sys.stderr)
        return EXIT_JUDGE


def _require_path(value: Optional[str], field: str) -> Path:
    if not value:
        raise ConfigError([f"paths.{field}: required by this command"])
    return Path(value)


def _truncate_all(samples: List[Sample], max_words: Optional[int]) -> List[Sample]:
    if max_words is None:
        return samples
    from dataclasses import replace

    return [replace(s, text=truncate_sample(s.text, max_words)) for s in samples]


# ---------------------------------------------------------------- build-pairs


def cmd_build_pairs(config: RunConfig, out_dir: Path, figures: bool) -> int:
    digest = config_hash(config.raw)
    real: List[Sample] = []
    generated: List[Sample] = []
    if config.paths.real:
        real = [s for s in load_samples(Path(config.paths.real)) if s.origin == "human"]
    if config.paths.generated:
        generated = [
            s for s in load_samples(Path(config.paths.generated)) if s.origin == "model"
        ]
    if not real and not generated:
        raise ConfigError(["paths.real / paths.generated: at least one is required"])
    real = _truncate_all(real, config.truncate_words)
    generated = _truncate_all(generated, config.truncate_words)

    strong = build_strong_pairs(real, generated)

    warnings: List[str] = []
    checkpoints = group_by_checkpoint(generated)
    models_with_history = {
        model for model, _ in checkpoints if sum(m == model for m, _ in checkpoints) >= 2
    }
    if models_with_history:
        weak = build_weak_pairs(checkpoints, config.weak_supervision)
    else:
        weak = []
        warnings.append("no model has two or more checkpoints; weak supervision is empty")

    human_pairs = []
    if config.paths.human_scores:
        scores = load_human_scores(Path(config.paths.human_scores))
        by_sample: Dict[str, List[int]] = defaultdict(list)
        for sample_id, score, _ in scores:
            by_sample[sample_id].append(score)
        sample_index = {s.id: s for s in real + generated}
        scored = []
        for sample_id in sorted(by_sample):
            if sample_id not in sample_index:
                raise InputError(
                    f"{config.paths.human_scores}: score for unknown sample {sample_id!r}"
                )
            values = by_sample[sample_id]
            rounded = round(sum(values) / len(values))
            scored.append((sample_index[sample_id], int(min(5, max(1, rounded)))))
        human_pairs = pairs_from_scores(scored)

    all_pairs = strong + weak + human_pairs
    stages = curriculum_order(all_pairs, config.weak_supervision.curriculum_stages, config.seed)
    stage_summary = []
    for number, stage in enumerate(stages, start=1):
        weak_margins = [p.margin for p in stage if p.provenance == "weak"]
        stage_summary.append(
            {
                "stage": number,
                "pairs": len(stage),
                "weak_pairs": len(weak_margins),
                "min_margin": min(weak_margins) if weak_margins else None,
                "max_margin": max(weak_margins) if weak_margins else None,
            }
        )

    outputs = {}
    for name, pairs in (("strong", strong), ("weak", weak), ("human", human_pairs)):
        path = out_dir / f"{name}_pairs.jsonl"
        write_jsonl(path, (p.as_dict() for p in pairs))
        outputs[f"{name}_pairs"] = path.name

    write_manifest(
        out_dir, "build-pairs", digest, outputs,
        extras={
            "counts": {
                "strong": len(strong),
                "weak": len(weak),
                "human": len(human_pairs),
                "unordered_total": len(all_pairs) // 2,
            },
            "curriculum": stage_summary,
            "warnings": warnings,
        },
    )
    write_run_meta(out_dir, "build-pairs", digest)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(
        f"wrote {len(strong)} strong / {len(weak)} weak / {len(human_pairs)} human "
        f"pair rows to {out_dir}"
    )
    return EXIT_OK


# ----------------------------------------------------------------------- rate


def _players_from_config(config: RunConfig) -> Tuple[List[Player], ContextPool]:
    """Players plus the shared context pool, per the configured player mode."""
    if config.paths.samples:
        samples = load_samples(Path(config.paths.samples))
        model_samples = [s for s in samples if s.origin == "model"]
        if config.player_mode == "sample":
            players = [constant_player(s.id, s.text, config.rating) for s in model_samples]
            contexts = sorted({s.context for s in model_samples})
        else:
            pools: Dict[str, Dict[str, List[str]]] = defaultdict(lambda: defaultdict(list))
            for s in model_samples:
                pools[s.model_id][s.context].append(s.text)
            players = [
                pool_player(model_id, dict(ctx_pool), config.rating)
                for model_id, ctx_pool in sorted(pools.items())
            ]
            shared = None
            for ctx_pool in pools.values():
                keys = set(ctx_pool)
                shared = keys if shared is None else shared & keys
            contexts = sorted(shared or set())
        if config.paths.contexts:
            contexts = load_contexts(Path(config.paths.contexts))
        if not contexts:
            raise InputError(
                "players share no contexts; provide paths.contexts or aligned samples"
            )
        if len(players) < 2:
            raise InputError(f"need at least 2 players, found {len(players)}")
        return players, ContextPool.from_texts(contexts)

    if config.judge.kind == "oracle" and config.judge.oracle is not None:
        ids = sorted(config.judge.oracle.latent_quality)
        if len(ids) < 2:
            raise ConfigError(["judge.oracle.latent_quality: need at least 2 players"])
        players = [synthetic_player(pid, config.rating) for pid in ids]
        contexts = [f"synthetic prompt {i}" for i in range(config.simulate.contexts)]
        return players, ContextPool.from_texts(contexts)

    raise ConfigError(["paths.samples: required unless an oracle judge defines the players"])


def _write_tournament_outputs(
    result: TournamentResult, out_dir: Path, command: str, digest: str, figures: bool
) -> None:
    write_json(out_dir / "leaderboard.json", result.leaderboard_dict())
    write_jsonl(out_dir / "matches.jsonl", (r.as_dict() for r in result.match_log))
    write_csv(
        out_dir / "leaderboard.csv",
        ["rank", "player_id", "rating", "deviation", "volatility", "games"],
        [
            [i + 1, s.player_id, f"{s.rating.rating:.4f}", f"{s.rating.deviation:.4f}",
             f"{s.rating.volatility:.6f}", s.games_played]
            for i, s in enumerate(result.leaderboard)
        ],
    )
    outputs = {
        "leaderboard": "leaderboard.json",
        "matches": "matches.jsonl",
        "leaderboard_csv": "leaderboard.csv",
    }
    if figures:
        report.save_rating_trajectories(result.match_log, out_dir / "figures" / "rating_trajectories.png")
        report.save_leaderboard(result.leaderboard, out_dir / "figures" / "leaderboard.png")
        outputs["figures"] = "figures/"
    write_manifest(
        out_dir, command, digest, outputs,
        extras={
            "converged": result.converged,
            "matches_played": result.matches_played,
            "skipped_matches": result.skipped_matches,
        },
    )
    write_run_meta(out_dir, command, digest)


def cmd_rate(config: RunConfig, out_dir: Path, figures: bool) -> int:
    digest = config_hash(config.raw)
    judge = build_judge(config)
    players, pool = _players_from_config(config)
    result = run(players, judge, pool, config.tournament, config.rating)
    _write_tournament_outputs(result, out_dir, "rate", digest, figures)
    top = result.leaderboard[0]
    print(
        f"{result.matches_played} matches, converged={result.converged}, "
        f"leader {top.player_id} at {top.rating.rating:.1f}"
    )
    if not result.converged:
        print("warning: budget exhausted before convergence", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


# ---------------------------------------------------------------------- score


def cmd_score(config: RunConfig, out_dir: Path, figures: bool) -> int:
    digest = config_hash(config.raw)
    judge = build_judge(config)
    samples = [
        s for s in load_samples(_require_path(config.paths.samples, "samples"))
        if s.origin == "model"
    ]
    if not samples:
        raise InputError("no model samples to score")

    by_model: Dict[str, List[Sample]] = defaultdict(list)
    for s in samples:
        by_model[s.model_id].append(s)
    selected: Dict[str, List[Sample]] = {}
    for model_id in sorted(by_model):
        group = by_model[model_id]
        cap = config.score.samples_per_model
        if len(group) > cap:
            group = spawn(config.seed, "score-select", model_id).sample(group, cap)
        selected[model_id] = group
    evaluated = [s for model_id in sorted(selected) for s in selected[model_id]]

    sample_rows: List[dict] = []
    model_rows: List[dict] = []
    scores_by_method: Dict[str, Dict[str, float]] = {}

    if "reference" in config.score.methods:
        refs = draw_references(samples, config.score.reference_count, config.seed)
        per_model: Dict[str, float] = {}
        for model_id in sorted(selected):
            values = []
            for sample in selected[model_id]:
                score = reference_score(sample, refs, judge)
                values.append(score.value)
                sample_rows.append(
                    {"sample_id": sample.id, "method": "reference_points", "value": score.value}
                )
            per_model[model_id] = sum(values) / len(values)
            model_rows.append(
                {"model_id": model_id, "method": "avg_reference", "value": per_model[model_id]}
            )
        scores_by_method["avg_reference"] = per_model

    if "sample_rating" in config.score.methods:
        ratings = sample_skill_rating(
            evaluated, judge, budget=config.score.sample_budget, seed=config.seed,
            rating_config=config.rating,
            min_plays_per_player=config.tournament.min_plays_per_player,
        )
        for sample in evaluated:
            sample_rows.append(
                {"sample_id": sample.id, "method": "skill_rating", "value": ratings[sample.id]}
            )
        per_model = {}
        for model_id in sorted(selected):
            score = model_score_avg_sample_rating(
                ratings, [s.id for s in selected[model_id]], model_id
            )
            per_model[model_id] = score.value
            model_rows.append(
                {"model_id": model_id, "method": "avg_sample_rating", "value": score.value}
            )
        scores_by_method["avg_sample_rating"] = per_model

    rate_converged = True
    if "model_rating" in config.score.methods:
        pools: Dict[str, Dict[str, List[str]]] = defaultdict(lambda: defaultdict(list))
        for s in samples:
            pools[s.model_id][s.context].append(s.text)
        players = [
            pool_player(model_id, dict(ctx_pool), config.rating)
            for model_id, ctx_pool in sorted(pools.items())
        ]
        shared = None
        for ctx_pool in pools.values():
            keys = set(ctx_pool)
            shared = keys if shared is None else shared & keys
        if len(players) < 2:
            raise InputError("model_rating needs at least 2 models")
        if not shared:
            raise InputError("models share no contexts; model_rating needs aligned samples")
        result = run(
            players, judge, ContextPool.from_texts(sorted(shared)),
            config.tournament, config.rating,
        )
        rate_converged = result.converged
        per_model = result.ratings()
        for standing in result.leaderboard:
            model_rows.append(
                {
                    "model_id": standing.player_id,
                    "method": "model_skill_rating",
                    "value": standing.rating.rating,
                }
            )
        scores_by_method["model_skill_rating"] = per_model

    write_json(
        out_dir / "scores.json",
        {
            "format_version": 1,
            "config_hash": digest,
            "sample_scores": sample_rows,
            "model_scores": model_rows,
        },
    )
    write_csv(
        out_dir / "sample_scores.csv",
        ["sample_id", "method", "value"],
        [[r["sample_id"], r["method"], r["value"]] for r in sample_rows],
    )
    write_csv(
        out_dir / "model_scores.csv",
        ["model_id", "method", "value"],
        [[r["model_id"], r["method"], r["value"]] for r in model_rows],
    )
    outputs = {
        "scores": "scores.json",
        "sample_scores_csv": "sample_scores.csv",
        "model_scores_csv": "model_scores.csv",
    }
    if figures and scores_by_method:
        report.save_model_scores(scores_by_method, out_dir / "figures" / "model_scores.png")
        outputs["figures"] = "figures/"
    write_manifest(
        out_dir, "score", digest, outputs,
        extras={"methods": list(config.score.methods), "models": sorted(by_model)},
    )
    write_run_meta(out_dir, "score", digest)
    print(
        f"scored {len(evaluated)} samples across {len(by_model)} models "
        f"({', '.join(config.score.methods)})"
    )
    if not rate_converged:
        print("warning: model rating budget exhausted before convergence", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


# ------------------------------------------------------------------ correlate


def cmd_correlate(config: RunConfig, out_dir: Path, figures: bool) -> int:
    import json as _json

    digest = config_hash(config.raw)
    scores_path = _require_path(config.paths.metric_scores, "metric_scores")
    try:
        metric_doc = _json.loads(scores_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"{scores_path}: {exc.strerror or exc}") from exc
    except _json.JSONDecodeError as exc:
        raise InputError(f"{scores_path}: invalid JSON ({exc.msg})") from exc

    human_rows = load_human_scores(_require_path(config.paths.human_scores, "human_scores"))
    human_by_sample: Dict[str, List[int]] = defaultdict(list)
    for sample_id, score, _ in human_rows:
        human_by_sample[sample_id].append(score)
    human_mean = {sid: sum(v) / len(v) for sid, v in human_by_sample.items()}

    sample_to_model: Dict[str, str] = {}
    if config.paths.samples:
        for s in load_samples(Path(config.paths.samples)):
            if s.origin == "model" and s.model_id:
                sample_to_model[s.id] = s.model_id

    def correlate_level(rows, key, human_values):
        by_method: Dict[str, List[Tuple[float, float]]] = defaultdict(list)
        for row in rows:
            ident = row.get(key)
            method = row.get("method")
            value = row.get("value")
            if ident in human_values and method and isinstance(value, (int, float)):
                by_method[method].append((float(value), float(human_values[ident])))
        results = {}
        for method, points in sorted(by_method.items()):
            if len(points) < 3:
                raise InputError(
                    f"{method}: joined only {len(points)} rows; need at least 3"
                )
            x = [p[0] for p in points]
            y = [p[1] for p in points]
            try:
                results[method] = {
                    "pearson": pearson(x, y).as_dict(),
                    "spearman": spearman(x, y).as_dict(),
                    "n": len(points),
                }
            except UndefinedCorrelationError as exc:
                raise InputError(f"{method}: {exc}") from exc
        return results, by_method

    sample_results, sample_points = correlate_level(
        metric_doc.get("sample_scores", []), "sample_id", human_mean
    )

    model_results: Dict[str, dict] = {}
    model_points: Dict[str, List[Tuple[float, float]]] = {}
    if sample_to_model:
        model_human: Dict[str, List[float]] = defaultdict(list)
        for sample_id, value in human_mean.items():
            model_id = sample_to_model.get(sample_id)
            if model_id:
                model_human[model_id].append(value)
        model_human_mean = {m: sum(v) / len(v) for m, v in model_human.items()}
        model_results, model_points = correlate_level(
            metric_doc.get("model_scores", []), "model_id", model_human_mean
        )

    if not sample_results and not model_results:
        raise InputError("nothing to correlate: no metric rows joined with human scores")

    write_json(
        out_dir / "correlations.json",
        {
            "format_version": 1,
            "config_hash": digest,
            "sample_level": sample_results,
            "model_level": model_results,
        },
    )
    csv_rows = []
    for level, results in (("sample", sample_results), ("model", model_results)):
        for method, entry in sorted(results.items()):
            for kind in ("pearson", "spearman"):
                csv_rows.append(
                    [level, method, kind,
                     f"{entry[kind]['coefficient']:.6f}", f"{entry[kind]['p_value']:.6g}",
                     entry["n"]]
                )
    write_csv(
        out_dir / "correlations.csv",
        ["level", "method", "kind", "coefficient", "p_value", "n"],
        csv_rows,
    )
    outputs = {"correlations": "correlations.json", "correlations_csv": "correlations.csv"}
    if figures:
        for level, points, results in (
            ("sample", sample_points, sample_results),
            ("model", model_points, model_results),
        ):
            if not points:
                continue
            annotations = {
                method: (
                    f"r={results[method]['pearson']['coefficient']:.3f}  "
                    f"rho={results[method]['spearman']['coefficient']:.3f}"
                )
                for method in results
            }
            report.save_correlation_scatter(
                points, annotations, out_dir / "figures" / f"correlation_{level}.png"
            )
        outputs["figures"] = "figures/"
    write_manifest(out_dir, "correlate", digest, outputs)
    write_run_meta(out_dir, "correlate", digest)
    print(
        f"correlated {len(sample_results)} sample-level and "
        f"{len(model_results)} model-level methods"
    )
    return EXIT_OK


# -------------------------------------------------------------------- monitor


def _discover_checkpoints(root: Path) -> List[Tuple[int, Path]]:
    """Checkpoint sample sets: ``<step>.jsonl`` files or ``<step>/*.jsonl`` dirs."""
    if not root.is_dir():
        raise InputError(f"{root}: checkpoint directory not found")
    found: List[Tuple[int, Path]] = []
    for entry in root.iterdir():
        stem = entry.stem if entry.is_file() else entry.name
        if entry.is_file() and entry.suffix != ".jsonl":
            continue
        try:
            step = int(stem)
        except ValueError:
            continue
        found.append((step, entry))
    if not found:
        raise InputError(f"{root}: no step-named .jsonl files or directories")
    return sorted(found)


def _load_checkpoint(entry: Path) -> List[Sample]:
    if entry.is_file():
        return load_samples(entry)
    files = sorted(entry.glob("*.jsonl"))
    if not files:
        raise InputError(f"{entry}: checkpoint directory has no .jsonl files")
    samples: List[Sample] = []
    for file in files:
        samples.extend(load_samples(file))
    return samples


def cmd_monitor(config: RunConfig, out_dir: Path, figures: bool) -> int:
    digest = config_hash(config.raw)
    judge = build_judge(config)
    checkpoints = _discover_checkpoints(_require_path(config.paths.checkpoints, "checkpoints"))
    if len(checkpoints) < config.monitor.k_baselines + 1:
        raise InputError(
            f"need at least {config.monitor.k_baselines + 1} checkpoints, "
            f"found {len(checkpoints)}"
        )
    loaded = [(step, _load_checkpoint(entry)) for step, entry in checkpoints]

    history: List[CheckpointComparison] = []
    audit_rows: List[dict] = []
    stop_round: Optional[int] = None
    k = config.monitor.k_baselines
    for round_index in range(k, len(loaded)):
        latest_step, latest = loaded[round_index]
        baselines = [loaded[round_index - offset][1] for offset in range(1, k + 1)]
        comparison = compare_checkpoints(
            latest, baselines, judge, config.monitor, round_index=round_index
        )
        history.append(comparison)
        stop = should_stop(history, config.monitor.patience)
        audit_rows.append(
            {
                "round": round_index,
                "latest_step": latest_step,
                "baseline_steps": list(comparison.baseline_steps),
                "wins": comparison.wins,
                "losses": comparison.losses,
                "ties": comparison.ties,
                "stop": stop,
            }
        )
        if stop:
            stop_round = round_index
            break

    write_jsonl(out_dir / "monitor_log.jsonl", audit_rows)
    write_json(
        out_dir / "monitor.json",
        {
            "format_version": 1,
            "config_hash": digest,
            "rounds": len(history),
            "stop_round": stop_round,
            "stopped": stop_round is not None,
            "patience": config.monitor.patience,
            "n_comparisons": config.monitor.n_comparisons,
            "k_baselines": k,
        },
    )
    outputs = {"monitor_log": "monitor_log.jsonl", "summary": "monitor.json"}
    if figures and history:
        report.save_monitor_rounds(history, stop_round, out_dir / "figures" / "monitor.png")
        outputs["figures"] = "figures/"
    write_manifest(out_dir, "monitor", digest, outputs)
    write_run_meta(out_dir, "monitor", digest)
    if stop_round is not None:
        print(f"stop signalled at round {stop_round} after {len(history)} evaluations")
    else:
        print(f"no stop after {len(history)} evaluation rounds")
    return EXIT_OK


# ------------------------------------------------------------------- simulate


def cmd_simulate(config: RunConfig, out_dir: Path, figures: bool) -> int:
    digest = config_hash(config.raw)
    sim_report = run_simulation(
        config.simulate, config.tournament, config.rating, config.seed
    )
    write_json(out_dir / "simulate_report.json", {
        "format_version": 1,
        "config_hash": digest,
        **sim_report.as_dict(),
    })
    write_csv(
        out_dir / "simulate_trials.csv",
        ["trial", "seed", "converged", "matches", "recovered", "spearman_vs_quality"],
        [
            [t.trial, t.seed, t.converged, t.matches,
             "" if t.recovered is None else t.recovered,
             "" if t.spearman_vs_quality is None else f"{t.spearman_vs_quality:.6f}"]
            for t in sim_report.trials
        ],
    )
    outputs = {"report": "simulate_report.json", "trials_csv": "simulate_trials.csv"}
    if figures:
        quality_vs_rating = [
            (sim_report.qualities[pid], rating)
            for trial in sim_report.trials
            for pid, rating in trial.final_ratings.items()
        ]
        report.save_recovery_scatter(quality_vs_rating, out_dir / "figures" / "recovery.png")
        report.save_convergence_histogram(
            [t.matches for t in sim_report.trials if t.converged],
            out_dir / "figures" / "convergence.png",
        )
        outputs["figures"] = "figures/"
    write_manifest(
        out_dir, "simulate", digest, outputs,
        extras={"degenerate": sim_report.degenerate},
    )
    write_run_meta(out_dir, "simulate", digest)
    rate = sim_report.recovery_rate
    if sim_report.degenerate:
        print("degenerate simulation: latent qualities are not all distinct; recovery undefined")
    else:
        print(
            f"recovery rate {rate:.2f} over {len(sim_report.trials)} trials, "
            f"min spearman {sim_report.min_spearman}"
        )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

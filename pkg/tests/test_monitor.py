"""Monitor tests: round counting, the stop rule, and model selection."""

from __future__ import annotations

import pytest

from comparena.judges import OracleJudge, OracleJudgeConfig, ScriptedJudge
from comparena.monitor import (
    CheckpointComparison,
    InsufficientContextsError,
    MonitorConfig,
    checkpoint_player_id,
    compare_checkpoints,
    select_hyperparameters,
    should_stop,
)
from comparena.rating import RatingConfig
from comparena.supervision import Sample
from comparena.tournament import ContextPool, TournamentConfig, synthetic_player

RATING = RatingConfig()


def checkpoint_samples(step, contexts=8, per_context=2, model="m1"):
    return [
        Sample(
            id=f"{model}-{step}-{c}-{i}",
            context=f"ctx{c}",
            text=f"output {i} of {model}@{step} for ctx{c}",
            origin="model",
            model_id=model,
            checkpoint_step=step,
            total_steps=10_000,
        )
        for c in range(contexts)
        for i in range(per_context)
    ]


def round_result(wins, losses, ties=0, round_index=0):
    return CheckpointComparison(
        round=round_index,
        latest_step=1000 + round_index,
        baseline_steps=(900, 800),
        wins=wins,
        losses=losses,
        ties=ties,
    )


class TestCompareCheckpoints:
    def test_always_better_judge(self):
        config = MonitorConfig(n_comparisons=100, k_baselines=2, seed=0)
        judge = ScriptedJudge(["better"] * 100)
        result = compare_checkpoints(
            checkpoint_samples(1000), [checkpoint_samples(900), checkpoint_samples(800)],
            judge, config,
        )
        assert (result.wins, result.losses, result.ties) == (100, 0, 0)

    def test_all_tie_judge(self):
        config = MonitorConfig(n_comparisons=60, seed=0)
        judge = ScriptedJudge(["tie"] * 60)
        result = compare_checkpoints(
            checkpoint_samples(1000), [checkpoint_samples(900)], judge, config
        )
        assert (result.wins, result.losses, result.ties) == (0, 0, 60)

    def test_scripted_stream_counts(self):
        labels = ["better"] * 600 + ["worse"] * 300 + ["tie"] * 100
        config = MonitorConfig(n_comparisons=1000, k_baselines=1, seed=0)
        result = compare_checkpoints(
            checkpoint_samples(1000), [checkpoint_samples(900)],
            ScriptedJudge(labels), config,
        )
        assert (result.wins, result.losses, result.ties) == (600, 300, 100)

    def test_counts_always_sum_to_n(self):
        config = MonitorConfig(n_comparisons=77, k_baselines=2, seed=1)
        qualities = {
            checkpoint_player_id("m1", step): float(step) for step in (800, 900, 1000)
        }
        judge = OracleJudge(
            OracleJudgeConfig(latent_quality=qualities, sample_noise=100.0, seed=5)
        )
        result = compare_checkpoints(
            checkpoint_samples(1000), [checkpoint_samples(900), checkpoint_samples(800)],
            judge, config,
        )
        assert result.total == 77

    def test_remainder_goes_to_earlier_baselines(self):
        # 101 comparisons over 2 baselines: 51 against the first listed
        config = MonitorConfig(n_comparisons=101, k_baselines=2, seed=0)
        judge = ScriptedJudge(["better"] * 51 + ["worse"] * 50)
        result = compare_checkpoints(
            checkpoint_samples(1000), [checkpoint_samples(900), checkpoint_samples(800)],
            judge, config,
        )
        assert (result.wins, result.losses) == (51, 50)

    def test_seeded_reproducibility(self):
        config = MonitorConfig(n_comparisons=40, seed=4)
        qualities = {checkpoint_player_id("m1", s): float(s) for s in (900, 1000)}

        def fresh_judge():
            return OracleJudge(
                OracleJudgeConfig(latent_quality=qualities, sample_noise=50.0, seed=8)
            )

        a = compare_checkpoints(
            checkpoint_samples(1000), [checkpoint_samples(900)], fresh_judge(), config
        )
        b = compare_checkpoints(
            checkpoint_samples(1000), [checkpoint_samples(900)], fresh_judge(), config
        )
        assert a == b

    def test_no_shared_contexts_is_an_error(self):
        config = MonitorConfig(n_comparisons=10, seed=0)
        latest = checkpoint_samples(1000, contexts=3)
        baseline = [
            Sample(
                id=f"old-{i}", context=f"other{i}", text="text", origin="model",
                model_id="m1", checkpoint_step=900, total_steps=10_000,
            )
            for i in range(3)
        ]
        with pytest.raises(InsufficientContextsError):
            compare_checkpoints(latest, [baseline], ScriptedJudge(["tie"] * 10), config)

    def test_reuse_disabled_requires_enough_contexts(self):
        config = MonitorConfig(n_comparisons=100, seed=0, reuse_contexts=False)
        with pytest.raises(InsufficientContextsError, match="reuse"):
            compare_checkpoints(
                checkpoint_samples(1000, contexts=8), [checkpoint_samples(900, contexts=8)],
                ScriptedJudge(["tie"] * 100), config,
            )


class TestShouldStop:
    def test_five_failing_rounds_stop(self):
        history = [round_result(400, 500, 100, i) for i in range(5)]
        assert should_stop(history, patience=5)

    def test_streak_broken_by_winning_round(self):
        history = [round_result(400, 500, 100, i) for i in range(4)]
        history.append(round_result(500, 400, 100, 4))
        assert not should_stop(history, patience=5)

    def test_equal_wins_losses_does_not_count(self):
        history = [round_result(400, 500, 100, i) for i in range(4)]
        history.append(round_result(450, 450, 100, 4))
        assert not should_stop(history, patience=5)

    def test_needs_patience_rounds(self):
        history = [round_result(400, 500, 100, i) for i in range(4)]
        assert not should_stop(history, patience=5)

    def test_streak_can_restart_after_break(self):
        history = (
            [round_result(400, 500, 0, i) for i in range(4)]
            + [round_result(600, 400, 0, 4)]
            + [round_result(400, 500, 0, 5 + i) for i in range(5)]
        )
        assert should_stop(history, patience=5)

    def test_appending_failures_never_unstops(self):
        history = [round_result(400, 500, 100, i) for i in range(5)]
        assert should_stop(history, patience=5)
        history.append(round_result(100, 900, 0, 5))
        assert should_stop(history, patience=5)

    def test_only_the_tail_matters(self):
        history = [round_result(900, 100, 0, 0)] + [
            round_result(400, 500, 100, 1 + i) for i in range(5)
        ]
        assert should_stop(history, patience=5)


class TestStopRoundTracksTrueDecline:
    def quality_curve(self, rounds=14, peak=6):
        """Rises to a peak, then strictly falls."""
        return [
            float(r) if r <= peak else float(2 * peak - r) - 0.5 for r in range(rounds)
        ]

    def test_stop_round_close_to_true_decline(self):
        """With low noise, the stop lands patience-1 rounds after the decline."""
        patience = 3
        n = 200
        config_template = dict(n_comparisons=n, k_baselines=2, patience=patience)
        hits = 0
        for seed in range(20):
            qualities_list = self.quality_curve()
            qualities = {
                checkpoint_player_id("m1", 100 * (i + 1)): q
                for i, q in enumerate(qualities_list)
            }
            # first round where checkpoint r is worse than both of its baselines
            true_bad = next(
                r
                for r in range(2, len(qualities_list))
                if qualities_list[r] < qualities_list[r - 1]
                and qualities_list[r] < qualities_list[r - 2]
            )
            judge = OracleJudge(
                OracleJudgeConfig(
                    latent_quality=qualities, sample_noise=0.15, tie_band=0.05, seed=seed
                )
            )
            checkpoints = [
                checkpoint_samples(100 * (i + 1)) for i in range(len(qualities_list))
            ]
            config = MonitorConfig(seed=seed, **config_template)
            history = []
            stop_round = None
            for r in range(2, len(checkpoints)):
                history.append(
                    compare_checkpoints(
                        checkpoints[r],
                        [checkpoints[r - 1], checkpoints[r - 2]],
                        judge,
                        config,
                        round_index=r,
                    )
                )
                if should_stop(history, patience):
                    stop_round = r
                    break
            expected = true_bad + patience - 1
            if stop_round is not None and abs(stop_round - expected) <= 2:
                hits += 1
        assert hits >= 18, f"stop round matched the true decline in only {hits}/20 seeds"


class TestSelectHyperparameters:
    POOL = ContextPool.from_texts([f"prompt {i}" for i in range(6)])

    def candidates(self, qualities):
        return [(f"cfg-{pid}", synthetic_player(pid, RATING)) for pid in qualities]

    def test_single_candidate_wins_by_default(self):
        judge = ScriptedJudge(["tie"])
        config_id = select_hyperparameters(
            self.candidates({"a": 1.0})[:1], judge, self.POOL, TournamentConfig()
        )
        assert config_id == "cfg-a"

    def test_best_quality_selected_in_most_seeds(self):
        qualities = {f"p{i}": float(i) for i in range(5)}
        wins = 0
        for seed in range(20):
            judge = OracleJudge(
                OracleJudgeConfig(latent_quality=qualities, flip_prob=0.1, tie_band=0.4, seed=seed)
            )
            config = TournamentConfig(seed=seed, min_plays_per_player=50, max_matches=20_000)
            chosen = select_hyperparameters(
                self.candidates(qualities), judge, self.POOL, config, RATING
            )
            wins += chosen == "cfg-p4"
        assert wins >= 19, f"best candidate selected in only {wins}/20 seeds"

    def test_selection_invariant_to_candidate_order(self):
        qualities = {f"p{i}": float(i) for i in range(4)}
        judge_config = OracleJudgeConfig(latent_quality=qualities, flip_prob=0.05, seed=3)
        config = TournamentConfig(seed=3, min_plays_per_player=20, max_matches=5000)
        forward = select_hyperparameters(
            self.candidates(qualities), OracleJudge(judge_config), self.POOL, config, RATING
        )
        backward = select_hyperparameters(
            list(reversed(self.candidates(qualities))),
            OracleJudge(judge_config), self.POOL, config, RATING,
        )
        assert forward == backward

    def test_seeded_rerun_identical(self):
        qualities = {f"p{i}": float(i % 2) for i in range(4)}
        judge_config = OracleJudgeConfig(latent_quality=qualities, flip_prob=0.2, seed=5)
        config = TournamentConfig(seed=7, min_plays_per_player=10, max_matches=2000)
        first = select_hyperparameters(
            self.candidates(qualities), OracleJudge(judge_config), self.POOL, config, RATING
        )
        second = select_hyperparameters(
            self.candidates(qualities), OracleJudge(judge_config), self.POOL, config, RATING
        )
        assert first == second

    def test_no_candidates_rejected(self):
        with pytest.raises(ValueError):
            select_hyperparameters([], ScriptedJudge(["tie"]), self.POOL, TournamentConfig())

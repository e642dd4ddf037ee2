"""Config validation tests: totality, named errors, overrides."""

from __future__ import annotations

import json

import pytest

from comparena.config import (
    ConfigError,
    apply_overrides,
    build_judge,
    config_from_dict,
    load_config,
)
from comparena.judges import OracleJudge, ScriptedJudge, _BinaryJudge


class TestValidation:
    def test_empty_config_uses_defaults(self):
        config = config_from_dict({})
        assert config.seed == 0
        assert config.rating.tau == 0.5
        assert config.tournament.min_plays_per_player == 50
        assert config.monitor.patience == 5
        assert config.weak_supervision.min_margin_fraction == 0.10

    def test_every_invalid_field_is_reported_at_once(self):
        bad = {
            "seed": "nope",
            "rating": {"tau": -1.0, "tie_ratio": 2.0},
            "tournament": {"min_plays_per_player": 0},
            "monitor": {"patience": 0},
            "judge": {"kind": "psychic"},
            "mystery_section": {},
        }
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(bad)
        message = str(excinfo.value)
        for fragment in (
            "seed", "rating", "tournament", "monitor.patience", "judge.kind",
            "mystery_section",
        ):
            assert fragment in message, f"missing error for {fragment}"

    def test_type_errors_name_the_field_path(self):
        with pytest.raises(ConfigError, match=r"rating\.tau"):
            config_from_dict({"rating": {"tau": "half"}})

    def test_boolean_not_accepted_as_number(self):
        with pytest.raises(ConfigError, match=r"rating\.tau"):
            config_from_dict({"rating": {"tau": True}})

    def test_seed_propagates_to_nested_configs(self):
        config = config_from_dict({"seed": 99})
        assert config.tournament.seed == 99
        assert config.monitor.seed == 99

    def test_allow_tie_reaches_the_tournament(self):
        config = config_from_dict({"judge": {"kind": "scripted", "scripted": ["better"], "allow_tie": False}})
        assert config.tournament.allow_tie is False

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config section"):
            config_from_dict({"tournamnet": {}})

    def test_simulate_qualities_validated(self):
        with pytest.raises(ConfigError, match=r"simulate\.qualities"):
            config_from_dict({"simulate": {"qualities": [1.0]}})
        with pytest.raises(ConfigError, match=r"simulate\.qualities"):
            config_from_dict({"simulate": {"qualities": "high"}})

    def test_oracle_quality_map_validated(self):
        with pytest.raises(ConfigError, match="latent_quality"):
            config_from_dict({"judge": {"oracle": {"latent_quality": {"a": "strong"}}}})


class TestJudgeFactory:
    def test_oracle_judge_built(self):
        config = config_from_dict(
            {"judge": {"kind": "oracle", "oracle": {"latent_quality": {"a": 1.0, "b": 2.0}}}}
        )
        assert isinstance(build_judge(config), OracleJudge)

    def test_oracle_without_table_fails_fast(self):
        config = config_from_dict({"judge": {"kind": "oracle"}})
        with pytest.raises(ConfigError, match="latent_quality"):
            build_judge(config)

    def test_remote_without_endpoint_fails_fast(self):
        config = config_from_dict({"judge": {"kind": "remote"}})
        with pytest.raises(ConfigError, match="endpoint"):
            build_judge(config)

    def test_scripted_judge_built(self):
        config = config_from_dict(
            {"judge": {"kind": "scripted", "scripted": ["better", "tie"]}}
        )
        assert isinstance(build_judge(config), ScriptedJudge)

    def test_no_tie_ablation_wraps_with_binary_adapter(self):
        config = config_from_dict(
            {"judge": {"kind": "scripted", "scripted": ["tie"], "allow_tie": False}}
        )
        assert isinstance(build_judge(config), _BinaryJudge)

    def test_endpoint_env_fallback(self, monkeypatch):
        monkeypatch.setenv("COMPARENA_JUDGE_ENDPOINT", "http://127.0.0.1:9")
        config = config_from_dict({"judge": {"kind": "remote"}})
        assert config.judge.remote.endpoint == "http://127.0.0.1:9"


class TestOverridesAndLoading:
    def test_overrides_revalidate(self):
        config = config_from_dict({"seed": 1})
        overridden = apply_overrides(config, seed=42, out="elsewhere", judge_kind="scripted")
        assert overridden.seed == 42
        assert overridden.paths.out == "elsewhere"
        assert overridden.judge.kind == "scripted"

    def test_endpoint_override(self):
        config = config_from_dict({})
        overridden = apply_overrides(config, endpoint="http://127.0.0.1:8001")
        assert overridden.judge.remote.endpoint == "http://127.0.0.1:8001"

    def test_load_config_reports_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)

    def test_load_config_reports_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_load_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 5, "paths": {"out": "o"}}), encoding="utf-8")
        config = load_config(path)
        assert config.seed == 5
        assert config.paths.out == "o"

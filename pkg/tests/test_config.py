"""Config round-trips, presets, and validation."""

from __future__ import annotations

import json

import pytest

from ddakit.errors import ConfigError, ValidationError
from ddakit.sim.config import (
    BOTS,
    PRESETS,
    BotProfile,
    DdaSection,
    EnemyTemplate,
    FactorSpec,
    GameConfig,
    arena,
    arena_hard,
    duel,
    load_config,
    resolve_bot,
)


def test_presets_build_and_validate():
    for name, factory in PRESETS.items():
        config = factory()
        assert config.name == name
        assert config.variables, "every preset tracks variables"
        assert config.factors, "every preset registers factors"
        assert set(config.dda.weights) == {v.var_id for v in config.variables}


@pytest.mark.parametrize("factory", [arena, arena_hard, duel])
def test_config_dict_round_trip(factory):
    config = factory()
    clone = GameConfig.from_dict(config.to_dict())
    assert clone == config
    # And the dict itself survives a JSON round trip.
    assert GameConfig.from_dict(json.loads(json.dumps(config.to_dict()))) == config


def test_load_config_by_name_and_path(tmp_path):
    assert load_config("arena").name == "arena"
    path = tmp_path / "custom.json"
    custom = arena().replacing(name="custom", waves=3)
    path.write_text(json.dumps(custom.to_dict()))
    loaded = load_config(str(path))
    assert loaded == custom

    with pytest.raises(ConfigError, match="unknown config"):
        load_config("no-such-preset")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(str(bad))


def test_resolve_bot_by_name_and_path(tmp_path):
    assert resolve_bot("medium") == BOTS["medium"]
    path = tmp_path / "bot.json"
    custom = BotProfile("tester", 0.5, 0.1, 40, 0.3)
    path.write_text(json.dumps(custom.to_dict()))
    assert resolve_bot(str(path)) == custom

    with pytest.raises(ConfigError, match="unknown bot"):
        resolve_bot("nobody")
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"name": "x"}))
    with pytest.raises(ConfigError, match="bad bot file"):
        resolve_bot(str(broken))


def test_game_config_validation():
    dda = DdaSection(weights={})
    with pytest.raises(ValidationError, match="waves"):
        arena().replacing(waves=0)
    with pytest.raises(ValidationError, match="enemy template"):
        arena().replacing(enemies=())
    with pytest.raises(ValidationError, match="window_len"):
        arena().replacing(window_len=0)
    with pytest.raises(ValidationError, match="cover exactly"):
        arena().replacing(dda=dda)


def test_factor_spec_validation():
    with pytest.raises(ValidationError, match="next_spawn or immediate"):
        FactorSpec("x", 1.0, (0.0, 2.0), applies="later")
    with pytest.raises(ValidationError, match="outside bounds"):
        FactorSpec("x", 5.0, (0.0, 2.0))


def test_bot_profile_validation():
    with pytest.raises(ValidationError):
        BotProfile("x", 1.5, 0.0, 10, 0.5)
    with pytest.raises(ValidationError):
        BotProfile("x", 0.5, 1.0, 10, 0.5)
    with pytest.raises(ValidationError):
        BotProfile("x", 0.5, 0.0, 0, 0.5)


def test_template_cycle():
    config = arena()
    n = len(config.enemies)
    assert config.template_for_wave(0) == config.enemies[0]
    assert config.template_for_wave(n) == config.enemies[0]
    assert config.template_for_wave(n + 1) == config.enemies[1]


def test_stock_factor_semantics():
    factors = arena().factors
    # Gifts are one-shot flags; rates apply to the live wave immediately.
    assert factors["potion_next_kill"].one_shot
    assert factors["crit_next_hit"].one_shot
    assert factors["potion_drop_prob"].applies == "immediate"
    assert factors["enemy_damage"].applies == "next_spawn"
    for spec in factors.values():
        lo, hi = spec.bounds
        assert lo <= spec.initial <= hi


def test_duel_preset_tunes_the_learner():
    ds = duel().dda.dscript
    base = arena().dda.dscript
    assert ds.adrenaline is False
    assert ds.max_reward < base.max_reward
    assert ds.weight_cap < base.weight_cap
    assert duel().potion_drop_prob == 0.0

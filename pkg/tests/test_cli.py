"""
Command-line surface: configuration loading, checkpoint files and exit codes.
"""

import json
import logging
import math

import pytest

from usr_rl.cli.checkpoint_io import load_checkpoint, save_checkpoint
from usr_rl.cli.commands import main
from usr_rl.cli.reports import read_csv
from usr_rl.cli.run_config import load_run_config, parse_ini, validate_sections
from usr_rl.core.config import TrainConfig
from usr_rl.core.constants import (
    CHECKPOINT_FILENAME,
    CURVE_CSV_FILENAME,
    CURVE_CSV_HEADER,
    CURVE_SVG_FILENAME,
    EXIT_NUMERICAL_ABORT,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY_FAILED,
    REPORT_JSON_FILENAME,
    TRAIN_LOG_FILENAME,
    TRAIN_LOG_HEADER,
)
from usr_rl.core.errors import ConfigError, EvaluationError
from usr_rl.core.logging_config import parse_level, resolve_level
from usr_rl.envs import make_env
from usr_rl.sac import updates
from usr_rl.sac.trainer import train

TINY_INI = """\
[env]
name=moving_to_target
horizon=10

[train]
batch_size=4
buffer_capacity=50
warmup_steps=0
max_steps=0
hidden_width=8
hidden_layers=1
eval_episodes=0

[usr]
kind=l2_usr
alpha_u=1e-4
"""


@pytest.fixture
def tiny_ini(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_INI, encoding="utf-8")
    return path


@pytest.fixture
def trained_dir(tmp_path, tiny_ini):
    out = tmp_path / "run"
    assert main(["train", "--config", str(tiny_ini), "--out", str(out), "--seed", "0"]) == EXIT_OK
    return out


# ============================================================================
# Run configuration
# ============================================================================


def test_ini_values_reach_the_config(tiny_ini):
    config = load_run_config(tiny_ini)
    assert config.env.horizon == 10
    assert config.train.hidden_width == 8
    assert config.usr.kind == "l2_usr"
    assert config.usr.alpha_u == pytest.approx(1e-4)


def test_overrides_win_over_the_file(tiny_ini):
    config = load_run_config(tiny_ini, overrides={"train": {"seed": 7, "gamma": None}})
    assert config.train.seed == 7
    assert config.train.gamma == TrainConfig().gamma


def test_full_preset_widens_networks():
    config = load_run_config(None, preset="full")
    assert config.train.hidden_width == 1024
    assert config.train.hidden_layers == 3


def test_unknown_preset_falls_back_to_defaults():
    config = load_run_config(None, preset="no_such_preset")
    assert config.train.hidden_width == TrainConfig().hidden_width


def test_invalid_value_names_key_and_line(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[usr]\nkind=l2_usr\nalpha_u=-1\n", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_run_config(path)
    assert info.value.key == "usr.alpha_u"
    assert info.value.line == 3


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as info:
        parse_ini("[train]\nlearning_rate=0.1\n")
    assert info.value.key == "train.learning_rate"
    assert info.value.line == 2


def test_unknown_section_is_rejected():
    with pytest.raises(ConfigError) as info:
        parse_ini("[optimizer]\nlr=0.1\n")
    assert info.value.key == "optimizer"


def test_sweep_min_max_aliases():
    sections, lines = parse_ini("[sweep]\nparam=w1\nmin=0.5\nmax=1.5\npoints=3\n")
    config = validate_sections(sections, lines)
    assert (config.sweep.v_min, config.sweep.v_max) == (0.5, 1.5)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.ini")


# ============================================================================
# Checkpoints
# ============================================================================


def test_checkpoint_round_trip_is_byte_identical(tmp_path, tiny_config):
    config = tiny_config.with_updates("train", max_steps=0)
    result = train(make_env(config.env), config)

    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    ident = save_checkpoint(result.checkpoint, first)
    loaded, loaded_id = load_checkpoint(first)
    again = save_checkpoint(loaded, second)

    assert first.read_bytes() == second.read_bytes()
    assert ident == loaded_id == again
    assert len(ident) == 16


def test_corrupt_checkpoint(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_checkpoint(path)


# ============================================================================
# Commands
# ============================================================================


def test_train_writes_checkpoint_and_headed_log(trained_dir):
    assert (trained_dir / CHECKPOINT_FILENAME).is_file()
    assert read_csv(trained_dir / TRAIN_LOG_FILENAME, TRAIN_LOG_HEADER) == []
    checkpoint, _ = load_checkpoint(trained_dir / CHECKPOINT_FILENAME)
    assert checkpoint.step == 0


def test_train_numerical_abort_keeps_partial_checkpoint(tmp_path, tiny_ini, monkeypatch, capsys):
    def diverged(*args, **kwargs):
        raise EvaluationError("bootstrap values are not finite")

    monkeypatch.setattr(updates, "robust_targets", diverged)
    tiny_ini.write_text(TINY_INI.replace("max_steps=0", "max_steps=6"), encoding="utf-8")
    out = tmp_path / "run"

    assert main(["train", "--config", str(tiny_ini), "--out", str(out)]) == EXIT_NUMERICAL_ABORT
    assert "numerical abort" in capsys.readouterr().out
    checkpoint, _ = load_checkpoint(out / CHECKPOINT_FILENAME)
    # batch_size=4 with no warmup: the first update runs at step 4
    assert checkpoint.step == 3


def test_sweep_writes_artifacts(trained_dir, capsys):
    code = main([
        "sweep",
        "--checkpoint", str(trained_dir / CHECKPOINT_FILENAME),
        "--param", "w1",
        "--points", "3",
        "--episodes", "2",
        "--out", str(trained_dir),
    ])
    assert code == EXIT_OK
    assert "robust AUC" in capsys.readouterr().out

    rows = read_csv(trained_dir / CURVE_CSV_FILENAME, CURVE_CSV_HEADER)
    assert [float(row["param_value"]) for row in rows] == [0.0, 1.0, 2.0]
    report = json.loads((trained_dir / REPORT_JSON_FILENAME).read_text(encoding="utf-8"))
    assert math.isfinite(report["auc"])
    assert (trained_dir / CURVE_SVG_FILENAME).read_text(encoding="utf-8").startswith("<?xml")


def test_sweep_rejects_single_point(trained_dir):
    code = main([
        "sweep",
        "--checkpoint", str(trained_dir / CHECKPOINT_FILENAME),
        "--points", "1",
        "--out", str(trained_dir),
    ])
    assert code == EXIT_USAGE


def test_sweep_missing_checkpoint(tmp_path):
    assert main(["sweep", "--checkpoint", str(tmp_path / "nope.json")]) == EXIT_USAGE


def test_train_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[usr]\nalpha_u=-1\n", encoding="utf-8")
    assert main(["train", "--config", str(path), "--out", str(tmp_path / "run")]) == EXIT_USAGE
    assert "usr.alpha_u" in capsys.readouterr().out


def test_argument_errors_exit_code():
    assert main(["sweep"]) == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE


def test_tabular_verify_rejects_zero_trials():
    assert main(["tabular-verify", "--trials", "0"]) == EXIT_USAGE


def test_tabular_verify_passes(capsys):
    assert main(["tabular-verify", "--trials", "20"]) == EXIT_OK
    assert "duality" in capsys.readouterr().out


def test_injected_sign_flip_fails(capsys):
    code = main(["tabular-verify", "--trials", "20", "--inject-fault", "dual_l2_sign_flip"])
    assert code == EXIT_VERIFY_FAILED
    assert "failing instance" in capsys.readouterr().out


def test_gradcheck_passes():
    assert main(["gradcheck"]) == EXIT_OK


@pytest.mark.slow
def test_train_then_sweep(tmp_path, tiny_ini):
    text = tiny_ini.read_text(encoding="utf-8").replace("max_steps=0", "max_steps=200").replace(
        "warmup_steps=0", "warmup_steps=20"
    )
    tiny_ini.write_text(text, encoding="utf-8")
    out = tmp_path / "run"
    assert main(["train", "--config", str(tiny_ini), "--out", str(out)]) == EXIT_OK
    assert len(read_csv(out / TRAIN_LOG_FILENAME, TRAIN_LOG_HEADER)) >= 1
    code = main(["sweep", "--checkpoint", str(out / CHECKPOINT_FILENAME), "--param", "w1", "--points", "4", "--out", str(out)])
    assert code == EXIT_OK


# ============================================================================
# Logging levels
# ============================================================================


@pytest.mark.parametrize("value, expected", [
    ("debug", logging.DEBUG),
    ("WARNING", logging.WARNING),
    ("15", 15),
    ("chatty", logging.INFO),
    (None, logging.INFO),
])
def test_parse_level(value, expected):
    assert parse_level(value) == expected


def test_environment_level_and_verbosity(monkeypatch):
    monkeypatch.setenv("USR_RL_LOG_LEVEL", "WARNING")
    assert resolve_level() == logging.WARNING
    assert resolve_level(verbosity=1) == logging.INFO
    assert resolve_level(verbosity=-5) == logging.CRITICAL
    assert resolve_level(level=logging.INFO, verbosity=3) == logging.DEBUG

"""Tests for run configuration loading and process settings."""

import json

import pytest

from src.run_config import (
    RunConfig,
    build_problem,
    load_run_config,
    parse_override,
    read_config_file,
    write_resolved_config,
)
from src.utils import ConfigError, get_settings, is_development, is_production, log_check, log_iteration, setup_logging


def test_defaults() -> None:
    config = load_run_config()
    assert config.problem.dim == 1
    assert config.penalization.case == "auto"
    assert config.solver.seed == 42
    assert config.eps_ladder == [1.0]
    problem = build_problem(config)
    assert problem.eps == 1.0
    assert problem.limit_grid == problem.grid


def test_unknown_key_names_the_key() -> None:
    with pytest.raises(ConfigError) as info:
        load_run_config(overrides=["grid.bogus=1"])
    assert info.value.key == "grid.bogus"
    assert info.value.exit_code == 2


@pytest.mark.parametrize("text, path, value", [
    ("problem.alpha=0.3", ["problem", "alpha"], 0.3),
    ("penalization.case=auto", ["penalization", "case"], "auto"),
    ("problem.eps_list=[0.5, 0.25]", ["problem", "eps_list"], [0.5, 0.25]),
    ("penalization.enabled=false", ["penalization", "enabled"], False),
])
def test_parse_override(text: str, path, value) -> None:
    assert parse_override(text) == (path, value)


@pytest.mark.parametrize("text", ["problem.alpha", "=1", "problem..alpha=1"])
def test_malformed_override(text: str) -> None:
    with pytest.raises(ConfigError):
        parse_override(text)


def test_overrides_are_validated() -> None:
    config = load_run_config(overrides=["problem.eps_list=[0.5, 0.25]", "grid.points_per_axis=64"])
    assert config.eps_ladder == [0.5, 0.25]
    assert build_problem(config).grid.points_per_axis == 64
    with pytest.raises(ConfigError):
        load_run_config(overrides=["problem.eps_list=[0.25, 0.5]"])
    with pytest.raises(ConfigError):
        load_run_config(overrides=["penalization.delta=1.0"])
    out_of_range = load_run_config(overrides=["problem.alpha=1.5"])
    with pytest.raises(ConfigError) as info:
        build_problem(out_of_range)
    assert info.value.key.startswith("problem")


def test_toml_file(tmp_path) -> None:
    path = tmp_path / "run.toml"
    path.write_text(
        "[problem]\nalpha = 0.3\np = 2.0\neps_list = [0.5, 0.4]\n\n"
        "[potential]\nkind = \"gaussian_well\"\nfloor = 2.0\ndepth = 1.0\n\n"
        "[grid]\npoints_per_axis = 128\nhalf_extent = 8.0\n",
        encoding="utf-8",
    )
    config = load_run_config(path, ["problem.alpha=0.4"], strict=True, seed=7,
                             output_directory=str(tmp_path / "out"))
    assert config.problem.alpha == 0.4
    assert config.potential.kind == "gaussian_well"
    assert config.solver.strict_boundary
    assert config.solver.seed == 7
    assert config.output_directory() == tmp_path / "out"


def test_unreadable_config(tmp_path) -> None:
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[problem\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_config_file(broken)


def test_resolved_config_round_trip(tmp_path) -> None:
    config = load_run_config(overrides=["problem.alpha=0.3", "penalization.case=2"])
    target = write_resolved_config(config, tmp_path)
    again = load_run_config(target)
    assert again == config
    assert json.loads(target.read_text())["problem"]["alpha"] == 0.3


def test_fingerprint() -> None:
    base = load_run_config()
    assert base.fingerprint() == load_run_config(overrides=["problem.eps=0.3"]).fingerprint()
    assert base.fingerprint() == load_run_config(overrides=["output.label=other"]).fingerprint()
    assert base.fingerprint() != load_run_config(overrides=["problem.alpha=0.3"]).fingerprint()


def test_default_output_directory_uses_settings() -> None:
    config = RunConfig()
    assert config.output_directory().parts[-1] == "run"
    assert str(config.output_directory()).startswith(get_settings().output_root)


def test_environment_accessors() -> None:
    settings = get_settings()
    assert settings.environment in ("development", "production")
    assert is_development() != is_production()
    assert settings.log_level in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def test_log_context_builders() -> None:
    assert setup_logging() is not None
    record = log_iteration("limiting", 3, 1.5, 1e-4, step=0.5)
    assert record == {"solver": "limiting", "iteration": 3, "energy": 1.5, "residual": 1e-4, "step": 0.5}
    assert log_check("pohozaev", 1e-5, True)["passed"] is True

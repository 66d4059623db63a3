"""
Run configuration files.

A run is described by a TOML file (or the JSON written back as
``resolved-config.json``) validated into a tree of pydantic models. Unknown
keys are errors and every key has a default. ``--override`` strings are
merged into the raw mapping before validation.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field as PydanticField, ValidationError, field_validator

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .grid import SELF_CELL_RULES, make_grid
from .model import ChoquardProblem, PotentialSpec, ProblemParams, RegionSpec
from .solver import SolveOptions
from .utils import get_logger, get_settings, ConfigError, ParameterError

logger = get_logger(__name__)

RESOLVED_CONFIG_NAME = "resolved-config.json"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Section):
    points_per_axis: int = 256
    half_extent: float = 16.0
    limit_points_per_axis: Optional[int] = None
    limit_half_extent: Optional[float] = None
    self_cell: str = "average"
    boundary_tol: float = 1e-6

    @field_validator("self_cell")
    @classmethod
    def validate_self_cell(cls, v: str) -> str:
        if v not in SELF_CELL_RULES:
            raise ValueError(f"must be one of {SELF_CELL_RULES}")
        return v


class ProblemConfig(_Section):
    dim: int = 1
    alpha: float = 0.5
    p: float = 2.0
    eps: float = 1.0
    eps_list: List[float] = PydanticField(default_factory=list)

    @field_validator("eps_list")
    @classmethod
    def validate_eps_list(cls, v: List[float]) -> List[float]:
        if any(e <= 0 for e in v):
            raise ValueError("every eps must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        return v


class PenalizationConfig(_Section):
    enabled: bool = True
    case: Union[Literal["auto"], int] = "auto"
    delta: float = 0.1
    lam: Union[Literal["auto"], float] = "auto"
    trial_count: int = 16

    @field_validator("case")
    @classmethod
    def validate_case(cls, v):
        if v != "auto" and v not in (1, 2, 3):
            raise ValueError("must be 'auto', 1, 2 or 3")
        return v

    @field_validator("delta")
    @classmethod
    def validate_delta(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("must lie in (0, 1)")
        return v

    @field_validator("trial_count")
    @classmethod
    def validate_trials(cls, v: int) -> int:
        if v < 16:
            raise ValueError("must be >= 16")
        return v


class DiagnosticsConfig(_Section):
    rho: float = 1.0
    R: float = 10.0
    slack_abs: float = 1e-12
    slack_rel: float = 1e-9
    upper_tol: float = 0.1


class NonexistConfig(_Section):
    probe_region: RegionSpec = PydanticField(default_factory=lambda: RegionSpec(radius=0.5))
    probe_radius: float = 0.5
    probe_count: int = 8
    min_ratio: float = 2.0
    mass_floor: float = 1e-24


class OutputConfig(_Section):
    directory: Optional[str] = None
    label: str = "run"


class RunConfig(_Section):
    grid: GridConfig = PydanticField(default_factory=GridConfig)
    problem: ProblemConfig = PydanticField(default_factory=ProblemConfig)
    potential: PotentialSpec = PydanticField(default_factory=PotentialSpec)
    lambda_region: RegionSpec = PydanticField(default_factory=lambda: RegionSpec(radius=1.0))
    outer_region: RegionSpec = PydanticField(default_factory=lambda: RegionSpec(radius=2.0))
    penalization: PenalizationConfig = PydanticField(default_factory=PenalizationConfig)
    solver: SolveOptions = PydanticField(default_factory=SolveOptions)
    diagnostics: DiagnosticsConfig = PydanticField(default_factory=DiagnosticsConfig)
    nonexist: NonexistConfig = PydanticField(default_factory=NonexistConfig)
    output: OutputConfig = PydanticField(default_factory=OutputConfig)

    @property
    def eps_ladder(self) -> List[float]:
        return list(self.problem.eps_list) or [self.problem.eps]

    def output_directory(self) -> Path:
        if self.output.directory:
            return Path(self.output.directory)
        return Path(get_settings().output_root) / self.output.label

    def fingerprint(self) -> str:
        """Hash of everything a single-eps solve depends on."""
        data = self.model_dump(mode="json", exclude={"output": True, "problem": {"eps", "eps_list"}})
        payload = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:12]


# Loading

def parse_override(text: str) -> tuple:
    """'section.key=value' -> (['section', 'key'], value); JSON literals are decoded."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key or any(not part for part in key.split(".")):
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    for text in overrides:
        path, value = parse_override(text)
        node = raw
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError("cannot override inside a scalar", ".".join(path))
            node = child
        node[path[-1]] = value
    return raw


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse config file {path}: {e}")


def _error_key(error: ValidationError) -> tuple:
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"])
    return first["msg"], key or None


def validate_config(raw: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        message, key = _error_key(e)
        raise ConfigError(message, key)


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Sequence[str] = (),
    *,
    strict: Optional[bool] = None,
    seed: Optional[int] = None,
    output_directory: Optional[str] = None,
) -> RunConfig:
    """Read, merge command-line values and validate a run configuration."""
    raw = read_config_file(path) if path is not None else {}
    raw = apply_overrides(raw, overrides)
    solver = raw.setdefault("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("must be a table", "solver")
    if strict:
        solver["strict_boundary"] = True
    if seed is not None:
        solver["seed"] = seed
    if output_directory is not None:
        raw.setdefault("output", {})["directory"] = output_directory
    config = validate_config(raw)
    logger.debug("Configuration loaded", path=str(path) if path else None, overrides=list(overrides))
    return config


def write_resolved_config(config: RunConfig, directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / RESOLVED_CONFIG_NAME
    target.write_text(json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2) + "\n",
                      encoding="utf-8")
    return target


# Problem construction

def build_grids(config: RunConfig) -> tuple:
    grid_cfg = config.grid
    grid = make_grid(config.problem.dim, grid_cfg.points_per_axis, grid_cfg.half_extent)
    limit = make_grid(
        config.problem.dim,
        grid_cfg.limit_points_per_axis or grid_cfg.points_per_axis,
        grid_cfg.limit_half_extent or grid_cfg.half_extent,
    )
    return grid, limit


def build_problem(config: RunConfig, eps: Optional[float] = None) -> ChoquardProblem:
    """ChoquardProblem at ``eps`` (the first rung of the ladder by default)."""
    eps = config.eps_ladder[0] if eps is None else eps
    try:
        params = ProblemParams(
            dim=config.problem.dim,
            alpha=config.problem.alpha,
            p=config.problem.p,
            eps=eps,
            potential=config.potential,
            lambda_region=config.lambda_region,
            outer_region=config.outer_region,
        )
    except ValidationError as e:
        message, key = _error_key(e)
        raise ConfigError(message, f"problem.{key}" if key else "problem")
    try:
        grid, limit = build_grids(config)
    except ParameterError as e:
        raise ConfigError(str(e), "grid")
    return ChoquardProblem(
        params=params,
        grid=grid,
        limit_grid=limit,
        self_cell=config.grid.self_cell,
        strict=config.solver.strict_boundary,
        boundary_tol=config.grid.boundary_tol,
    )

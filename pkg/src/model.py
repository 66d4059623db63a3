"""
Choquard problem instances and their functionals.

A problem is the data (N, alpha, p, eps, V, Lambda, U). This module samples
it on a grid and evaluates the limiting functional I_lambda, the original
functional E_eps, the penalized functional J_eps, the penalized nonlinearity
g_eps / G_eps, and the matching strong-form Euler-Lagrange residuals.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import TYPE_CHECKING, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, field_validator, model_validator

from .grid import (
    Field,
    GridSpec,
    as_point,
    grad_sq_integral,
    integrate,
    laplacian,
    riesz_bilinear,
    riesz_convolve,
    riesz_kernel,
    riesz_normalization,
)
from .utils import get_logger, GeometryError, ParameterError

if TYPE_CHECKING:
    from .penalization import Penalization

logger = get_logger(__name__)


# Problem data

class PotentialSpec(BaseModel):
    """
    Closed-form potential V >= 0.

    Kinds (c = center, r = |x - c|):
      constant         V = floor
      gaussian_well    V = floor - depth * exp(-r^2 / width^2)
      power_decay      V = floor + amplitude * (1 + r^2 / width^2)^(-exponent/2)
      compact_support  V = floor + amplitude * (1 - r^2 / radius^2)_+^2
      custom_table     V = piecewise-linear radial table, last value beyond
      vanishing_well   gaussian_well times min(1, (|x - zero_point| / radius)^exponent)
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal[
        "constant", "gaussian_well", "power_decay", "compact_support",
        "custom_table", "vanishing_well",
    ] = "constant"
    floor: float = 1.0
    depth: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0
    exponent: float = 2.0
    radius: float = 1.0
    center: List[float] = PydanticField(default_factory=list)
    zero_point: List[float] = PydanticField(default_factory=list)
    table_r: List[float] = PydanticField(default_factory=list)
    table_v: List[float] = PydanticField(default_factory=list)

    @field_validator("floor", "amplitude")
    @classmethod
    def validate_nonnegative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("must be nonnegative")
        return v

    @field_validator("width", "radius")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @model_validator(mode="after")
    def validate_kind(self) -> "PotentialSpec":
        if self.kind in ("gaussian_well", "vanishing_well") and not 0 <= self.depth <= self.floor:
            raise ValueError("well depth must lie in [0, floor] so that V >= 0")
        if self.kind == "vanishing_well":
            if not self.zero_point:
                raise ValueError("vanishing_well needs zero_point")
            if self.exponent <= 0:
                raise ValueError("vanishing_well needs a positive exponent")
        if self.kind == "custom_table":
            if len(self.table_r) < 2 or len(self.table_r) != len(self.table_v):
                raise ValueError("custom_table needs matching table_r/table_v with >= 2 entries")
            if np.any(np.diff(self.table_r) <= 0) or self.table_r[0] < 0:
                raise ValueError("table_r must be nonnegative and strictly increasing")
            if min(self.table_v) < 0:
                raise ValueError("table_v must be nonnegative")
        return self

    def evaluate_at(self, coords: Tuple[np.ndarray, ...]) -> np.ndarray:
        """V at broadcastable coordinate arrays."""
        dim = len(coords)
        center = as_point(self.center or 0.0, dim)
        r2 = sum((x - c) ** 2 for x, c in zip(coords, center))
        r2 = np.asarray(r2, dtype=float)
        if self.kind == "constant":
            v = np.full(r2.shape, self.floor)
        elif self.kind in ("gaussian_well", "vanishing_well"):
            v = self.floor - self.depth * np.exp(-r2 / self.width ** 2)
            if self.kind == "vanishing_well":
                zero = as_point(self.zero_point, dim)
                rz = np.sqrt(sum((x - z) ** 2 for x, z in zip(coords, zero)))
                v = v * np.minimum(1.0, (rz / self.radius) ** self.exponent)
        elif self.kind == "power_decay":
            v = self.floor + self.amplitude * (1.0 + r2 / self.width ** 2) ** (-self.exponent / 2.0)
        elif self.kind == "compact_support":
            v = self.floor + self.amplitude * np.maximum(0.0, 1.0 - r2 / self.radius ** 2) ** 2
        else:
            v = np.interp(np.sqrt(r2), self.table_r, self.table_v)
        return np.maximum(v, 0.0)

    def evaluate(self, grid: GridSpec) -> Field:
        return Field(grid, np.broadcast_to(self.evaluate_at(grid.coordinates()), grid.shape))

    def at(self, point) -> float:
        dim = len(point) if not np.isscalar(point) else 1
        coords = tuple(np.array([c]) for c in as_point(point, dim))
        return float(self.evaluate_at(coords)[0])

    def far_field_exponent(self) -> float:
        """gamma with V ~ |x|^-gamma at infinity (0: bounded below, inf: eventually zero)."""
        if self.kind == "custom_table":
            return 0.0 if self.table_v[-1] > 0 else math.inf
        if self.floor > 0:
            return 0.0
        if self.kind == "power_decay" and self.amplitude > 0:
            return self.exponent
        return math.inf


class RegionSpec(BaseModel):
    """Ball or box region."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    shape: Literal["ball", "box"] = "ball"
    center: List[float] = PydanticField(default_factory=list)
    radius: Optional[float] = None
    halfwidths: Optional[List[float]] = None

    @model_validator(mode="after")
    def validate_shape(self) -> "RegionSpec":
        if self.shape == "ball":
            if self.radius is None or self.radius <= 0:
                raise ValueError("ball region needs a positive radius")
        else:
            if not self.halfwidths or min(self.halfwidths) <= 0:
                raise ValueError("box region needs positive halfwidths")
        return self

    def center_point(self, dim: int) -> Tuple[float, ...]:
        return as_point(self.center or 0.0, dim)

    def _halfwidths(self, dim: int) -> Tuple[float, ...]:
        if len(self.halfwidths) == 1:
            return tuple(self.halfwidths) * dim
        return as_point(self.halfwidths, dim)

    def signed_distance_at(self, coords: Tuple[np.ndarray, ...]) -> np.ndarray:
        """Negative inside, positive outside."""
        dim = len(coords)
        center = self.center_point(dim)
        if self.shape == "ball":
            r = np.sqrt(sum((x - c) ** 2 for x, c in zip(coords, center)))
            return np.asarray(r - self.radius, dtype=float)
        q = [np.abs(x - c) - w for x, c, w in zip(coords, center, self._halfwidths(dim))]
        outside = np.sqrt(sum(np.maximum(qi, 0.0) ** 2 for qi in q))
        inside = np.minimum(np.maximum.reduce(np.broadcast_arrays(*q)), 0.0)
        return np.asarray(outside + inside, dtype=float)

    def signed_distance(self, grid: GridSpec) -> np.ndarray:
        return np.broadcast_to(self.signed_distance_at(grid.coordinates()), grid.shape)

    def mask(self, grid: GridSpec) -> np.ndarray:
        return self.signed_distance(grid) < 0.0

    def distance_to_boundary(self, point) -> float:
        coords = tuple(np.array([c]) for c in point)
        return float(abs(self.signed_distance_at(coords)[0]))

    def contains(self, point) -> bool:
        coords = tuple(np.array([c]) for c in point)
        return bool(self.signed_distance_at(coords)[0] < 0.0)

    def bounds(self, dim: int) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        center = self.center_point(dim)
        half = (self.radius,) * dim if self.shape == "ball" else self._halfwidths(dim)
        return (tuple(c - w for c, w in zip(center, half)),
                tuple(c + w for c, w in zip(center, half)))

    def outer_radius(self, dim: int) -> float:
        """Largest distance from the center to a point of the region."""
        if self.shape == "ball":
            return float(self.radius)
        return float(math.sqrt(sum(w * w for w in self._halfwidths(dim))))


class ProblemParams(BaseModel):
    """One Choquard problem instance (N, alpha, p, eps, V, Lambda, U)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    dim: int
    alpha: float
    p: float
    eps: float = 1.0
    potential: PotentialSpec = PydanticField(default_factory=PotentialSpec)
    lambda_region: RegionSpec = PydanticField(default_factory=lambda: RegionSpec(radius=1.0))
    outer_region: RegionSpec = PydanticField(default_factory=lambda: RegionSpec(radius=2.0))

    @model_validator(mode="after")
    def validate_ranges(self) -> "ProblemParams":
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim={self.dim} must be 1, 2 or 3")
        if not 0 < self.alpha < self.dim:
            raise ValueError(f"alpha={self.alpha} must lie in (0, {self.dim})")
        if self.p < 1:
            raise ValueError(f"p={self.p} must be >= 1")
        if self.eps <= 0:
            raise ValueError(f"eps={self.eps} must be positive")
        for name in ("lambda_region", "outer_region"):
            region = getattr(self, name)
            if region.center and len(region.center) != self.dim:
                raise ValueError(f"{name}.center must have {self.dim} coordinates")
        return self


# Constants and regimes

@dataclass(frozen=True)
class HlsConstants:
    """Weighted HLS constant C_alpha and Riesz normalization A_alpha."""

    c_alpha: float
    a_alpha: float


def hls_constants(dim: int, alpha: float) -> HlsConstants:
    ratio = math.gamma((dim - alpha) / 4.0) / math.gamma((dim + alpha) / 4.0)
    return HlsConstants(
        c_alpha=2.0 ** (-alpha) * ratio ** 2,
        a_alpha=riesz_normalization(dim, alpha),
    )


class Regime(str, Enum):
    SOLVABLE = "solvable"
    BELOW_LOWER_CRITICAL = "p <= (N+alpha)/N"
    ABOVE_UPPER_CRITICAL = "p >= (N+alpha)/(N-2)"


@dataclass(frozen=True)
class RegimeReport:
    limiting_solvable: bool
    reason: Regime
    lower: float
    upper: float


def validate_params(dim: int, alpha: float, p: float) -> RegimeReport:
    """Ground states of the limiting problem exist iff (N+a)/N < p < (N+a)/(N-2)_+."""
    if dim < 1:
        raise ParameterError(f"dim={dim} must be >= 1")
    if not 0 < alpha < dim:
        raise ParameterError(f"alpha={alpha} out of range (0, {dim})")
    if p < 1:
        raise ParameterError(f"p={p} must be >= 1")
    lower = (dim + alpha) / dim
    upper = (dim + alpha) / (dim - 2) if dim > 2 else math.inf
    if p <= lower:
        reason = Regime.BELOW_LOWER_CRITICAL
    elif p >= upper:
        reason = Regime.ABOVE_UPPER_CRITICAL
    else:
        reason = Regime.SOLVABLE
    return RegimeReport(reason is Regime.SOLVABLE, reason, lower, upper)


def scaling_exponent(dim: int, alpha: float, p: float) -> float:
    """theta in E(lambda) = E(1) lambda^theta."""
    return (alpha + 2.0) / (2.0 * (p - 1.0)) - (dim - 2.0) / 2.0


def amplitude_exponent(alpha: float, p: float) -> float:
    """Amplitude power in v_lambda(y) = lambda^a v(sqrt(lambda) y)."""
    return (alpha + 2.0) / (4.0 * (p - 1.0))


def vanishing_rate_exponent(dim: int, alpha: float) -> float:
    """Exponent 4/(alpha+2-N) - 2 of the admissible vanishing rate of V."""
    if alpha + 2.0 <= dim:
        raise ParameterError("vanishing rate is defined for alpha + 2 > N")
    return 4.0 / (alpha + 2.0 - dim) - 2.0


# Discrete problem

@dataclass(frozen=True, eq=False)
class LimitingProblem:
    """Data of the limiting equation -Lap v + lambda v = (I_alpha * v_+^p) v_+^{p-1}."""

    dim: int
    alpha: float
    p: float
    limit_grid: GridSpec
    self_cell: str = "average"
    strict: bool = False
    boundary_tol: float = 1e-6

    def __post_init__(self):
        if self.limit_grid.dim != self.dim:
            raise ParameterError(f"grid dimension {self.limit_grid.dim} != problem dimension {self.dim}")
        if not 0 < self.alpha < self.dim:
            raise ParameterError(f"alpha={self.alpha} out of range (0, {self.dim})")
        if self.p < 1:
            raise ParameterError(f"p={self.p} must be >= 1")

    def kernel_for(self, grid: GridSpec):
        return riesz_kernel(grid, self.alpha, self.self_cell)


@dataclass(frozen=True, eq=False)
class ChoquardProblem:
    """A problem sampled on a grid, with a separate grid for limiting profiles."""

    params: ProblemParams
    grid: GridSpec
    limit_grid: Optional[GridSpec] = None
    self_cell: str = "average"
    strict: bool = False
    boundary_tol: float = 1e-6

    def __post_init__(self):
        if self.grid.dim != self.params.dim:
            raise ParameterError(f"grid dimension {self.grid.dim} != problem dimension {self.params.dim}")
        if self.limit_grid is None:
            object.__setattr__(self, "limit_grid", self.grid)
        self._check_geometry()

    def _check_geometry(self) -> None:
        grid, dim = self.grid, self.params.dim
        limit = grid.half_extent - 2.0 * grid.spacing
        for name in ("lambda_region", "outer_region"):
            lo, hi = getattr(self.params, name).bounds(dim)
            if min(lo) < -limit or max(hi) > limit:
                raise GeometryError(f"{name} must stay two cells inside the box [-{grid.half_extent}, {grid.half_extent}]")
        if not self.lambda_mask.any():
            raise GeometryError("lambda_region contains no grid point")
        near = self.params.lambda_region.signed_distance(grid) <= grid.spacing
        if np.any(self.params.outer_region.signed_distance(grid)[near] >= 0.0):
            raise GeometryError("outer_region must extend more than one grid cell beyond lambda_region")

    @property
    def dim(self) -> int:
        return self.params.dim

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def p(self) -> float:
        return self.params.p

    @property
    def eps(self) -> float:
        return self.params.eps

    def with_eps(self, eps: float) -> "ChoquardProblem":
        if not eps > 0:
            raise ParameterError(f"eps={eps} must be positive")
        return replace(self, params=self.params.model_copy(update={"eps": float(eps)}))

    def limiting(self) -> LimitingProblem:
        return LimitingProblem(self.dim, self.alpha, self.p, self.limit_grid,
                               self.self_cell, self.strict, self.boundary_tol)

    @cached_property
    def kernel(self):
        return riesz_kernel(self.grid, self.alpha, self.self_cell)

    @cached_property
    def potential(self) -> Field:
        return self.params.potential.evaluate(self.grid)

    @cached_property
    def lambda_mask(self) -> np.ndarray:
        return self.params.lambda_region.mask(self.grid)

    @cached_property
    def outer_mask(self) -> np.ndarray:
        return self.params.outer_region.mask(self.grid)

    @cached_property
    def constants(self) -> HlsConstants:
        return hls_constants(self.dim, self.alpha)

    def kernel_for(self, grid: GridSpec):
        return riesz_kernel(grid, self.alpha, self.self_cell)


def concentration_point(problem: ChoquardProblem) -> Tuple[float, ...]:
    """Grid argmin of V over Lambda (lowest row-major index on ties)."""
    masked = np.where(problem.lambda_mask, problem.potential.values, np.inf)
    return problem.grid.point(int(np.argmin(masked)))


def concentration_function(problem: ChoquardProblem, limiting_energy_at_one: float) -> Field:
    """C(x) = E(V(x)) = E(1) V(x)^theta."""
    theta = scaling_exponent(problem.dim, problem.alpha, problem.p)
    return problem.potential.like(limiting_energy_at_one * problem.potential.values ** theta)


# Nonlinearities

def _finish(result):
    return float(result) if np.ndim(result) == 0 else result


def penalized_g(s, at_x_in_lambda, h_at_x, p: float):
    """g(x, s) = chi_Lambda s_+^{p-1} + chi_{Lambda^c} min(s_+^{p-1}, H(x))."""
    s = np.asarray(s, dtype=float)
    free = np.where(s > 0.0, np.maximum(s, 0.0) ** (p - 1.0), 0.0)
    result = np.where(at_x_in_lambda, free, np.minimum(free, h_at_x))
    return _finish(result)


def penalized_G(s, at_x_in_lambda, h_at_x, p: float):
    """Antiderivative of penalized_g in s, in closed form."""
    s_pos = np.maximum(np.asarray(s, dtype=float), 0.0)
    h = np.asarray(h_at_x, dtype=float)
    free = s_pos ** p / p
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        if p == 1.0:
            capped = np.minimum(1.0, h) * s_pos
        else:
            crossover = h ** (1.0 / (p - 1.0))
            linear = h * s_pos - (1.0 - 1.0 / p) * h ** (p / (p - 1.0))
            capped = np.where(s_pos <= crossover, free, linear)
    return _finish(np.where(at_x_in_lambda, free, capped))


def penalty_values(pen: Optional["Penalization"]):
    if pen is None or pen.h_field is None:
        return np.inf
    return pen.h_field.values


# Functionals

def limiting_parts(v: Field, lam: float, problem, *, strict: bool = False,
                   check: bool = True) -> Tuple[float, float, float]:
    """(K, M, D) = (int |grad v|^2, int v^2, B(v_+^p, v_+^p))."""
    kinetic = grad_sq_integral(v, strict=strict, check=check)
    mass = integrate(v * v)
    density = v.positive_part().values ** problem.p
    rho = v.like(density)
    nonlocal_part = riesz_bilinear(rho, rho, problem.kernel_for(v.grid))
    return kinetic, mass, nonlocal_part


def limiting_energy(v: Field, lam: float, problem, *, strict: bool = False) -> float:
    """I_lambda(v) = 1/2 int |grad v|^2 + lambda v^2 - 1/(2p) B(v_+^p, v_+^p)."""
    if lam <= 0:
        raise ParameterError(f"lambda={lam} must be positive")
    kinetic, mass, nonlocal_part = limiting_parts(v, lam, problem, strict=strict)
    return 0.5 * (kinetic + lam * mass) - nonlocal_part / (2.0 * problem.p)


def limiting_residual(v: Field, lam: float, problem) -> Field:
    """-Lap v + lambda v - (I_alpha * v_+^p) v_+^{p-1}."""
    positive = np.maximum(v.values, 0.0)
    potential = riesz_convolve(v.like(positive ** problem.p), problem.kernel_for(v.grid))
    nonlinear = potential.values * np.where(positive > 0, positive ** (problem.p - 1.0), 0.0)
    return v.like(-laplacian(v).values + lam * v.values - nonlinear)


def eps_norm_sq(u: Field, problem: ChoquardProblem, *, check: bool = False) -> float:
    """||u||_eps^2 = int eps^2 |grad u|^2 + V u^2."""
    kinetic = grad_sq_integral(u, strict=problem.strict, check=check, tol=problem.boundary_tol)
    return problem.eps ** 2 * kinetic + integrate(problem.potential * u * u)


def penalized_density(u: Field, pen: Optional["Penalization"], problem: ChoquardProblem) -> Field:
    return u.like(penalized_G(u.values, problem.lambda_mask, penalty_values(pen), problem.p))


def penalized_energy(u: Field, pen: Optional["Penalization"], problem: ChoquardProblem,
                     *, check: bool = True) -> float:
    """J_eps(u) = 1/2 ||u||_eps^2 - p/(2 eps^alpha) B(G(u), G(u))."""
    u.require_same_grid(problem.potential)
    big_g = penalized_density(u, pen, problem)
    nonlocal_part = riesz_bilinear(big_g, big_g, problem.kernel)
    return 0.5 * eps_norm_sq(u, problem, check=check) - problem.p / (2.0 * problem.eps ** problem.alpha) * nonlocal_part


def original_energy(u: Field, problem: ChoquardProblem, *, check: bool = True) -> float:
    """E_eps(u) = 1/2 ||u||_eps^2 - 1/(2p eps^alpha) B(|u|^p, |u|^p)."""
    u.require_same_grid(problem.potential)
    rho = u.like(np.abs(u.values) ** problem.p)
    nonlocal_part = riesz_bilinear(rho, rho, problem.kernel)
    return 0.5 * eps_norm_sq(u, problem, check=check) - nonlocal_part / (2.0 * problem.p * problem.eps ** problem.alpha)


def euler_lagrange_residual(u: Field, pen: Optional["Penalization"], problem: ChoquardProblem,
                            *, original: bool = False) -> Field:
    """
    Strong-form residual of the penalized equation

        -eps^2 Lap u + V u - p eps^-alpha (I_alpha * G(u)) g(u),

    or, with ``original=True``, of the unpenalized equation
    -eps^2 Lap u + V u - eps^-alpha (I_alpha * |u|^p) |u|^{p-2} u.
    """
    u.require_same_grid(problem.potential)
    linear = -problem.eps ** 2 * laplacian(u).values + problem.potential.values * u.values
    scale = problem.eps ** (-problem.alpha)
    if original:
        magnitude = np.abs(u.values)
        potential = riesz_convolve(u.like(magnitude ** problem.p), problem.kernel)
        nonlinear = potential.values * np.sign(u.values) * magnitude ** (problem.p - 1.0)
        return u.like(linear - scale * nonlinear)
    h = penalty_values(pen)
    big_g = penalized_G(u.values, problem.lambda_mask, h, problem.p)
    small_g = penalized_g(u.values, problem.lambda_mask, h, problem.p)
    potential = riesz_convolve(u.like(big_g), problem.kernel)
    return u.like(linear - problem.p * scale * potential.values * small_g)

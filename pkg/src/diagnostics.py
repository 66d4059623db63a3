"""
Numerical checks of the identities and inequalities solutions must satisfy.

Identity checks (Pohozaev, Nehari, mass, scaling) return relative defects;
inequality checks return violation counts; regime-dependent checks return
None when they do not apply. ``run_diagnostics`` gathers everything for one
solve into a ``DiagnosticsReport``.
"""

import json
import math
from dataclasses import asdict, dataclass, field as dataclass_field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .grid import (
    Field,
    GridSpec,
    grad_sq_integral,
    integrate,
    laplacian,
    resample,
    riesz_convolve,
    riesz_kernel,
)
from .model import (
    ChoquardProblem,
    PotentialSpec,
    RegionSpec,
    eps_norm_sq,
    euler_lagrange_residual,
    limiting_parts,
    penalized_density,
    penalized_g,
    penalty_values,
    scaling_exponent,
)
from .penalization import (
    Penalization,
    barrier_geometry,
    build_barrier,
    measure_nu,
    subsolution_mask,
    subsolution_radius,
)
from .solver import SolveResult
from .utils import (
    get_logger,
    log_check,
    DiagnosticsError,
    GeometryError,
    ParameterError,
    ResolutionError,
)

logger = get_logger(__name__)

SCHEMA_VERSION = 1

DEFAULT_RHO = 1.0
DEFAULT_R = 10.0
SLACK_ABS = 1e-12
SLACK_REL = 1e-9
UNPENALIZED_SLACK = 1e-12


# Limiting identities

def _limiting_parts_nonzero(v: Field, lam: float, problem) -> Tuple[float, float, float]:
    if not np.any(v.values):
        raise DiagnosticsError("identity checks need a nonzero field")
    return limiting_parts(v, lam, problem, check=False)


def pohozaev_defect(v: Field, lam: float, problem) -> float:
    """|(N-2)K/2 + N lam M/2 - (N+alpha) D/(2p)| / (K + lam M + D)."""
    kinetic, mass, nonlocal_part = _limiting_parts_nonzero(v, lam, problem)
    dim, alpha, p = problem.dim, problem.alpha, problem.p
    defect = (dim - 2.0) * kinetic / 2.0 + dim * lam * mass / 2.0 - (dim + alpha) * nonlocal_part / (2.0 * p)
    return abs(defect) / (kinetic + lam * mass + nonlocal_part)


def nehari_defect(v: Field, lam: float, problem) -> float:
    """|K + lam M - D| / (K + lam M + D)."""
    kinetic, mass, nonlocal_part = _limiting_parts_nonzero(v, lam, problem)
    return abs(kinetic + lam * mass - nonlocal_part) / (kinetic + lam * mass + nonlocal_part)


def _mass_identity_regime(problem) -> bool:
    return problem.p == 2.0 and math.isclose(problem.alpha, problem.dim - 2.0)


def mass_identity_check(v: Field, lam: float, energy: float, problem) -> Optional[float]:
    """|int v^2 - 2 E/lam| / int v^2 when p = 2 and alpha = N - 2, else None."""
    if not _mass_identity_regime(problem):
        return None
    mass = integrate(v * v)
    if mass == 0.0:
        raise DiagnosticsError("mass identity needs a nonzero field")
    return abs(mass - 2.0 * energy / lam) / mass


def kinetic_mass_balance(v: Field, lam: float, problem) -> Optional[float]:
    """|K - lam M| / (K + lam M), the Nehari and Pohozaev identities combined (p = 2, alpha = N - 2)."""
    if not _mass_identity_regime(problem):
        return None
    kinetic, mass, _ = _limiting_parts_nonzero(v, lam, problem)
    return abs(kinetic - lam * mass) / (kinetic + lam * mass)


def scaling_law_check(result_1: SolveResult, result_lam: SolveResult, lam: float, problem) -> float:
    """
    |E_lam / E_ref - (lam/lam_ref)^theta| / (lam/lam_ref)^theta, with lam_ref
    the lambda of ``result_1`` (1 unless recorded otherwise).
    """
    if not (result_1.converged and result_lam.converged):
        raise DiagnosticsError("scaling law check needs two converged solves")
    reference = result_1.lam if result_1.lam is not None else 1.0
    theta = scaling_exponent(problem.dim, problem.alpha, problem.p)
    target = (lam / reference) ** theta
    return abs(result_lam.energy / result_1.energy - target) / target


# Energy upper bound

@dataclass(frozen=True)
class UpperBoundReport:
    eps: Tuple[float, ...]
    gaps: Tuple[float, ...]
    within_tol: Tuple[bool, ...]
    decreasing: Optional[bool]
    first_passing_eps: Optional[float]


def energy_upper_bound_check(sweep: Sequence[Tuple[float, SolveResult]], limiting_energy_at_min: float,
                             dim: int, tol: float = 0.1) -> UpperBoundReport:
    """gap_eps = c_eps / eps^N - inf_Lambda C for each sweep point."""
    if not sweep:
        raise DiagnosticsError("energy upper bound check needs a nonempty sweep")
    eps = tuple(float(e) for e, _ in sweep)
    gaps = tuple(_critical_value(r) / e ** dim - limiting_energy_at_min for e, r in sweep)
    within = tuple(abs(g) <= tol * abs(limiting_energy_at_min) for g in gaps)
    decreasing = None
    if len(gaps) > 1:
        decreasing = all(abs(b) <= abs(a) for a, b in zip(gaps, gaps[1:]))
    first = next((e for e, ok in zip(eps, within) if ok), None)
    return UpperBoundReport(eps, gaps, within, decreasing, first)


def _critical_value(result: SolveResult) -> float:
    return result.critical_value if result.critical_value is not None else result.energy


# Concentration

@dataclass(frozen=True)
class ConcentrationMetrics:
    a_eps: Tuple[float, ...]
    in_lambda: bool
    v_at_a: float
    scaled_energy: float
    scaled_mass_in_ball: float
    sup_outside: float
    sup_outer_annulus: float
    profile_l2_distance: Optional[float] = None


def peak_point(u: Field) -> Tuple[float, ...]:
    """Grid argmax (lowest row-major index on ties)."""
    return u.grid.point(u.argmax())


def scaled_mass_on(u: Field, region: RegionSpec, eps: float) -> float:
    """eps^-N int_K u^2."""
    mask = region.mask(u.grid)
    return integrate(u.like(np.where(mask, u.values ** 2, 0.0))) / eps ** u.grid.dim


def rescaled_profile(u: Field, a_eps: Tuple[float, ...], eps: float, grid: GridSpec,
                     lost_fraction_tol: float = 1e-4) -> Field:
    """v(y) = u(a_eps + eps y) on ``grid``."""
    return resample(u, grid, source_origin=a_eps, target_origin=0.0, factor=eps,
                    lost_fraction_tol=lost_fraction_tol)


def concentration_metrics(result: SolveResult, problem: ChoquardProblem, rho: float = DEFAULT_RHO,
                          R: float = DEFAULT_R, limiting_profile: Optional[Field] = None) -> ConcentrationMetrics:
    u, eps, dim = result.field, problem.eps, problem.dim
    a_eps = peak_point(u)
    in_lambda = problem.params.lambda_region.contains(a_eps)
    if not in_lambda:
        logger.warning("Concentration point outside Lambda", a_eps=a_eps, eps=eps)
    r = problem.grid.distance_from(a_eps)
    ball = r <= rho * eps
    mass = integrate(u.like(np.where(ball, u.values ** 2, 0.0))) / eps ** dim
    far = r > R * eps
    sup_outside = float(np.max(u.values[far])) if far.any() else 0.0
    annulus = far & problem.outer_mask
    sup_annulus = float(np.max(u.values[annulus])) if annulus.any() else 0.0
    distance = None
    if limiting_profile is not None:
        try:
            v = rescaled_profile(u, a_eps, eps, limiting_profile.grid)
            distance = (v - limiting_profile).norm() / limiting_profile.norm()
        except ResolutionError as e:
            logger.warning("Rescaled profile not resolved", eps=eps, error=str(e))
    return ConcentrationMetrics(
        a_eps=a_eps,
        in_lambda=in_lambda,
        v_at_a=problem.params.potential.at(a_eps),
        scaled_energy=_critical_value(result) / eps ** dim,
        scaled_mass_in_ball=mass,
        sup_outside=sup_outside,
        sup_outer_annulus=sup_annulus,
        profile_l2_distance=distance,
    )


def rescaled_residual(u: Field, problem: ChoquardProblem, a_eps: Tuple[float, ...],
                      grid: Optional[GridSpec] = None) -> float:
    """
    ||-Lap v + V(a + eps y) v - (I_alpha * |v|^p)|v|^{p-2} v|| / ||v|| for
    v(y) = u(a + eps y), evaluated on the limiting grid.
    """
    grid = grid or problem.limit_grid
    v = rescaled_profile(u, a_eps, problem.eps, grid)
    if v.norm() == 0.0:
        raise DiagnosticsError("rescaled profile vanishes on the limiting grid")
    coords = tuple(a + problem.eps * y for a, y in zip(a_eps, grid.coordinates()))
    potential = np.broadcast_to(problem.params.potential.evaluate_at(coords), grid.shape)
    magnitude = np.abs(v.values)
    nonlocal_part = riesz_convolve(v.like(magnitude ** problem.p), riesz_kernel(grid, problem.alpha, problem.self_cell))
    residual = -laplacian(v).values + potential * v.values \
        - nonlocal_part.values * np.sign(v.values) * magnitude ** (problem.p - 1.0)
    return v.like(residual).norm() / v.norm()


# Penalization checks

@dataclass(frozen=True)
class UnpenalizationReport:
    passed: bool
    max_violation: Optional[float]
    unpenalized_residual: float


def unpenalization_check(result: SolveResult, pen: Optional[Penalization], problem: ChoquardProblem,
                         slack: float = UNPENALIZED_SLACK) -> UnpenalizationReport:
    """u^{p-1} <= H_eps on the complement of Lambda, plus the residual of the original equation."""
    u = result.field
    norm = u.norm()
    residual = euler_lagrange_residual(u, None, problem, original=True).norm() / norm if norm > 0 else 0.0
    if pen is None or not pen.enabled:
        return UnpenalizationReport(True, None, residual)
    outside = ~problem.lambda_mask
    powered = np.maximum(u.values[outside], 0.0) ** (problem.p - 1.0)
    violation = float(np.max(powered - pen.h_field.values[outside]))
    passed = violation <= slack
    logger.info("Un-penalization checked", **log_check("unpenalized", violation, passed,
                                                       eps=problem.eps, residual=residual))
    return UnpenalizationReport(passed, violation, residual)


@dataclass(frozen=True)
class ViolationCount:
    violations: int
    checked: int
    max_excess: float


def subsolution_check(result: SolveResult, pen: Penalization, problem: ChoquardProblem,
                      a_eps: Tuple[float, ...], R: float, delta: float,
                      residual_tol: float = 1e-8, slack_abs: float = SLACK_ABS,
                      slack_rel: float = SLACK_REL) -> ViolationCount:
    """
    Count points outside B(a, R eps) (and off the box collar) where

        -eps^2 Lap u + (1-delta) V u <= (p eps^-alpha I_alpha*(H u) + nu eps^{N-alpha} I_alpha(x-a)) H

    fails by more than the slack.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta={delta} must lie in (0, 1)")
    if not pen.enabled:
        raise DiagnosticsError("subsolution check needs an enabled penalization")
    if pen.nu is None:
        raise DiagnosticsError("subsolution constant nu has not been measured")
    u = result.field
    eps, alpha, dim, p = problem.eps, problem.alpha, problem.dim, problem.p
    h = pen.h_field.values
    zero_order = (1.0 - delta) * problem.potential.values * u.values
    lhs = -eps ** 2 * laplacian(u).values + zero_order
    coupled = riesz_convolve(u.like(h * u.values), problem.kernel).values
    r = np.maximum(problem.grid.distance_from(a_eps), 0.5 * problem.grid.spacing)
    point_source = pen.nu * eps ** (dim - alpha) * problem.constants.a_alpha * r ** (alpha - dim)
    rhs = (p * eps ** (-alpha) * coupled + point_source) * h
    slack = slack_abs + max(slack_rel, residual_tol) * float(np.max(np.abs(zero_order)))
    mask = subsolution_mask(problem, a_eps, R)
    excess = (lhs - rhs)[mask]
    count = ViolationCount(int(np.sum(excess > slack)), int(mask.sum()),
                           float(np.max(excess)) if excess.size else 0.0)
    logger.info("Subsolution checked", **log_check("subsolution", count.violations,
                                                   count.violations == 0, eps=eps))
    return count


def comparison_check(result: SolveResult, barrier: Field, a_eps: Tuple[float, ...], R: float,
                     problem: ChoquardProblem, slack_abs: float = SLACK_ABS,
                     slack_rel: float = SLACK_REL) -> ViolationCount:
    """Count points outside B(a, R eps) where u exceeds the barrier."""
    u = result.field
    u.require_same_grid(barrier)
    far = problem.grid.distance_from(a_eps) > R * problem.eps
    slack = slack_abs + slack_rel * max(u.max(), 0.0)
    excess = (u.values - barrier.values)[far]
    count = ViolationCount(int(np.sum(excess > slack)), int(far.sum()),
                           float(np.max(excess)) if excess.size else 0.0)
    logger.info("Comparison checked", **log_check("comparison", count.violations,
                                                  count.violations == 0, eps=problem.eps))
    return count


def penalized_nehari_defect(result: SolveResult, pen: Optional[Penalization],
                            problem: ChoquardProblem) -> float:
    """|<J'(u), u>| / (||u||_eps^2 + p eps^-alpha int (I*G(u)) g(u) u)."""
    u = result.field
    norm_sq = eps_norm_sq(u, problem)
    big_g = penalized_density(u, pen, problem)
    small_g = penalized_g(u.values, problem.lambda_mask, penalty_values(pen), problem.p)
    potential = riesz_convolve(big_g, problem.kernel)
    nonlinear = problem.p * problem.eps ** (-problem.alpha) * integrate(potential * small_g * u)
    total = norm_sq + nonlinear
    if total == 0.0:
        raise DiagnosticsError("Nehari defect needs a nonzero field")
    return abs(norm_sq - nonlinear) / total


# Nonexistence obstructions

def bump(grid: GridSpec, center, rho: float) -> Field:
    """(1 - |x - c|^2 / rho^2)_+^3."""
    r = grid.distance_from(center)
    return Field(grid, np.maximum(0.0, 1.0 - (r / rho) ** 2) ** 3)


def groundstate_transform_check(result: SolveResult, problem: ChoquardProblem, test_center,
                                rho: float) -> Optional[float]:
    """int eps^2 |grad phi|^2 + V phi^2 - eps^-alpha int (I_alpha * u^2) phi^2 (p = 2 only)."""
    if problem.p != 2.0:
        return None
    phi = bump(problem.grid, test_center, rho)
    lhs = problem.eps ** 2 * grad_sq_integral(phi, check=False) + integrate(problem.potential * phi * phi)
    u = result.field
    potential = riesz_convolve(u * u, problem.kernel)
    rhs = problem.eps ** (-problem.alpha) * integrate(potential * phi * phi)
    return lhs - rhs


def critical_mass_constant(dim: int) -> float:
    """Gamma((N-2)/2) pi^{N/2} 2^{N-2} ((N-2)/2)^2 for N >= 3."""
    if dim < 3:
        raise ParameterError(f"critical mass bound needs N >= 3, got {dim}")
    half = (dim - 2.0) / 2.0
    return math.gamma(half) * math.pi ** (dim / 2.0) * 2.0 ** (dim - 2) * half ** 2


def annulus_vanishing_ratio(potential: PotentialSpec, grid: GridSpec) -> List[Tuple[float, float]]:
    """R^{2-N} int_{B_2R \\ B_R} V for dyadic R with B_2R inside the box."""
    values = potential.evaluate(grid).values
    r = grid.distance_from(0.0)
    out = []
    radius = 2.0 * grid.spacing
    while 2.0 * radius <= grid.half_extent:
        shell = (r >= radius) & (r < 2.0 * radius)
        integral = grid.cell_volume * float(np.sum(values[shell]))
        out.append((radius, radius ** (2.0 - grid.dim) * integral))
        radius *= 2.0
    return out


@dataclass(frozen=True)
class CriticalMassReport:
    scaled_mass: float
    bound: float
    satisfied: bool
    annulus_ratios: Tuple[Tuple[float, float], ...]
    annulus_vanishing: Optional[bool]


def critical_mass_bound(result: SolveResult, problem: ChoquardProblem) -> Optional[CriticalMassReport]:
    """eps^-N int u^2 against the closed-form bound (p = 2, alpha = N - 2, N >= 3), else None."""
    if problem.dim < 3 or not _mass_identity_regime(problem):
        return None
    u = result.field
    scaled = integrate(u * u) / problem.eps ** problem.dim
    bound = critical_mass_constant(problem.dim)
    ratios = tuple(annulus_vanishing_ratio(problem.params.potential, problem.grid))
    vanishing = None
    if len(ratios) >= 3:
        tail = [v for _, v in ratios[-3:]]
        vanishing = tail[-1] < tail[0]
    return CriticalMassReport(scaled, bound, scaled <= bound, ratios, vanishing)


@dataclass(frozen=True)
class TrendVerdict:
    passed: Optional[bool]
    ratios: Tuple[float, ...]
    series: Tuple[float, ...]


def trend_verdict(series: Sequence[float], min_ratio: float = 1.0, floor: float = 0.0) -> TrendVerdict:
    """
    Decreasing by at least ``min_ratio`` per step; None below three points.

    A step whose later value is at or below ``floor`` passes regardless of the ratio.
    """
    series = tuple(float(s) for s in series)
    ratios = tuple(a / b if b != 0.0 else math.inf for a, b in zip(series, series[1:]))
    if len(series) < 3:
        return TrendVerdict(None, ratios, series)
    steps = [b <= floor or (b < a and q >= min_ratio) for (a, b), q in zip(zip(series, series[1:]), ratios)]
    return TrendVerdict(all(steps), ratios, series)


# Report

@dataclass
class DiagnosticsReport:
    """Per-solve diagnostics; n/a entries stay None."""

    eps: Optional[float] = None
    lam: Optional[float] = None
    residual_rel: Optional[float] = None
    pohozaev_defect_rel: Optional[float] = None
    nehari_defect_rel: Optional[float] = None
    scaling_ratio_error: Optional[float] = None
    mass_identity_error: Optional[float] = None
    kinetic_mass_balance: Optional[float] = None
    energy_upper_gap: Optional[float] = None
    concentration: Optional[ConcentrationMetrics] = None
    unpenalized: Optional[bool] = None
    unpenalized_violation: Optional[float] = None
    unpenalized_residual: Optional[float] = None
    rescaled_residual: Optional[float] = None
    hardy_kappa: Optional[float] = None
    hardy_product: Optional[float] = None
    sup_h_outside: Optional[float] = None
    nu: Optional[float] = None
    subsolution_radius: Optional[float] = None
    comparison_violations: Optional[int] = None
    subsolution_violations: Optional[int] = None
    notes: List[str] = dataclass_field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """Flat mapping; points become one key per coordinate, non-finite floats become None."""
        flat: Dict[str, Any] = {"schema_version": SCHEMA_VERSION}
        for key, value in asdict(self).items():
            if key == "concentration":
                continue
            if key == "notes":
                flat[key] = "; ".join(value)
            else:
                flat[key] = _clean(value)
        if self.concentration is not None:
            for key, value in asdict(self.concentration).items():
                if key == "a_eps":
                    for i, c in enumerate(value):
                        flat[f"concentration.a_eps_{i}"] = c
                else:
                    flat[f"concentration.{key}"] = _clean(value)
        return flat

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiagnosticsReport":
        data = dict(data)
        data.pop("schema_version", None)
        concentration = {k.split(".", 1)[1]: v for k, v in data.items() if k.startswith("concentration.")}
        plain = {k: v for k, v in data.items() if not k.startswith("concentration.")}
        notes = plain.pop("notes", "")
        report = cls(**plain, notes=[n for n in notes.split("; ") if n])
        if concentration:
            coords = sorted((k for k in concentration if k.startswith("a_eps_")), key=lambda k: int(k[6:]))
            a_eps = tuple(concentration.pop(k) for k in coords)
            report.concentration = ConcentrationMetrics(a_eps=a_eps, **concentration)
        return report

    def csv_rows(self) -> List[Tuple[Any, ...]]:
        """One (schema_version, eps, lam, check, value) row per scalar entry."""
        rows = []
        for key, value in sorted(self.to_dict().items()):
            if key in ("schema_version", "eps", "lam", "notes"):
                continue
            rows.append((SCHEMA_VERSION, self.eps, self.lam, key, value))
        return rows


def _clean(value):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def limiting_diagnostics(result: SolveResult, problem, energy_reference: Optional[SolveResult] = None) -> DiagnosticsReport:
    """Pohozaev, Nehari and (in regime) mass identities for a limiting ground state."""
    lam = result.lam
    v = result.field
    report = DiagnosticsReport(lam=lam, residual_rel=result.residual_rel)
    report.pohozaev_defect_rel = pohozaev_defect(v, lam, problem)
    report.nehari_defect_rel = nehari_defect(v, lam, problem)
    report.mass_identity_error = mass_identity_check(v, lam, result.energy, problem)
    report.kinetic_mass_balance = kinetic_mass_balance(v, lam, problem)
    if report.mass_identity_error is None:
        report.notes.append("mass identity n/a (needs p = 2 and alpha = N - 2)")
    if energy_reference is not None and energy_reference is not result:
        if energy_reference.converged and result.converged:
            report.scaling_ratio_error = scaling_law_check(energy_reference, result, lam, problem)
        else:
            report.notes.append("scaling check skipped (unconverged solve)")
    if not result.converged:
        report.notes.append("solve did not converge")
    logger.info("Limiting diagnostics", lam=lam, pohozaev=report.pohozaev_defect_rel,
                nehari=report.nehari_defect_rel, mass=report.mass_identity_error)
    return report


def run_diagnostics(
    problem: ChoquardProblem,
    pen: Optional[Penalization],
    result: SolveResult,
    *,
    limiting_energy_at_min: Optional[float] = None,
    limiting_profile: Optional[Field] = None,
    rho: float = DEFAULT_RHO,
    R: float = DEFAULT_R,
    residual_tol: float = 1e-8,
    slack_abs: float = SLACK_ABS,
    slack_rel: float = SLACK_REL,
) -> DiagnosticsReport:
    """All checks that apply to one penalized solve."""
    report = DiagnosticsReport(eps=problem.eps, residual_rel=result.residual_rel)
    if not result.converged:
        report.notes.append("solve did not converge")
    metrics = concentration_metrics(result, problem, rho, R, limiting_profile)
    report.concentration = metrics
    report.lam = metrics.v_at_a
    report.nehari_defect_rel = penalized_nehari_defect(result, pen, problem)
    if limiting_energy_at_min is not None:
        report.energy_upper_gap = metrics.scaled_energy - limiting_energy_at_min

    unpen = unpenalization_check(result, pen, problem)
    report.unpenalized = unpen.passed
    report.unpenalized_violation = unpen.max_violation
    report.unpenalized_residual = unpen.unpenalized_residual
    try:
        report.rescaled_residual = rescaled_residual(result.field, problem, metrics.a_eps)
    except (ResolutionError, DiagnosticsError) as e:
        report.notes.append(f"rescaled residual unavailable: {e}")

    if pen is None or not pen.enabled:
        report.notes.append("penalization disabled")
        return report
    report.hardy_kappa = pen.measured_kappa
    report.hardy_product = pen.hardy_product(problem)
    report.sup_h_outside = pen.sup_outside(problem)
    if not metrics.in_lambda:
        report.notes.append("concentration point outside Lambda; barrier checks skipped")
        return report
    radius = subsolution_radius(result.field, problem, metrics.a_eps, pen.delta, R)
    report.subsolution_radius = radius
    measure_nu(result.field, pen, problem, metrics.a_eps, radius)
    report.nu = pen.nu
    report.subsolution_violations = subsolution_check(
        result, pen, problem, metrics.a_eps, radius, pen.delta, residual_tol, slack_abs, slack_rel).violations
    try:
        geometry = barrier_geometry(problem, pen.delta, center=metrics.a_eps)
        barrier = build_barrier(pen, problem, metrics.a_eps, geometry.r, geometry.m, radius)
        report.comparison_violations = comparison_check(
            result, barrier, metrics.a_eps, radius, problem, slack_abs, slack_rel).violations
    except GeometryError as e:
        report.notes.append(f"barrier unavailable: {e}")
    return report

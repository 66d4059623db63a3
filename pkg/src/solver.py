"""
Ground-state solvers.

Both solvers minimize a fiber-maximized functional by preconditioned
gradient descent with Armijo backtracking. Each iterate is first moved to
the maximum of its ray t -> F(t u); the gradient of the reduced functional
there is t * F'(t u), the strong-form residual, and the Helmholtz
preconditioner (-eps^2 Lap + c)^{-1} turns it into a descent direction.

For the limiting problem the fiber maximum has a closed form. For the
penalized problem it is a bracketed root of d/dt J_eps(t u).
"""

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import optimize

from .grid import (
    Field,
    GridSpec,
    check_boundary_decay,
    integrate,
    integrate_values,
    inv_helmholtz,
    resample,
    riesz_convolve,
)
from .model import (
    ChoquardProblem,
    LimitingProblem,
    amplitude_exponent,
    eps_norm_sq,
    euler_lagrange_residual,
    limiting_energy,
    limiting_parts,
    limiting_residual,
    penalized_energy,
    penalized_g,
    penalized_G,
    penalty_values,
    concentration_point,
    validate_params,
)
from .penalization import Penalization, hardy_quotient
from .utils import (
    get_logger,
    log_iteration,
    CollapseError,
    ConvergenceError,
    HypothesisError,
    ParameterError,
    RegimeError,
    ResolutionError,
    SolverError,
)

logger = get_logger(__name__)

COLLAPSE_RATIO = 1e-8
MAX_BRACKET_STEPS = 200


class SolveOptions(BaseModel):
    """Iteration controls shared by both solvers."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iters: int = 5000
    residual_tol: float = 1e-8
    step_init: float = 1.0
    armijo_c: float = 1e-4
    precondition_shift: Optional[float] = None
    strict_boundary: bool = False
    seed: int = 42
    min_step: float = 1e-10
    log_every: int = 100
    lost_fraction_tol: float = 1e-4

    @field_validator("max_iters", "log_every")
    @classmethod
    def validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("residual_tol", "step_init", "min_step", "lost_fraction_tol")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("precondition_shift")
    @classmethod
    def validate_shift(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("armijo_c")
    @classmethod
    def validate_armijo(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("must lie in (0, 1)")
        return v


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    energy: float
    residual: float
    step: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Outcome of one solve. ``field`` is the nonnegative post-processed solution."""

    field: Field
    energy: float
    residual_rel: float
    iterations: int
    converged: bool
    trace: Tuple[TraceRecord, ...] = ()
    critical_value: Optional[float] = None
    lam: Optional[float] = None
    eps: Optional[float] = None
    pre_clamp_min: float = 0.0


# Fiber maxima

def nehari_fiber_max(A: float, B: float, p: float) -> Tuple[float, float]:
    """Maximum of t^2 A/2 - t^{2p} B/(2p) over t > 0: (t*, value)."""
    if not p > 1.0:
        raise ParameterError(f"the Nehari fiber has no interior maximum for p={p}")
    if not B > 0.0:
        raise ParameterError("no nonlinear mass: B(v_+^p, v_+^p) = 0")
    if not A > 0.0:
        raise ParameterError(f"quadratic part must be positive, got {A}")
    t_star = (A / B) ** (1.0 / (2.0 * p - 2.0))
    value = (p - 1.0) / (2.0 * p) * A ** (p / (p - 1.0)) * B ** (-1.0 / (p - 1.0))
    return t_star, value


def nehari_scale(v: Field, lam: float, problem) -> Tuple[float, float]:
    """(t*, max_t I_lambda(t v)) for the limiting functional."""
    kinetic, mass, nonlocal_part = limiting_parts(v, lam, problem, check=False)
    return nehari_fiber_max(kinetic + lam * mass, nonlocal_part, problem.p)


def penalized_fiber_max(u: Field, pen: Optional[Penalization], problem: ChoquardProblem) -> Tuple[float, float]:
    """(t*, J_eps(t* u)) with t* the bracketed root of d/dt J_eps(t u) / t."""
    q = eps_norm_sq(u, problem)
    if not q > 0.0:
        raise CollapseError("zero field has no fiber maximum")
    h = penalty_values(pen)
    mask, p = problem.lambda_mask, problem.p
    scale = p * problem.eps ** (-problem.alpha)

    def slope(t: float) -> float:
        tu = t * u.values
        big_g = u.like(penalized_G(tu, mask, h, p))
        potential = riesz_convolve(big_g, problem.kernel).values
        small_g = penalized_g(tu, mask, h, p)
        return q - scale * integrate_values(potential * small_g * u.values, u.grid) / t

    lo = hi = 1.0
    steps = 0
    if slope(1.0) > 0.0:
        hi = 2.0
        while slope(hi) > 0.0:
            lo, hi = hi, 2.0 * hi
            steps += 1
            if steps > MAX_BRACKET_STEPS:
                raise CollapseError("penalized fiber has no maximum (no positive mass in Lambda)")
    else:
        lo = 0.5
        while slope(lo) <= 0.0:
            hi, lo = lo, 0.5 * lo
            steps += 1
            if steps > MAX_BRACKET_STEPS:
                raise CollapseError("penalized fiber is decreasing from the origin")
    t_star = optimize.brentq(slope, lo, hi, xtol=1e-14 * hi, rtol=1e-13)
    return t_star, penalized_energy(t_star * u, pen, problem, check=False)


# Descent

Objective = Callable[[Field], Tuple[float, float]]
Gradient = Callable[[Field], Field]


@dataclass
class _Descent:
    label: str
    objective: Objective
    gradient: Gradient
    precondition: Callable[[Field], Field]
    opts: SolveOptions
    norm: Callable[[Field], float]
    trace: List[TraceRecord] = dataclass_field(default_factory=list)

    def _evaluate(self, candidate: Field) -> Tuple[float, float]:
        try:
            return self.objective(candidate)
        except (CollapseError, ParameterError):
            return math.nan, math.inf

    def run(self, init: Field) -> Tuple[Field, float, float, int, bool]:
        opts = self.opts
        reference = self.norm(init)
        if not reference > 0.0:
            raise CollapseError(f"{self.label}: initial guess is zero")
        t_star, value = self.objective(init)
        u = t_star * init
        step = 0.0
        accepted = 0
        residual_rel = math.inf
        converged = False
        while True:
            grad = self.gradient(u)
            residual_rel = grad.norm() / u.norm()
            self.trace.append(TraceRecord(accepted, value, residual_rel, step))
            entry = log_iteration(self.label, accepted, value, residual_rel, step=step)
            if accepted % opts.log_every == 0:
                logger.info("Solver progress", **entry)
            else:
                logger.debug("Solver progress", **entry)
            if residual_rel <= opts.residual_tol:
                converged = True
                break
            if accepted >= opts.max_iters:
                break
            direction = -self.precondition(grad)
            slope = integrate(grad * direction)
            step = opts.step_init
            while True:
                candidate = u + step * direction
                t_new, value_new = self._evaluate(candidate)
                if value_new <= value + opts.armijo_c * step * slope:
                    break
                step *= 0.5
                if step < opts.min_step:
                    break
            if step < opts.min_step:
                logger.warning("Line search stalled", solver=self.label, iteration=accepted,
                               residual=residual_rel)
                break
            u = t_new * candidate
            value = value_new
            accepted += 1
            if self.norm(u) < COLLAPSE_RATIO * reference:
                raise CollapseError(f"{self.label}: iterate collapsed to zero at iteration {accepted}")
        return u, value, residual_rel, accepted, converged


def _finish(u: Field, label: str, strict: bool, tol: float) -> Tuple[Field, float]:
    pre_clamp_min = u.min()
    scale = max(u.max(), 0.0)
    if pre_clamp_min < -1e-10 * scale:
        logger.warning("Negative undershoot before clamping", solver=label,
                       pre_clamp_min=pre_clamp_min, peak=scale)
    positive = u.positive_part()
    check_boundary_decay(positive, strict=strict, tol=tol, label=label)
    return positive, pre_clamp_min


# Limiting problem

def _limiting_problem(problem: Union[ChoquardProblem, LimitingProblem]) -> LimitingProblem:
    return problem.limiting() if isinstance(problem, ChoquardProblem) else problem


def gaussian_init(grid: GridSpec, lam: float) -> Field:
    return Field(grid, np.exp(-0.5 * lam * grid.distance_from(0.0) ** 2))


def solve_limiting(
    lam: float,
    problem: Union[ChoquardProblem, LimitingProblem],
    opts: Optional[SolveOptions] = None,
    *,
    grid: Optional[GridSpec] = None,
    init: Optional[Field] = None,
) -> SolveResult:
    """
    Ground state of -Lap v + lambda v = (I_alpha * v_+^p) v_+^{p-1}.

    Minimizes (p-1)/(2p) A^{p/(p-1)} B^{-1/(p-1)}, the limiting energy at the
    Nehari fiber maximum, from a centred Gaussian.
    """
    opts = opts or SolveOptions()
    limit = _limiting_problem(problem)
    if not lam > 0.0:
        raise ParameterError(f"lambda={lam} must be positive")
    regime = validate_params(limit.dim, limit.alpha, limit.p)
    if not regime.limiting_solvable:
        raise RegimeError(f"limiting problem unsolvable for N={limit.dim}, alpha={limit.alpha}, "
                          f"p={limit.p}: {regime.reason.value}")
    grid = grid or limit.limit_grid
    init = gaussian_init(grid, lam) if init is None else init

    def objective(v: Field) -> Tuple[float, float]:
        kinetic, mass, nonlocal_part = limiting_parts(v, lam, limit, check=False)
        if not nonlocal_part > 0.0:
            raise CollapseError("no positive part left")
        return nehari_fiber_max(kinetic + lam * mass, nonlocal_part, limit.p)

    shift = opts.precondition_shift or lam
    descent = _Descent(
        label="limiting",
        objective=objective,
        gradient=lambda v: limiting_residual(v, lam, limit),
        precondition=lambda r: inv_helmholtz(r, 1.0, shift),
        opts=opts,
        norm=lambda v: v.norm(),
    )
    logger.info("Solving limiting problem", lam=lam, dim=limit.dim, alpha=limit.alpha, p=limit.p,
                n=grid.points_per_axis, half_extent=grid.half_extent)
    u, _, residual_rel, iterations, converged = descent.run(init)
    strict = opts.strict_boundary or limit.strict
    field, pre_clamp_min = _finish(u, "limiting", strict, limit.boundary_tol)
    energy = limiting_energy(field, lam, limit, strict=strict)
    residual_rel = limiting_residual(field, lam, limit).norm() / field.norm()
    logger.info("Limiting solve finished", lam=lam, energy=energy, residual=residual_rel,
                iterations=iterations, converged=converged)
    return SolveResult(field, energy, residual_rel, iterations, converged, tuple(descent.trace),
                       None, lam, None, pre_clamp_min)


def rescale_limiting(v1: SolveResult, lam: float, problem: Union[ChoquardProblem, LimitingProblem],
                     *, grid: Optional[GridSpec] = None,
                     lost_fraction_tol: float = 1e-4) -> Field:
    """v_lambda(y) = lambda^{(alpha+2)/(4(p-1))} v_1(sqrt(lambda) y), resampled on ``grid``."""
    if not lam > 0.0:
        raise ParameterError(f"lambda={lam} must be positive")
    if v1.lam is not None and not math.isclose(v1.lam, 1.0):
        raise ParameterError(f"rescaling starts from the lambda=1 ground state, got lambda={v1.lam}")
    if not v1.converged:
        raise ConvergenceError("rescaling needs a converged lambda=1 ground state")
    limit = _limiting_problem(problem)
    grid = grid or v1.field.grid
    return resample(
        v1.field,
        grid,
        factor=math.sqrt(lam),
        amplitude=lam ** amplitude_exponent(limit.alpha, limit.p),
        lost_fraction_tol=lost_fraction_tol,
    )


# Penalized problem

def _check_hardy(pen: Optional[Penalization], problem: ChoquardProblem, strict: bool) -> None:
    if pen is None or not pen.enabled:
        return
    product = pen.hardy_product(problem)
    if product is None:
        logger.warning("Hardy quotient not measured before the penalized solve", eps=problem.eps)
        return
    if product >= 1.0:
        message = f"C_alpha p kappa = {product:.4g} >= 1 at eps={problem.eps}"
        if strict:
            raise HypothesisError(message)
        logger.warning("Hardy bound not realized", eps=problem.eps, product=product)


def auto_init(problem: ChoquardProblem, opts: SolveOptions) -> Field:
    """Limiting ground state at lambda = V(a) placed at a = argmin_Lambda V, scaled by eps."""
    center = concentration_point(problem)
    lam = problem.params.potential.at(center)
    profile = solve_limiting(lam, problem, opts)
    if not profile.converged:
        logger.warning("Limiting profile for the initial guess did not converge", lam=lam,
                       residual=profile.residual_rel)
    return resample(profile.field, problem.grid, source_origin=0.0, target_origin=center,
                    factor=1.0 / problem.eps, lost_fraction_tol=opts.lost_fraction_tol)


def warm_start(previous: SolveResult, problem: ChoquardProblem, opts: SolveOptions) -> Field:
    """Previous solution rescaled about its peak from eps_prev to eps."""
    center = previous.field.grid.point(previous.field.argmax())
    return resample(previous.field, problem.grid, source_origin=center, target_origin=center,
                    factor=previous.eps / problem.eps, lost_fraction_tol=opts.lost_fraction_tol)


def solve_penalized(
    problem: ChoquardProblem,
    pen: Optional[Penalization],
    opts: Optional[SolveOptions] = None,
    init: Union[Field, str, None] = "auto",
) -> SolveResult:
    """
    Critical point of the penalized functional J_eps at the ground-state level.

    ``pen=None`` (or a disabled penalization) solves the original equation.
    The returned field is nonnegative and ``critical_value`` is J_eps at it.
    """
    opts = opts or SolveOptions()
    strict = opts.strict_boundary or problem.strict
    if pen is not None and pen.enabled and not math.isclose(pen.eps, problem.eps):
        raise ParameterError(f"penalization built for eps={pen.eps}, problem has eps={problem.eps}")
    _check_hardy(pen, problem, strict)
    if init is None or isinstance(init, str):
        init = auto_init(problem, opts)
    init.require_same_grid(problem.potential)

    shift = opts.precondition_shift or float(np.median(problem.potential.values[problem.lambda_mask]))
    eps2 = problem.eps ** 2
    descent = _Descent(
        label="penalized",
        objective=lambda u: penalized_fiber_max(u, pen, problem),
        gradient=lambda u: euler_lagrange_residual(u, pen, problem),
        precondition=lambda r: inv_helmholtz(r, eps2, shift),
        opts=opts,
        norm=lambda u: math.sqrt(max(eps_norm_sq(u, problem), 0.0)),
    )
    logger.info("Solving penalized problem", eps=problem.eps, shift=shift,
                penalized=pen is not None and pen.enabled)
    u, _, residual_rel, iterations, converged = descent.run(init)
    field, pre_clamp_min = _finish(u, "penalized", strict, problem.boundary_tol)
    energy = penalized_energy(field, pen, problem)
    residual_rel = euler_lagrange_residual(field, pen, problem).norm() / field.norm()
    logger.info("Penalized solve finished", eps=problem.eps, energy=energy, residual=residual_rel,
                iterations=iterations, converged=converged)
    return SolveResult(field, energy, residual_rel, iterations, converged, tuple(descent.trace),
                       energy, None, problem.eps, pre_clamp_min)


# Continuation in eps

@dataclass(frozen=True, eq=False)
class SweepStep:
    eps: float
    problem: ChoquardProblem
    pen: Penalization
    result: SolveResult
    report: Optional[object] = None


@dataclass(frozen=True, eq=False)
class SweepOutcome:
    steps: Tuple[SweepStep, ...]
    failed_eps: Optional[float] = None
    error: Optional[str] = None

    @property
    def complete(self) -> bool:
        return self.failed_eps is None


def continuation_sweep(
    problem: ChoquardProblem,
    eps_list: Sequence[float],
    pen_builder: Callable[[ChoquardProblem], Penalization],
    opts: Optional[SolveOptions] = None,
    *,
    hardy_trials: int = 16,
    diagnose: Optional[Callable[[ChoquardProblem, Penalization, SolveResult], object]] = None,
    resume: Optional[Callable[[ChoquardProblem, Penalization], Optional[SolveResult]]] = None,
    on_step: Optional[Callable[[SweepStep], None]] = None,
) -> SweepOutcome:
    """
    Warm-started eps ladder: auto-init at the largest eps, then each solve
    starts from the previous solution rescaled about its peak. Stops at the
    first failure and returns the steps completed so far. The subsolution
    constant nu recorded on one step is carried into the next penalization.
    """
    opts = opts or SolveOptions()
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ParameterError("eps_list is empty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ParameterError(f"eps_list must be strictly decreasing, got {eps_list}")

    steps: List[SweepStep] = []
    previous: Optional[SolveResult] = None
    for eps in eps_list:
        current = problem.with_eps(eps)
        try:
            pen = pen_builder(current)
            if pen.enabled:
                hardy_quotient(pen, current, hardy_trials, seed=opts.seed)
            result = resume(current, pen) if resume is not None else None
            if result is None:
                init: Union[Field, str] = "auto"
                if previous is not None:
                    try:
                        init = warm_start(previous, current, opts)
                    except ResolutionError as e:
                        logger.warning("Warm start not resolved, falling back to auto init",
                                       eps=eps, error=str(e))
                result = solve_penalized(current, pen, opts, init)
            else:
                logger.info("Resumed sweep step", eps=eps)
        except (SolverError, ResolutionError, HypothesisError) as e:
            logger.error("Sweep step failed", eps=eps, error=str(e))
            return SweepOutcome(tuple(steps), eps, str(e))

        if pen.enabled and steps and steps[-1].pen.nu is not None:
            pen.record_nu(steps[-1].pen.nu)
        report = diagnose(current, pen, result) if diagnose is not None else None
        step = SweepStep(eps, current, pen, result, report)
        steps.append(step)
        if on_step is not None:
            on_step(step)
        if not result.converged:
            message = f"no convergence at eps={eps} (residual {result.residual_rel:.3e})"
            logger.error("Sweep stopped", eps=eps, error=message)
            return SweepOutcome(tuple(steps), eps, message)
        previous = result
    return SweepOutcome(tuple(steps))

"""
Penalization potentials H_eps, the Hardy quotient, and barrier functions.

The penalization truncates the nonlinearity outside Lambda below
H_eps = chi_{R^N \\ Lambda} (e^{-lambda/eps} w_mu)^{p-1}, where w_mu is a
supersolution profile chosen by one of three constructions depending on
(N, alpha, p) and the decay of V. Barriers are the cosh-profile
supersolutions that dominate solutions outside small balls.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .grid import (
    DEFAULT_BOUNDARY_LAYER,
    Field,
    grad_sq_integral,
    integrate,
    riesz_convolve,
)
from .model import ChoquardProblem, concentration_point
from .utils import (
    get_logger,
    log_check,
    GeometryError,
    HypothesisError,
    ParameterError,
)

logger = get_logger(__name__)

DEFAULT_DELTA = 0.1
MIN_TRIAL_COUNT = 16

# barrier geometry fractions of the admissible maxima
M_FRACTION = 0.9
R_FRACTION = 0.45
LAMBDA_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class Penalization:
    """
    Penalization potential for one eps.

    ``h_field`` is None when penalization is disabled (H = +inf), in which
    case the penalized and original problems coincide. ``measured_kappa`` is
    recorded once after construction; ``nu`` keeps the largest value measured.
    """

    h_field: Optional[Field]
    w_field: Optional[Field]
    case: Optional[int]
    mu: float
    lam: float
    delta: float
    eps: float
    measured_kappa: Optional[float] = None
    nu: Optional[float] = None

    @classmethod
    def disabled(cls, eps: float, delta: float = DEFAULT_DELTA) -> "Penalization":
        return cls(None, None, None, math.nan, math.nan, delta, eps)

    @property
    def enabled(self) -> bool:
        return self.h_field is not None

    def record_kappa(self, kappa: float) -> None:
        if self.measured_kappa is None:
            object.__setattr__(self, "measured_kappa", float(kappa))

    def record_nu(self, nu: float) -> None:
        if self.nu is None or nu > self.nu:
            object.__setattr__(self, "nu", float(nu))

    def sup_outside(self, problem: ChoquardProblem) -> float:
        """sup of H_eps over the complement of Lambda."""
        if not self.enabled:
            return math.inf
        return float(np.max(self.h_field.values[~problem.lambda_mask]))

    def hardy_product(self, problem: ChoquardProblem) -> Optional[float]:
        """C_alpha * p * kappa, or None before kappa is measured."""
        if self.measured_kappa is None:
            return None
        return problem.constants.c_alpha * problem.p * self.measured_kappa


# Construction hypotheses

@dataclass(frozen=True)
class CaseCheck:
    case: int
    holds: bool
    failed: Optional[str] = None


@dataclass(frozen=True)
class CaseReport:
    checks: Tuple[CaseCheck, ...]

    @property
    def selected(self) -> Optional[int]:
        for check in self.checks:
            if check.holds:
                return check.case
        return None

    def check_for(self, case: int) -> CaseCheck:
        return self.checks[case - 1]


def _potential_lower_bound(problem: ChoquardProblem, weight_exponent: float) -> float:
    """Grid infimum of V(x)(1 + |x|^k)."""
    r = problem.grid.distance_from(0.0)
    return float(np.min(problem.potential.values * (1.0 + r ** weight_exponent)))


def case_hypotheses(problem: ChoquardProblem) -> CaseReport:
    """Evaluate the three penalization constructions against (N, alpha, p, V)."""
    dim, alpha, p = problem.dim, problem.alpha, problem.p
    gamma = problem.params.potential.far_field_exponent()
    checks: List[CaseCheck] = []

    if dim < 3:
        checks.append(CaseCheck(1, False, f"N >= 3 (N = {dim})"))
    else:
        bound = 1.0 + max(alpha, (alpha + 2.0) / 2.0) / (dim - 2.0)
        if p > bound:
            checks.append(CaseCheck(1, True))
        else:
            checks.append(CaseCheck(1, False, f"p > 1 + max(alpha, (alpha+2)/2)/(N-2) = {bound:.6g}"))

    if p != 2.0:
        checks.append(CaseCheck(2, False, f"p = 2 (p = {p})"))
    elif alpha < dim - 2.0:
        checks.append(CaseCheck(2, False, f"alpha >= N - 2 (alpha = {alpha})"))
    elif gamma > dim - alpha or _potential_lower_bound(problem, dim - alpha) <= 0.0:
        checks.append(CaseCheck(2, False, f"inf V(x)(1+|x|^{dim - alpha:g}) > 0"))
    else:
        checks.append(CaseCheck(2, True))

    if p <= 2.0:
        checks.append(CaseCheck(3, False, f"p > 2 (p = {p})"))
    elif gamma > 2.0 or _potential_lower_bound(problem, 2.0) <= 0.0:
        checks.append(CaseCheck(3, False, "liminf V(x)|x|^2 > 0"))
    else:
        checks.append(CaseCheck(3, True))

    return CaseReport(tuple(checks))


def penalization_case_report(problem: ChoquardProblem) -> CaseReport:
    report = case_hypotheses(problem)
    logger.info("Penalization cases evaluated", selected=report.selected,
                failed={c.case: c.failed for c in report.checks if not c.holds})
    return report


def choose_mu(case: int, dim: int, alpha: float, p: float) -> float:
    """Deterministic decay exponent mu inside the admissible range of each case."""
    if case == 1:
        lower = max(alpha / p, (alpha + 2.0) / (2.0 * (p - 1.0)))
        upper = dim - 2.0
        if lower >= upper:
            raise HypothesisError(f"empty mu interval ({lower:.6g}, {upper:.6g}) for case 1")
        return 0.5 * (lower + upper)
    if case == 2:
        return dim / 2.0 + 1.0
    if case == 3:
        lower = max(dim / p, (2.0 + alpha - dim) / (p - 2.0), 0.0)
        upper = 2.0 * dim if lower < 2.0 * dim else lower + dim
        return 0.5 * (lower + upper)
    raise ParameterError(f"unknown penalization case {case!r}")


# Weight profile

def _smoothstep(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def _outer_profile(r: np.ndarray, case: int, mu: float, reach: float) -> np.ndarray:
    if case in (1, 2):
        return r ** (-mu)
    big_r = 1.25 * reach
    inner = 2.0 * big_r ** 2 - r ** 2
    tail = r ** (-mu)
    # cubic Hermite on [R, 2R] matching value and slope at both ends
    t = np.clip((r - big_r) / big_r, 0.0, 1.0)
    y0, m0 = big_r ** 2, -2.0 * big_r
    y1, m1 = (2.0 * big_r) ** (-mu), -mu * (2.0 * big_r) ** (-mu - 1.0)
    h00 = 2 * t ** 3 - 3 * t ** 2 + 1
    h10 = t ** 3 - 2 * t ** 2 + t
    h01 = -2 * t ** 3 + 3 * t ** 2
    h11 = t ** 3 - t ** 2
    bridge = h00 * y0 + h10 * big_r * m0 + h01 * y1 + h11 * big_r * m1
    return np.where(r <= big_r, inner, np.where(r >= 2.0 * big_r, tail, bridge))


def weight_profile(problem: ChoquardProblem, case: int, mu: float) -> Field:
    """w_mu: 1 on Lambda, the case profile outside U, a smoothstep blend across U minus Lambda."""
    grid = problem.grid
    outer = problem.params.outer_region
    r = np.maximum(grid.distance_from(outer.center_point(problem.dim)), 0.5 * grid.spacing)
    far = _outer_profile(r, case, mu, outer.outer_radius(problem.dim))
    d_lambda = problem.params.lambda_region.signed_distance(grid)
    d_outer = outer.signed_distance(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(d_outer < 0.0, d_lambda / (d_lambda - d_outer), 1.0)
    blend = _smoothstep(s)
    w = (1.0 - blend) + blend * far
    w = np.where(problem.lambda_mask, 1.0, w)
    return Field(grid, w)


# Barrier geometry

@dataclass(frozen=True)
class BarrierGeometry:
    center: Tuple[float, ...]
    m: float
    r: float
    inf_v: float

    @property
    def lam_max(self) -> float:
        return self.m * self.r


def barrier_geometry(problem: ChoquardProblem, delta: float = DEFAULT_DELTA,
                     center: Optional[Tuple[float, ...]] = None) -> BarrierGeometry:
    """Default (a, m, r) with m^2 < (1-delta) inf_Lambda V and r < dist(a, boundary of Lambda)/2."""
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta={delta} must lie in (0, 1)")
    inf_v = float(np.min(problem.potential.values[problem.lambda_mask]))
    if inf_v <= 0.0:
        raise GeometryError("inf of V over Lambda must be positive for the barrier construction")
    center = concentration_point(problem) if center is None else tuple(center)
    dist = problem.params.lambda_region.distance_to_boundary(center)
    return BarrierGeometry(
        center=center,
        m=M_FRACTION * math.sqrt((1.0 - delta) * inf_v),
        r=R_FRACTION * dist,
        inf_v=inf_v,
    )


def default_lambda(problem: ChoquardProblem, delta: float = DEFAULT_DELTA) -> float:
    return LAMBDA_FRACTION * barrier_geometry(problem, delta).lam_max


def build_penalization(case: Union[int, str], problem: ChoquardProblem,
                       lam: Union[float, str] = "auto",
                       delta: float = DEFAULT_DELTA) -> Penalization:
    """Construct H_eps = chi_{R^N \\ Lambda} (e^{-lam/eps} w_mu)^{p-1} for the given case."""
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta={delta} must lie in (0, 1)")
    report = case_hypotheses(problem)
    if case == "auto":
        case = report.selected
        if case is None:
            failed = "; ".join(f"case {c.case}: {c.failed}" for c in report.checks)
            raise HypothesisError(f"no penalization case applies ({failed})")
    case = int(case)
    if case not in (1, 2, 3):
        raise ParameterError(f"unknown penalization case {case!r}")
    check = report.check_for(case)
    if not check.holds:
        raise HypothesisError(f"penalization case {case} requires {check.failed}")
    if problem.params.lambda_region.shape != "ball":
        logger.warning("Penalization on a box region is untested against the theory",
                       shape=problem.params.lambda_region.shape)

    if lam == "auto":
        lam = default_lambda(problem, delta)
    lam = float(lam)
    if lam <= 0.0:
        raise ParameterError(f"penalization lam={lam} must be positive")

    mu = choose_mu(case, problem.dim, problem.alpha, problem.p)
    w = weight_profile(problem, case, mu)
    exponent = problem.p - 1.0
    decay = math.exp(-lam * exponent / problem.eps)
    h = np.where(problem.lambda_mask, 0.0, decay * w.values ** exponent)
    pen = Penalization(Field(problem.grid, h), w, case, mu, lam, delta, problem.eps)
    logger.info("Penalization built", case=case, mu=mu, lam=lam, eps=problem.eps,
                sup_h=pen.sup_outside(problem))
    return pen


# Hardy quotient

def hardy_ratio(pen: Penalization, problem: ChoquardProblem, phi: Field) -> float:
    """eps^-alpha int H^2 phi^2 |x|^alpha over int eps^2 |grad phi|^2 + V phi^2."""
    denominator = problem.eps ** 2 * grad_sq_integral(phi, check=False) + integrate(problem.potential * phi * phi)
    if not denominator > 0.0:
        raise ParameterError("degenerate Hardy quotient: trial field has zero energy norm")
    if not pen.enabled:
        return math.inf
    weight = problem.grid.distance_from(0.0) ** problem.alpha
    numerator = integrate(pen.h_field * pen.h_field * phi * phi * weight)
    return problem.eps ** (-problem.alpha) * numerator / denominator


def _gaussian(problem: ChoquardProblem, center, width: float) -> Field:
    r = problem.grid.distance_from(center)
    return Field(problem.grid, np.exp(-(r / width) ** 2))


def hardy_trial_fields(pen: Penalization, problem: ChoquardProblem, trial_count: int,
                       seed: int) -> List[Field]:
    """Even trials are bumps anywhere in the box, odd ones sit where H is large."""
    rng = np.random.default_rng(seed)
    grid = problem.grid
    half = 0.5 * grid.half_extent
    min_width = 2.0 * grid.spacing
    strong = np.flatnonzero(pen.h_field.values >= 0.5 * pen.h_field.max())
    fields = []
    for i in range(trial_count):
        if i % 2 == 0:
            center = rng.uniform(-half, half, size=problem.dim)
            width = math.exp(rng.uniform(math.log(problem.eps), math.log(grid.half_extent / 8.0)))
        else:
            center = grid.point(int(strong[rng.integers(strong.size)]))
            width = problem.eps * math.exp(rng.uniform(0.0, math.log(4.0)))
        fields.append(_gaussian(problem, center, max(width, min_width)))
    return fields


def hardy_quotient(pen: Penalization, problem: ChoquardProblem, trial_count: int = MIN_TRIAL_COUNT,
                   *, seed: int = 42, current: Optional[Field] = None) -> float:
    """Measured kappa: max Hardy ratio over random trial bumps (and the current iterate)."""
    if trial_count < MIN_TRIAL_COUNT:
        raise ParameterError(f"trial_count={trial_count} must be >= {MIN_TRIAL_COUNT}")
    if not pen.enabled:
        raise ParameterError("Hardy quotient is undefined for a disabled penalization")
    if pen.h_field.max() == 0.0:
        kappa = 0.0
    else:
        trials = hardy_trial_fields(pen, problem, trial_count, seed)
        if current is not None:
            trials.append(current)
        kappa = max(hardy_ratio(pen, problem, phi) for phi in trials)
    pen.record_kappa(kappa)
    product = problem.constants.c_alpha * problem.p * kappa
    logger.info("Hardy quotient measured", **log_check("hardy", product, product < 1.0,
                                                       kappa=kappa, eps=problem.eps))
    return kappa


# Subsolution constant and barrier

def measure_nu(u: Field, pen: Penalization, problem: ChoquardProblem,
               a_eps: Tuple[float, ...], R: Optional[float] = None) -> float:
    """
    nu = max of eps^-alpha (I_alpha * chi_Lambda u_+^p)(x) / (eps^{N-alpha} I_alpha(x - a_eps))
    over the complement of U and, when R is given, over the points outside
    Lambda and outside B(a_eps, R eps).

    Returns the value measured on ``u``; ``pen.nu`` keeps the running maximum.
    """
    u.require_same_grid(problem.potential)
    r = problem.grid.distance_from(a_eps)
    region = ~problem.outer_mask
    if R is not None:
        region = region | (~problem.lambda_mask & (r > R * problem.eps))
    if not region.any():
        raise GeometryError("outer_region covers the whole box; nu cannot be measured")
    source = np.where(problem.lambda_mask, np.maximum(u.values, 0.0) ** problem.p, 0.0)
    potential = riesz_convolve(u.like(source), problem.kernel).values
    eps, alpha, dim = problem.eps, problem.alpha, problem.dim
    reference = eps ** (dim - alpha) * problem.constants.a_alpha * r[region] ** (alpha - dim)
    nu = float(np.max(eps ** (-alpha) * potential[region] / reference))
    pen.record_nu(nu)
    logger.debug("Subsolution constant measured", nu=nu, recorded=pen.nu, eps=eps, R=R)
    return nu


def subsolution_radius(u: Field, problem: ChoquardProblem, a_eps: Tuple[float, ...],
                       delta: float, R_min: float) -> float:
    """
    Smallest R >= R_min such that eps^-alpha (I_alpha * u_+^p) u_+^{p-2} <= delta V
    at every point of Lambda outside B(a_eps, R eps).

    Inside Lambda the penalization vanishes, so the linear inequality outside
    B(a_eps, R eps) holds there only once the nonlocal term is absorbed by delta V.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta={delta} must lie in (0, 1)")
    eps, p = problem.eps, problem.p
    positive = np.maximum(u.values, 0.0)
    nonlocal_part = eps ** (-problem.alpha) * riesz_convolve(u.like(positive ** p), problem.kernel).values
    with np.errstate(divide="ignore"):
        factor = np.where(positive > 0.0, nonlocal_part * positive ** (p - 2.0), 0.0)
    r = problem.grid.distance_from(a_eps)
    bad = problem.lambda_mask & (factor > delta * problem.potential.values) & (r > R_min * eps)
    if not bad.any():
        return float(R_min)
    radius = (float(np.max(r[bad])) + problem.grid.spacing) / eps
    logger.info("Subsolution radius enlarged", R_min=R_min, R=radius, eps=eps)
    return radius


def logcosh(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(x, -x) - math.log(2.0)


def build_barrier(pen: Penalization, problem: ChoquardProblem, a_eps: Tuple[float, ...],
                  r: float, m: float, R: float) -> Field:
    """
    U_bar = 2 w_mu h / cosh(m r / eps), with h = cosh(m (r - |x - a|)/eps) inside
    B(a, r) and 1 outside, evaluated in log space.
    """
    if not pen.enabled:
        raise ParameterError("barrier needs an enabled penalization")
    region = problem.params.lambda_region
    inf_v = float(np.min(problem.potential.values[problem.lambda_mask]))
    if not m * m < (1.0 - pen.delta) * inf_v:
        raise GeometryError(f"barrier needs m^2 < (1-delta) inf_Lambda V ({m * m:.6g} >= {(1 - pen.delta) * inf_v:.6g})")
    if not region.contains(a_eps):
        raise GeometryError(f"barrier center {a_eps} lies outside Lambda")
    dist = region.distance_to_boundary(a_eps)
    if not 0.0 < r < 0.5 * dist:
        raise GeometryError(f"barrier needs 0 < r < dist(a, boundary)/2 = {0.5 * dist:.6g}, got {r}")
    if not pen.lam < m * r:
        raise GeometryError(f"barrier needs lam < m r ({pen.lam:.6g} >= {m * r:.6g})")

    eps = problem.eps
    rho = problem.grid.distance_from(a_eps)
    inner = np.where(rho < r, logcosh(m * (r - rho) / eps), 0.0)
    barrier = 2.0 * pen.w_field.values * np.exp(inner - logcosh(np.asarray(m * r / eps)))
    field = Field(problem.grid, barrier)
    inside = rho <= R * eps
    if inside.any() and float(np.min(barrier[inside])) < 1.0:
        logger.warning("Barrier drops below 1 inside B(a, R eps)", R=R, eps=eps,
                       min_barrier=float(np.min(barrier[inside])))
    return field


def subsolution_mask(problem: ChoquardProblem, a_eps, R: float) -> np.ndarray:
    """Grid points outside B(a, R eps) and away from the box boundary collar."""
    far = problem.grid.distance_from(a_eps) > R * problem.eps
    return far & ~problem.grid.boundary_layer(DEFAULT_BOUNDARY_LAYER)

"""Tests for the limiting and penalized solvers and the eps continuation."""

import math

import numpy as np
import pytest

from src.diagnostics import mass_identity_check, nehari_defect, penalized_nehari_defect, pohozaev_defect
from src.grid import Field, make_grid
from src.model import LimitingProblem, limiting_residual, scaling_exponent
from src.penalization import Penalization, build_penalization, measure_nu
from src.solver import (
    SolveOptions,
    SolveResult,
    continuation_sweep,
    gaussian_init,
    nehari_fiber_max,
    rescale_limiting,
    solve_limiting,
    solve_penalized,
)
from src.utils import ConvergenceError, HypothesisError, ParameterError, RegimeError
from tests.conftest import gaussian, make_problem


def _limit(n: int = 128, half_extent: float = 16.0, self_cell: str = "average", p: float = 2.0) -> LimitingProblem:
    return LimitingProblem(1, 0.5, p, make_grid(1, n, half_extent), self_cell)


def test_nehari_fiber_max_closed_form() -> None:
    t_star, value = nehari_fiber_max(2.0, 8.0, 2.0)
    assert math.isclose(t_star, 0.5)
    assert math.isclose(value, 0.125)


@pytest.mark.parametrize("A, B, p", [(1.0, 1.0, 1.0), (1.0, 0.0, 2.0), (0.0, 1.0, 2.0)])
def test_nehari_fiber_max_rejects(A: float, B: float, p: float) -> None:
    with pytest.raises(ParameterError):
        nehari_fiber_max(A, B, p)


def test_solve_options_validation() -> None:
    with pytest.raises(ValueError):
        SolveOptions(armijo_c=1.5)
    with pytest.raises(ValueError):
        SolveOptions(max_iters=0)
    with pytest.raises(ValueError):
        SolveOptions(precondition_shift=-1.0)


# Limiting solver

def test_limiting_solve_converges() -> None:
    limit = _limit()
    result = solve_limiting(1.0, limit, SolveOptions(residual_tol=1e-6))
    assert result.converged
    assert result.residual_rel <= 1e-6
    assert result.lam == 1.0
    assert result.energy > 0.0
    assert result.field.min() >= 0.0
    assert result.field.argmax() == limit.limit_grid.points_per_axis // 2
    assert nehari_defect(result.field, 1.0, limit) < 1e-4
    energies = [record.energy for record in result.trace]
    assert all(b <= a * (1.0 + 1e-12) for a, b in zip(energies, energies[1:]))


def test_limiting_solve_rejects_bad_input() -> None:
    with pytest.raises(ParameterError):
        solve_limiting(0.0, _limit())
    with pytest.raises(RegimeError):
        solve_limiting(1.0, _limit(p=1.2))


def test_unconverged_solve_is_reported() -> None:
    result = solve_limiting(1.0, _limit(), SolveOptions(max_iters=1, residual_tol=1e-12))
    assert not result.converged
    assert result.iterations <= 1


@pytest.mark.slow
def test_limiting_energy_scaling_law() -> None:
    limit = _limit(n=1024, half_extent=24.0)
    opts = SolveOptions(residual_tol=1e-7)
    e1 = solve_limiting(1.0, limit, opts)
    e4 = solve_limiting(4.0, limit, opts)
    target = 4.0 ** scaling_exponent(1, 0.5, 2.0)
    assert abs(e4.energy / e1.energy - target) / target < 0.02
    rescaled = rescale_limiting(e1, 4.0, limit)
    assert limiting_residual(rescaled, 4.0, limit).norm() / rescaled.norm() < 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("dim, alpha, p, n", [
    (1, 0.5, 2.0, 512), (1, 0.5, 2.5, 512), (2, 1.0, 2.0, 128), (3, 2.0, 2.0, 64),
])
def test_limiting_identities(dim: int, alpha: float, p: float, n: int) -> None:
    limit = LimitingProblem(dim, alpha, p, make_grid(dim, n, 24.0 if dim == 1 else 16.0), "lattice")
    result = solve_limiting(1.0, limit, SolveOptions(residual_tol=1e-8))
    assert result.converged
    assert pohozaev_defect(result.field, 1.0, limit) < 1e-3
    assert nehari_defect(result.field, 1.0, limit) < 1e-3


@pytest.mark.slow
def test_critical_mass_identity_in_three_dimensions() -> None:
    limit = LimitingProblem(3, 1.0, 2.0, make_grid(3, 64, 16.0), "lattice")
    result = solve_limiting(1.0, limit, SolveOptions(residual_tol=1e-7))
    assert result.converged
    assert mass_identity_check(result.field, 1.0, result.energy, limit) < 0.02


@pytest.mark.slow
@pytest.mark.parametrize("t", [0.9, 1.1])
def test_pohozaev_defect_detects_amplitude_change(t: float) -> None:
    limit = _limit(n=512, half_extent=24.0, self_cell="lattice")
    v = solve_limiting(1.0, limit, SolveOptions(residual_tol=1e-8)).field
    assert pohozaev_defect(v, 1.0, limit) < 1e-3
    # K and M scale like t^2, the nonlocal term like t^4
    assert pohozaev_defect(t * v, 1.0, limit) > 1e-2


def test_limiting_solve_is_translation_equivariant() -> None:
    limit = _limit()
    grid = limit.limit_grid
    shift = 8
    opts = SolveOptions(residual_tol=1e-8)
    centred = solve_limiting(1.0, limit, opts)
    moved = solve_limiting(1.0, limit, opts,
                           init=Field(grid, np.roll(gaussian_init(grid, 1.0).values, shift)))
    assert centred.converged and moved.converged
    assert moved.field.argmax() == centred.field.argmax() + shift
    assert math.isclose(moved.energy, centred.energy, rel_tol=1e-7)
    np.testing.assert_allclose(moved.field.values, np.roll(centred.field.values, shift),
                               atol=1e-5 * centred.field.max())
    rolled = Field(grid, np.roll(centred.field.values, shift))
    assert limiting_residual(rolled, 1.0, limit).norm() / rolled.norm() < 1e-5


# Rescaling

def _synthetic(field: Field, lam=1.0, converged: bool = True) -> SolveResult:
    return SolveResult(field, 1.0, 0.0, 1, converged, lam=lam)


def test_rescale_limiting_gaussian() -> None:
    grid = make_grid(1, 128, 8.0)
    limit = LimitingProblem(1, 0.5, 2.0, grid)
    rescaled = rescale_limiting(_synthetic(gaussian(grid)), 2.0, limit)
    expected = 2.0 ** 0.625 * np.exp(-2.0 * grid.axis() ** 2)
    np.testing.assert_allclose(rescaled.values, expected, atol=1e-6)


def test_rescale_limiting_preconditions() -> None:
    grid = make_grid(1, 128, 8.0)
    limit = LimitingProblem(1, 0.5, 2.0, grid)
    with pytest.raises(ParameterError):
        rescale_limiting(_synthetic(gaussian(grid), lam=2.0), 4.0, limit)
    with pytest.raises(ParameterError):
        rescale_limiting(_synthetic(gaussian(grid)), -1.0, limit)
    with pytest.raises(ConvergenceError):
        rescale_limiting(_synthetic(gaussian(grid), converged=False), 4.0, limit)


# Penalized solver

def test_solve_penalized_rejects_mismatched_eps() -> None:
    problem = make_problem(eps=0.5)
    pen = build_penalization(2, make_problem(eps=0.25))
    with pytest.raises(ParameterError):
        solve_penalized(problem, pen, init=gaussian(problem.grid))


@pytest.mark.slow
def test_penalized_solve_concentrates_in_lambda() -> None:
    problem = make_problem(eps=0.5)
    pen = build_penalization(2, problem)
    result = solve_penalized(problem, pen, SolveOptions(residual_tol=1e-6))
    assert result.converged
    assert result.eps == 0.5
    assert result.critical_value == result.energy
    assert problem.params.lambda_region.contains(result.field.grid.point(result.field.argmax()))
    assert penalized_nehari_defect(result, pen, problem) < 1e-4


# Continuation

@pytest.mark.parametrize("eps_list", [[], [0.4, 0.5], [0.5, 0.5]])
def test_sweep_rejects_bad_ladders(eps_list) -> None:
    with pytest.raises(ParameterError):
        continuation_sweep(make_problem(), eps_list, lambda p: Penalization.disabled(p.eps))


def test_sweep_stops_on_failed_hypothesis() -> None:
    def refuse(problem):
        raise HypothesisError("no case")

    outcome = continuation_sweep(make_problem(), [0.5, 0.4], refuse)
    assert not outcome.complete
    assert outcome.failed_eps == 0.5
    assert outcome.steps == ()
    assert "no case" in outcome.error


@pytest.mark.slow
def test_sweep_resumes_and_reports_steps() -> None:
    problem = make_problem(eps=0.5)
    opts = SolveOptions(residual_tol=1e-6)
    builder = lambda current: build_penalization(2, current)
    seen = []
    first = continuation_sweep(problem, [0.5, 0.4], builder, opts, on_step=seen.append)
    assert first.complete
    assert [step.eps for step in first.steps] == [0.5, 0.4]
    assert [step.eps for step in seen] == [0.5, 0.4]
    assert all(step.pen.measured_kappa is not None for step in first.steps)

    stored = {step.eps: step.result for step in first.steps}
    resumed = continuation_sweep(problem, [0.5, 0.4], builder, opts,
                                 resume=lambda current, pen: stored[current.eps],
                                 diagnose=lambda current, pen, result: current.eps)
    assert resumed.complete
    assert [step.result for step in resumed.steps] == [stored[0.5], stored[0.4]]
    assert [step.report for step in resumed.steps] == [0.5, 0.4]


def test_sweep_carries_subsolution_constant_forward() -> None:
    problem = make_problem(eps=0.5)
    fields = {0.5: gaussian(problem.grid, 0.0, 0.5), 0.4: 1e-3 * gaussian(problem.grid, 0.0, 0.5)}
    measured = {}

    def diagnose(current, pen, result):
        measured[current.eps] = measure_nu(result.field, pen, current, (0.0,))
        return pen.nu

    outcome = continuation_sweep(problem, [0.5, 0.4], lambda current: build_penalization(2, current),
                                 resume=lambda current, pen: _synthetic(fields[current.eps]),
                                 diagnose=diagnose)
    assert outcome.complete
    assert measured[0.4] < measured[0.5]
    assert [step.report for step in outcome.steps] == [measured[0.5], measured[0.5]]
    assert outcome.steps[1].pen.nu == measured[0.5]

"""Tests for identities, concentration metrics, penalization checks and reports."""

import math

import numpy as np
import pytest

from src.diagnostics import (
    ConcentrationMetrics,
    DiagnosticsReport,
    bump,
    comparison_check,
    concentration_metrics,
    critical_mass_bound,
    critical_mass_constant,
    energy_upper_bound_check,
    groundstate_transform_check,
    kinetic_mass_balance,
    mass_identity_check,
    penalized_nehari_defect,
    pohozaev_defect,
    run_diagnostics,
    scaled_mass_on,
    scaling_law_check,
    subsolution_check,
    trend_verdict,
    unpenalization_check,
)
from src.grid import Field, integrate
from src.model import RegionSpec
from src.penalization import Penalization, barrier_geometry, build_barrier, build_penalization, measure_nu
from src.solver import SolveOptions, SolveResult, continuation_sweep, solve_limiting
from src.utils import DiagnosticsError, ParameterError
from tests.conftest import gaussian, make_problem


def _result(field: Field, energy: float = 1.0, *, converged: bool = True, lam=None,
            critical_value=None) -> SolveResult:
    return SolveResult(field, energy, 0.0, 10, converged, critical_value=critical_value, lam=lam)


def test_trend_verdict() -> None:
    assert trend_verdict([4.0, 2.0, 1.0]).passed is True
    assert trend_verdict([4.0, 2.0, 1.0]).ratios == (2.0, 2.0)
    assert trend_verdict([4.0, 2.0, 1.0], min_ratio=3.0).passed is False
    assert trend_verdict([1.0, 2.0, 3.0]).passed is False
    assert trend_verdict([2.0, 1.0]).passed is None
    # below the floor a step passes whatever its ratio
    assert trend_verdict([1e-3, 1e-28, 3e-28], min_ratio=2.0).passed is False
    assert trend_verdict([1e-3, 1e-28, 3e-28], min_ratio=2.0, floor=1e-24).passed is True
    assert trend_verdict([4.0, 3.0, 2.9], min_ratio=2.0, floor=1e-24).passed is False


@pytest.mark.parametrize("dim, value", [(3, math.pi ** 2 / 2.0), (4, 4.0 * math.pi ** 2)])
def test_critical_mass_constant(dim: int, value: float) -> None:
    assert math.isclose(critical_mass_constant(dim), value, rel_tol=1e-14)


def test_critical_mass_constant_needs_three_dimensions() -> None:
    with pytest.raises(ParameterError):
        critical_mass_constant(2)


def test_scaling_law_check() -> None:
    grid = make_problem().grid
    limit = make_problem().limiting()
    one = _result(gaussian(grid), 1.0, lam=1.0)
    four = _result(gaussian(grid), 4.0 ** 1.75, lam=4.0)
    assert scaling_law_check(one, four, 4.0, limit) < 1e-14
    with pytest.raises(DiagnosticsError):
        scaling_law_check(one, _result(gaussian(grid), converged=False, lam=4.0), 4.0, limit)


def test_identities_outside_regime_are_na(problem) -> None:
    v = gaussian(problem.grid)
    assert mass_identity_check(v, 1.0, 1.0, problem) is None
    assert kinetic_mass_balance(v, 1.0, problem) is None
    assert groundstate_transform_check(_result(v), make_problem(p=3.0), (0.0,), 1.0) is None
    assert critical_mass_bound(_result(v), problem) is None


def test_zero_field_defects_raise(problem) -> None:
    zero = Field.zeros(problem.grid)
    with pytest.raises(DiagnosticsError):
        pohozaev_defect(zero, 1.0, problem)
    with pytest.raises(DiagnosticsError):
        penalized_nehari_defect(_result(zero), None, problem)


# Energy upper bound

def test_energy_upper_bound_check() -> None:
    grid = make_problem().grid
    sweep = [(0.5, _result(gaussian(grid), critical_value=1.5)),
             (0.25, _result(gaussian(grid), critical_value=0.525))]
    report = energy_upper_bound_check(sweep, 2.0, 1, tol=0.1)
    assert report.eps == (0.5, 0.25)
    assert report.gaps == pytest.approx((1.0, 0.1))
    assert report.within_tol == (False, True)
    assert report.decreasing is True
    assert report.first_passing_eps == 0.25
    with pytest.raises(DiagnosticsError):
        energy_upper_bound_check([], 2.0, 1)


# Concentration

def test_scaled_mass_on_counts_grid_cells(problem) -> None:
    ones = Field.constant(problem.grid, 1.0)
    # seven nodes lie strictly inside |x| < 0.5 at h = 0.125
    assert math.isclose(scaled_mass_on(ones, RegionSpec(radius=0.5), 0.5), 7 * 0.125 / 0.5)


def test_concentration_metrics_of_gaussian() -> None:
    problem = make_problem(eps=0.5)
    u = gaussian(problem.grid, 0.25, 0.5)
    metrics = concentration_metrics(_result(u, 3.0), problem, rho=1.0, R=2.0)
    assert metrics.a_eps == (0.25,)
    assert metrics.in_lambda
    assert math.isclose(metrics.v_at_a, 2.0 - math.exp(-0.0625))
    assert math.isclose(metrics.scaled_energy, 6.0)
    assert math.isclose(metrics.sup_outside, math.exp(-(1.125 / 0.5) ** 2))
    assert metrics.sup_outer_annulus == metrics.sup_outside
    x = problem.grid.axis()
    ball = np.abs(x - 0.25) <= 0.5
    expected = integrate(u.like(np.where(ball, u.values ** 2, 0.0))) / 0.5
    assert math.isclose(metrics.scaled_mass_in_ball, expected)
    assert metrics.profile_l2_distance is None


# Penalization checks

def test_unpenalization_check() -> None:
    problem = make_problem(eps=0.5)
    pen = build_penalization(2, problem)
    ones = _result(Field.constant(problem.grid, 1.0))
    report = unpenalization_check(ones, pen, problem)
    assert not report.passed
    assert report.max_violation > 0.0
    tiny = _result(1e-6 * gaussian(problem.grid, 0.0, 0.2))
    assert unpenalization_check(tiny, pen, problem).passed
    disabled = unpenalization_check(ones, None, problem)
    assert disabled.passed and disabled.max_violation is None


def test_subsolution_check_preconditions() -> None:
    problem = make_problem(eps=0.2)
    pen = build_penalization(2, problem)
    result = _result(gaussian(problem.grid, 0.0, 0.2))
    with pytest.raises(ParameterError):
        subsolution_check(result, pen, problem, (0.0,), 10.0, 1.5)
    with pytest.raises(DiagnosticsError):
        subsolution_check(result, pen, problem, (0.0,), 10.0, 0.1)
    with pytest.raises(DiagnosticsError):
        subsolution_check(result, Penalization.disabled(0.2), problem, (0.0,), 10.0, 0.1)




def _barrier_setup():
    problem = make_problem(eps=0.25, n=256)
    pen = build_penalization(2, problem)
    geometry = barrier_geometry(problem)
    barrier = build_barrier(pen, problem, geometry.center, geometry.r, geometry.m, 10.0)
    return problem, pen, barrier


def test_comparison_check_below_barrier() -> None:
    problem, _, barrier = _barrier_setup()
    assert comparison_check(_result(0.5 * barrier), barrier, (0.0,), 10.0, problem).violations == 0
    assert comparison_check(_result(barrier), 10.0 * barrier, (0.0,), 10.0, problem).violations == 0


def test_comparison_check_flags_field_above_barrier() -> None:
    problem, _, barrier = _barrier_setup()
    count = comparison_check(_result(barrier), 0.5 * barrier, (0.0,), 10.0, problem)
    assert count.checked > 0
    assert count.violations == count.checked
    assert count.max_excess > 0.0
    count = comparison_check(_result(2.0 * barrier), barrier, (0.0,), 10.0, problem)
    assert count.violations == count.checked


def test_subsolution_check_flags_far_bump() -> None:
    problem, pen, _ = _barrier_setup()
    u = gaussian(problem.grid, 0.0, 0.25)
    measure_nu(u, pen, problem, (0.0,), 10.0)
    clean = subsolution_check(_result(u), pen, problem, (0.0,), 10.0, pen.delta)
    assert clean.checked > 0
    assert clean.violations == 0
    perturbed = u + gaussian(problem.grid, 4.0, 0.3)
    count = subsolution_check(_result(perturbed), pen, problem, (0.0,), 10.0, pen.delta)
    assert count.violations > 0
    assert count.max_excess > 1.0
    # the bump sits outside B(a, R eps) only for small R
    assert subsolution_check(_result(perturbed), pen, problem, (0.0,), 20.0, pen.delta).violations == 0


# Nonexistence obstructions

def test_bump_profile(grid1) -> None:
    phi = bump(grid1, (0.0,), 1.0)
    assert phi.values[32] == 1.0
    assert np.all(phi.values[np.abs(grid1.axis()) >= 1.0] == 0.0)


def test_groundstate_transform_of_zero_field(problem) -> None:
    margin = groundstate_transform_check(_result(Field.zeros(problem.grid)), problem, (0.0,), 1.0)
    assert margin > 0.0


# Report

def _report() -> DiagnosticsReport:
    return DiagnosticsReport(
        eps=0.5,
        lam=1.0,
        residual_rel=1e-9,
        nehari_defect_rel=2e-10,
        concentration=ConcentrationMetrics((0.25,), True, 1.06, 3.2, 0.8, 1e-3, 2e-4),
        unpenalized=True,
        hardy_kappa=0.01,
        notes=["penalization disabled", "solve did not converge"],
    )


def test_report_dict_round_trip() -> None:
    report = _report()
    data = report.to_dict()
    assert data["schema_version"] == 1
    assert data["concentration.a_eps_0"] == 0.25
    assert data["notes"] == "penalization disabled; solve did not converge"
    assert DiagnosticsReport.from_dict(data) == report


def test_report_non_finite_values_become_none() -> None:
    report = DiagnosticsReport(eps=0.5, sup_h_outside=math.inf)
    assert report.to_dict()["sup_h_outside"] is None


def test_report_csv_rows() -> None:
    rows = _report().csv_rows()
    keys = [row[3] for row in rows]
    assert keys == sorted(keys)
    assert "eps" not in keys and "notes" not in keys
    assert all(row[:3] == (1, 0.5, 1.0) for row in rows)
    assert ("nehari_defect_rel", 2e-10) in [(row[3], row[4]) for row in rows]


# Concentration ladder

@pytest.mark.slow
def test_concentration_ladder_end_to_end() -> None:
    problem = make_problem(eps=0.2, n=2048, half_extent=24.0)
    opts = SolveOptions(residual_tol=1e-6)
    limit = solve_limiting(1.0, problem.limiting(), opts)
    assert limit.converged

    def diagnose(current, pen, result):
        return run_diagnostics(current, pen, result, limiting_energy_at_min=limit.energy,
                               residual_tol=opts.residual_tol)

    outcome = continuation_sweep(problem, [0.2, 0.1, 0.05], lambda current: build_penalization(2, current),
                                 opts, diagnose=diagnose)
    assert outcome.complete
    assert all(step.result.converged for step in outcome.steps)
    reports = [step.report for step in outcome.steps]
    last = reports[-1]

    assert abs(last.concentration.a_eps[0]) <= 0.1
    assert abs(last.concentration.v_at_a - 1.0) <= 0.01
    assert abs(last.concentration.scaled_energy - limit.energy) <= 0.1 * limit.energy
    assert last.unpenalized is True
    assert last.unpenalized_residual < 2.0 * opts.residual_tol
    assert last.subsolution_violations == 0
    assert last.comparison_violations == 0

    annulus = [report.concentration.sup_outer_annulus for report in reports]
    assert annulus[0] > annulus[1] > annulus[2]
    sup_h = [report.sup_h_outside for report in reports]
    assert sup_h[0] > sup_h[1] > sup_h[2]
    # the Hardy hypothesis may still fail on the coarsest rung
    assert all(report.hardy_product < 1.0 for report in reports[1:])
    nus = [report.nu for report in reports]
    assert all(b >= a for a, b in zip(nus, nus[1:]))

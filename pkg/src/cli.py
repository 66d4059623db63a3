"""
Command-line experiments.

    validate      regime classification, penalization case and constants
    solve-limit   limiting ground states for one or more lambda
    concentrate   warm-started eps ladder with full diagnostics
    nonexist      nonexistence obstructions along an eps ladder

Every run writes its resolved configuration next to its artifacts. Exit
codes: 0 success, 1 runtime or solver failure, 2 validation refusal.
"""

import argparse
import json
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.table import Table

from .diagnostics import (
    DiagnosticsReport,
    critical_mass_bound,
    critical_mass_constant,
    energy_upper_bound_check,
    groundstate_transform_check,
    limiting_diagnostics,
    peak_point,
    rescaled_profile,
    run_diagnostics,
    scaled_mass_on,
    trend_verdict,
)
from .model import (
    ChoquardProblem,
    LimitingProblem,
    amplitude_exponent,
    concentration_point,
    hls_constants,
    limiting_residual,
    scaling_exponent,
    validate_params,
    vanishing_rate_exponent,
)
from .penalization import Penalization, build_penalization, case_hypotheses
from .run_config import RunConfig, build_grids, build_problem, load_run_config, write_resolved_config
from .solver import (
    SolveResult,
    SweepOutcome,
    SweepStep,
    continuation_sweep,
    rescale_limiting,
    solve_limiting,
)
from .tools import (
    SweepRow,
    SweepTable,
    load_result,
    save_result,
    write_csv,
    write_overlay,
    write_radial_profile,
)
from .utils import get_logger, ChoquardError, GeometryError, RegimeError, ResolutionError

logger = get_logger(__name__)
console = Console()

DIAGNOSTICS_HEADER = ("schema_version", "eps", "lam", "check", "value")


def label(value: float) -> str:
    return f"{value:g}"


def _write_json(path: Path, data: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def _require_solvable(dim: int, alpha: float, p: float) -> None:
    regime = validate_params(dim, alpha, p)
    if not regime.limiting_solvable:
        raise RegimeError(f"limiting problem unsolvable for N={dim}, alpha={alpha}, p={p} "
                          f"({regime.reason.value}; solvable range ({regime.lower:g}, {regime.upper:g}))")


# validate

def cmd_validate(config: RunConfig) -> int:
    dim, alpha, p = config.problem.dim, config.problem.alpha, config.problem.p
    regime = validate_params(dim, alpha, p)
    table = Table(title="Choquard problem")
    table.add_column("quantity")
    table.add_column("value")
    table.add_row("N, alpha, p", f"{dim}, {alpha:g}, {p:g}")
    if regime.limiting_solvable:
        table.add_row("limiting problem", "solvable")
    else:
        table.add_row("limiting problem", f"unsolvable ({regime.reason.value})")
    table.add_row("solvable p range", f"({regime.lower:.6g}, {regime.upper:.6g})")

    constants = hls_constants(dim, alpha)
    table.add_row("A_alpha", f"{constants.a_alpha:.17g}")
    table.add_row("C_alpha", f"{constants.c_alpha:.17g}")
    if p > 1.0:
        table.add_row("scaling exponent theta", f"{scaling_exponent(dim, alpha, p):.17g}")
        table.add_row("amplitude exponent", f"{amplitude_exponent(alpha, p):.17g}")
    if alpha + 2.0 > dim:
        table.add_row("vanishing rate exponent", f"{vanishing_rate_exponent(dim, alpha):.17g}")
    if dim >= 3 and p == 2.0 and math.isclose(alpha, dim - 2.0):
        table.add_row("critical mass bound", f"{critical_mass_constant(dim):.17g}")

    if dim <= 3:
        problem = build_problem(config)
        report = case_hypotheses(problem)
        for check in report.checks:
            verdict = "holds" if check.holds else f"requires {check.failed}"
            table.add_row(f"penalization case {check.case}", verdict)
        table.add_row("selected case", str(report.selected) if report.selected else "none")
    else:
        table.add_row("penalization", "not evaluated (grids support N <= 3)")
    console.print(table)
    logger.info("Validation finished", solvable=regime.limiting_solvable, reason=regime.reason.value)
    return 0 if regime.limiting_solvable else RegimeError.exit_code


# solve-limit

def cmd_solve_limit(config: RunConfig, lams: Sequence[float]) -> int:
    dim, alpha, p = config.problem.dim, config.problem.alpha, config.problem.p
    _require_solvable(dim, alpha, p)
    _, limit_grid = build_grids(config)
    problem = LimitingProblem(dim, alpha, p, limit_grid, config.grid.self_cell,
                              config.solver.strict_boundary, config.grid.boundary_tol)
    out = config.output_directory()
    write_resolved_config(config, out)

    reference: Optional[SolveResult] = None
    rows: List[tuple] = []
    all_converged = True
    for lam in lams:
        result = solve_limiting(lam, problem, config.solver)
        all_converged &= result.converged
        if reference is None:
            reference = result
        report = limiting_diagnostics(result, problem, energy_reference=reference)
        if reference is not result and reference.converged and math.isclose(reference.lam, 1.0):
            try:
                rescaled = rescale_limiting(reference, lam, problem,
                                            lost_fraction_tol=config.solver.lost_fraction_tol)
                report.rescaled_residual = limiting_residual(rescaled, lam, problem).norm() / rescaled.norm()
                report.notes.append("rescaled_residual: residual of the lambda=1 ground state after rescaling")
            except ResolutionError as e:
                report.notes.append(f"rescaled residual unavailable: {e}")
        directory = out / f"limit-{label(lam)}"
        save_result(directory, result)
        _write_json(directory / "diagnostics.json", report.to_dict())
        write_radial_profile(out / f"profile-{label(lam)}.csv", result.field)
        rows.extend(report.csv_rows())
    write_csv(out / "diagnostics.csv", DIAGNOSTICS_HEADER, rows)
    logger.info("Limiting solves written", directory=str(out), count=len(lams), converged=all_converged)
    return 0 if all_converged else 1


# eps ladder

class LadderRunner:
    """Shared machinery for the concentrate and nonexist commands."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out = config.output_directory()
        self.problem = build_problem(config)
        self.fingerprint = config.fingerprint()
        self._profiles: Dict[float, SolveResult] = {}
        self.limiting_energy_at_min: Optional[float] = None

    def step_directory(self, eps: float) -> Path:
        return self.out / f"eps-{label(eps)}-{self.fingerprint}"

    def pen_builder(self, problem: ChoquardProblem) -> Penalization:
        cfg = self.config.penalization
        if not cfg.enabled:
            return Penalization.disabled(problem.eps, cfg.delta)
        return build_penalization(cfg.case, problem, cfg.lam, cfg.delta)

    def limiting_profile(self, lam: float) -> SolveResult:
        if lam not in self._profiles:
            self._profiles[lam] = solve_limiting(lam, self.problem, self.config.solver)
        return self._profiles[lam]

    def prepare(self) -> None:
        """Refuse early on regime or hypothesis failures, then solve the limiting problem at inf_Lambda V."""
        problem = self.problem
        _require_solvable(problem.dim, problem.alpha, problem.p)
        self.pen_builder(problem)
        write_resolved_config(self.config, self.out)
        center = concentration_point(problem)
        v_min = problem.params.potential.at(center)
        if not v_min > 0.0:
            raise GeometryError(f"V vanishes at {center} inside Lambda; the limiting problem needs inf_Lambda V > 0")
        reference = self.limiting_profile(v_min)
        save_result(self.out / "limit-min", reference)
        self.limiting_energy_at_min = reference.energy

    def resume(self, problem: ChoquardProblem, pen: Penalization) -> Optional[SolveResult]:
        return load_result(self.step_directory(problem.eps))

    def diagnose(self, problem: ChoquardProblem, pen: Penalization, result: SolveResult) -> DiagnosticsReport:
        diag = self.config.diagnostics
        peak = peak_point(result.field)
        v_peak = problem.params.potential.at(peak)
        profile = self.limiting_profile(v_peak) if v_peak > 0.0 else None
        report = run_diagnostics(
            problem, pen, result,
            limiting_energy_at_min=self.limiting_energy_at_min,
            limiting_profile=profile.field if profile is not None else None,
            rho=diag.rho,
            R=diag.R,
            residual_tol=self.config.solver.residual_tol,
            slack_abs=diag.slack_abs,
            slack_rel=diag.slack_rel,
        )
        if profile is None:
            report.notes.append(f"no limiting profile: V(a_eps) = {v_peak:g}")
            return report
        try:
            rescaled = rescaled_profile(result.field, peak, problem.eps, profile.field.grid)
            write_overlay(self.out / f"overlay-{label(problem.eps)}.csv", rescaled, profile.field)
        except ChoquardError as e:
            report.notes.append(f"overlay unavailable: {e}")
        return report

    def on_step(self, step: SweepStep) -> None:
        directory = self.step_directory(step.eps)
        if load_result(directory) is None:
            save_result(directory, step.result)
        if step.report is not None:
            _write_json(directory / "diagnostics.json", step.report.to_dict())

    def run(self, diagnose: bool = True) -> SweepOutcome:
        self.prepare()
        return continuation_sweep(
            self.problem,
            self.config.eps_ladder,
            self.pen_builder,
            self.config.solver,
            hardy_trials=self.config.penalization.trial_count,
            diagnose=self.diagnose if diagnose else None,
            resume=self.resume,
            on_step=self.on_step,
        )


def sweep_table(outcome: SweepOutcome) -> SweepTable:
    table = SweepTable()
    for step in outcome.steps:
        report: DiagnosticsReport = step.report
        metrics = report.concentration
        table.append(SweepRow(
            eps=step.eps,
            energy=step.result.energy,
            scaled_energy=metrics.scaled_energy,
            a_eps=metrics.a_eps,
            v_at_a=metrics.v_at_a,
            scaled_mass=metrics.scaled_mass_in_ball,
            sup_outside=metrics.sup_outside,
            sup_outer_annulus=metrics.sup_outer_annulus,
            unpenalized=report.unpenalized,
            hardy_kappa=report.hardy_kappa,
            hardy_product=report.hardy_product,
            sup_h_outside=report.sup_h_outside,
            residual=step.result.residual_rel,
            iterations=step.result.iterations,
            converged=step.result.converged,
        ))
    return table


def _failure_fields(outcome: SweepOutcome) -> Dict[str, Any]:
    return {"complete": outcome.complete, "failed_eps": outcome.failed_eps, "error": outcome.error}


# concentrate

def cmd_concentrate(config: RunConfig) -> int:
    runner = LadderRunner(config)
    outcome = runner.run()
    out = runner.out
    table = sweep_table(outcome)
    table.write(out / "sweep.csv")
    rows: List[tuple] = []
    for step in outcome.steps:
        rows.extend(step.report.csv_rows())
    write_csv(out / "diagnostics.csv", DIAGNOSTICS_HEADER, rows)

    summary: Dict[str, Any] = _failure_fields(outcome)
    summary["limiting_energy_at_min"] = runner.limiting_energy_at_min
    if outcome.steps:
        bound = energy_upper_bound_check([(s.eps, s.result) for s in outcome.steps],
                                         runner.limiting_energy_at_min, runner.problem.dim,
                                         config.diagnostics.upper_tol)
        summary["upper_bound"] = {
            "gaps": list(bound.gaps),
            "within_tol": list(bound.within_tol),
            "decreasing": bound.decreasing,
            "first_passing_eps": bound.first_passing_eps,
        }
        annulus = trend_verdict(table.column("sup_outer_annulus"))
        summary["sup_outer_annulus_trend"] = {"passed": annulus.passed, "series": list(annulus.series)}
        sup_h = table.column("sup_h_outside")
        if all(h is not None for h in sup_h):
            h_trend = trend_verdict(sup_h)
            summary["sup_h_trend"] = {"passed": h_trend.passed, "series": list(h_trend.series)}
        unpenalized = [s.eps for s in outcome.steps if s.report.unpenalized]
        summary["first_unpenalized_eps"] = unpenalized[0] if unpenalized else None
    _write_json(out / "summary.json", summary)
    logger.info("Concentration sweep written", directory=str(out), **_failure_fields(outcome))
    return 0 if outcome.complete else 1


# nonexist

def probe_centers(config: RunConfig, dim: int) -> List[tuple]:
    """Deterministic bump centers inside the probe region."""
    region = config.nonexist.probe_region
    lo, hi = region.bounds(dim)
    rng = np.random.default_rng(config.solver.seed)
    centers = [region.center_point(dim)]
    attempts = 0
    while len(centers) < config.nonexist.probe_count and attempts < 100 * config.nonexist.probe_count:
        point = tuple(float(c) for c in rng.uniform(lo, hi))
        if region.contains(point):
            centers.append(point)
        attempts += 1
    return centers


def cmd_nonexist(config: RunConfig) -> int:
    runner = LadderRunner(config)
    outcome = runner.run(diagnose=False)
    problem0 = runner.problem
    out = runner.out
    centers = probe_centers(config, problem0.dim)
    transform_applies = problem0.p == 2.0
    if not transform_applies:
        console.print("ground-state transform check n/a (p != 2)")

    rows = []
    masses = []
    for step in outcome.steps:
        mass = scaled_mass_on(step.result.field, config.nonexist.probe_region, step.eps)
        masses.append(mass)
        margins = [groundstate_transform_check(step.result, step.problem, c, config.nonexist.probe_radius)
                   for c in centers] if transform_applies else []
        critical = critical_mass_bound(step.result, step.problem)
        rows.append((
            step.eps,
            mass,
            min(margins) if margins else None,
            critical.scaled_mass if critical else None,
            critical.bound if critical else None,
            critical.satisfied if critical else None,
        ))
    write_csv(out / "nonexist.csv",
              ("eps", "scaled_mass_probe", "min_transform_margin", "scaled_mass_total",
               "critical_mass_bound", "critical_mass_satisfied"), rows)

    verdict = trend_verdict(masses, config.nonexist.min_ratio, config.nonexist.mass_floor)
    summary = _failure_fields(outcome)
    summary["probe_mass_trend"] = {"passed": verdict.passed, "ratios": list(verdict.ratios),
                                   "series": list(verdict.series), "min_ratio": config.nonexist.min_ratio,
                                   "mass_floor": config.nonexist.mass_floor}
    summary["transform_check"] = "applies" if transform_applies else "n/a (p != 2)"
    if problem0.dim >= 3 and critical_mass_bound_applies(problem0):
        summary["critical_mass_bound"] = critical_mass_constant(problem0.dim)
    else:
        summary["critical_mass_bound"] = "n/a (needs p = 2, alpha = N - 2, N >= 3)"
    _write_json(out / "nonexist-summary.json", summary)
    logger.info("Nonexistence report written", directory=str(out), trend_passed=verdict.passed,
                **_failure_fields(outcome))
    return 0 if outcome.complete else 1


def critical_mass_bound_applies(problem: ChoquardProblem) -> bool:
    return problem.p == 2.0 and math.isclose(problem.alpha, problem.dim - 2.0)


# Entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or resolved JSON configuration file")
    common.add_argument("--out", help="output directory (default: $CHOQUARD_OUTPUT_ROOT/<label>)")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a configuration value, e.g. problem.alpha=0.5 (repeatable)")
    common.add_argument("--strict", action="store_true", help="turn boundary and hypothesis warnings into errors")
    common.add_argument("--seed", type=int, help="seed for randomized trial fields")

    parser = argparse.ArgumentParser(prog="choquard", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="classify the regime and show constants")
    solve = sub.add_parser("solve-limit", parents=[common], help="solve the limiting problem")
    solve.add_argument("--lam", type=float, action="append", help="lambda value (repeatable, default 1)")
    sub.add_parser("concentrate", parents=[common], help="run the eps ladder with diagnostics")
    sub.add_parser("nonexist", parents=[common], help="nonexistence obstructions along the eps ladder")
    return parser


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "validate": lambda config, args: cmd_validate(config),
    "solve-limit": lambda config, args: cmd_solve_limit(config, args.lam or [1.0]),
    "concentrate": lambda config, args: cmd_concentrate(config),
    "nonexist": lambda config, args: cmd_nonexist(config),
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_run_config(args.config, args.override, strict=args.strict,
                                 seed=args.seed, output_directory=args.out)
        return COMMANDS[args.command](config, args)
    except ChoquardError as e:
        logger.error("Command failed", command=args.command, error=str(e), exit_code=e.exit_code)
        console.print(f"[red]error:[/red] {e}")
        return e.exit_code
    except Exception as e:
        logger.exception("Unhandled error", command=args.command, error=str(e))
        return 1

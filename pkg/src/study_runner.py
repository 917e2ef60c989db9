import logging
import math
from dataclasses import dataclass
from multiprocessing import Pool
from typing import Optional

import pandas as pd

from base_nonlinearity import ModelDomainError
from base_scheme import BaseScheme, DivergenceError, IterationStatus, SchemeConfig
from benchmark_utils import ExactSolution, StudyResult, contraction_rate, spacetime_error
from infra.fe_problem import FeProblem
from infra.fields import Field, FieldP0, FieldP1
from infra.mesh import MeshError, build_mesh
from initial_conditions import barenblatt_params, initial_density, initial_substrate
from model_registry import build_model
from model_system import ModelSystem
from run_config import RunConfig
from scheme_wrapper import create_scheme
from solver_utils import log_event
from splitting import compute_h_field
from time_stepper import RunRecord, TimeGrid, regularized_phi, run

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["scheme", "param", "tau", "h", "avg_iterations", "failures", "completed"]
SUMMARY_COLUMNS = [
    "run_id",
    "scheme",
    "M_or_L",
    "gamma",
    "tau",
    "h",
    "avg_iterations",
    "failed_steps",
    "wall_time_seconds",
]


@dataclass
class RunSetup:
    """
    Everything a single run needs, built from a configuration
    """

    config: RunConfig
    model: ModelSystem
    problem: FeProblem
    grid: TimeGrid
    scheme: BaseScheme
    u0: FieldP0
    v0: Field
    h: float

    @property
    def run_id(self) -> str:
        return f"{self.config.name}-{self.scheme.scheme_type()}-tau{self.grid.tau:.6g}-h{self.h:.6g}"


def build_setup(
    config: RunConfig,
    tau: Optional[float] = None,
    h: Optional[float] = None,
    scheme_cfg: Optional[SchemeConfig] = None,
) -> RunSetup:
    """
    Build model, mesh, problem, time grid, scheme and initial data
    :param config: validated configuration
    :param tau: time step replacing time.tau
    :param h: mesh size replacing mesh.h
    :param scheme_cfg: scheme replacing the configured one
    """
    h = float(config.mesh["h"] if h is None else h)
    tau = float(config.time["tau"] if tau is None else tau)
    model = build_model(config.preset, config.model_params)
    mesh = build_mesh(config.mesh["domain"], h)
    boundary = config.boundary_spec()
    boundary.validate_segments(mesh)
    problem = FeProblem(mesh, boundary, config.mesh["solver"])
    grid = TimeGrid(float(config.time["t_start"]), float(config.time["t_end"]), tau)
    scheme = create_scheme(scheme_cfg or config.scheme)
    u0 = initial_density(config.initial_condition, config.model_params, problem)
    v0 = initial_substrate(config.initial_condition, model, problem)
    return RunSetup(config, model, problem, grid, scheme, u0, v0, h)


def single_run(setup: RunSetup, keep_fields: bool = False) -> RunRecord:
    config = setup.config
    return run(
        setup.model,
        setup.problem,
        setup.grid,
        setup.scheme,
        setup.u0,
        setup.v0,
        snapshot_times=config.output.get("snapshot_times") or (),
        run_id=setup.run_id,
        keep_fields=keep_fields,
        config=config.to_dict(),
    )


def summary_row(setup: RunSetup, record: RunRecord) -> dict:
    scheme = setup.scheme.config
    return {
        "run_id": record.run_id,
        "scheme": scheme.type,
        "M_or_L": scheme.parameter(),
        "gamma": scheme.gamma,
        "tau": setup.grid.tau,
        "h": setup.h,
        "avg_iterations": record.average_iterations,
        "failed_steps": record.failed_steps,
        "wall_time_seconds": record.wall_time,
    }


def exact_solution_for(config: RunConfig) -> ExactSolution:
    """
    Analytic solution of the configured problem, available for the pme preset
    started from a Barenblatt profile
    """
    if config.preset != "pme" or config.initial_condition["type"] != "barenblatt":
        raise ValueError(
            f"No exact solution for preset '{config.preset}' with initial condition "
            f"'{config.initial_condition['type']}'"
        )
    bounds = build_mesh(config.mesh["domain"], float(config.mesh["h"])).bounds
    p = barenblatt_params(config.initial_condition, config.model_params, bounds)
    if p.beta == 0:
        return ExactSolution.barenblatt(p)
    return ExactSolution.modified_pme(p)


def time_convergence(config: RunConfig) -> tuple[StudyResult, list]:
    """
    One run per time step, the space-time error of each against the exact
    solution, and the fitted log-log slope
    :return: study result (tau, error) and the run records
    """
    exact = exact_solution_for(config)
    rows, records = [], []
    for tau in config.study_taus():
        setup = build_setup(config, tau=tau)
        record = single_run(setup, keep_fields=True)
        records.append((setup, record))
        if record.failed:
            logger.error(f"{record.run_id}: excluded from the convergence fit, {record.failure_reason}")
            rows.append((tau, math.nan))
            continue
        error = spacetime_error(record, exact)
        logger.info(f"{record.run_id}: space-time error {error:.6e}")
        rows.append((tau, error))
    result = StudyResult.fit("tau", "error", rows)
    log_event(config.name, "study_finished", {"study": "time_convergence", "slope": result.slope})
    return result, records


def contraction_errors(
    setup: RunSetup, reference_tol: float = 1e-20, iterations: int = 3
) -> list:
    """
    Norms of the first iterates of the first time step against that step's
    solution, computed beforehand with a tight tolerance
    :param setup: run setup, its scheme is both the reference and the measured scheme
    :param reference_tol: stopping tolerance of the reference solve
    :param iterations: number of measured iterations after the initial guess
    :return: iterations + 1 error norms, starting from the initial guess
    """
    model, problem, grid = setup.model, setup.problem, setup.grid
    scheme, tau = setup.scheme, grid.tau
    _, phi_breve = regularized_phi(model, problem, grid, setup.u0)
    u_ref, w_ref, trace = scheme.solve_nonlinear_step(
        problem, model, phi_breve, setup.u0, setup.v0, tau, tol=reference_tol
    )
    if trace.status == IterationStatus.DIVERGED:
        raise DivergenceError(f"{setup.run_id}: reference solve diverged")
    if not trace.converged:
        logger.warning(
            f"{setup.run_id}: reference stopped at {trace.final_error:.3e} after {trace.iterations} iterations"
        )

    h_field = compute_h_field(model, setup.v0, tau)
    errors = []

    def record_error(i: int, u: FieldP0, w: FieldP1):
        e_u = FieldP0(u.mesh, u.values - u_ref.values)
        e_w = FieldP1(w.mesh, w.values - w_ref.values)
        errors.append(scheme.error_norm(h_field, e_u, e_w, phi_breve.phi_m, tau))

    scheme.solve_nonlinear_step(
        problem,
        model,
        phi_breve,
        setup.u0,
        setup.v0,
        tau,
        on_iterate=record_error,
        tol=0.0,
        max_iter=iterations,
    )
    return errors


def contraction_study(config: RunConfig) -> tuple[StudyResult, pd.DataFrame]:
    """
    Contraction rate of the configured scheme for every time step of the study
    :return: study result (tau, rate) and the raw error norms per iteration
    """
    reference_tol = float(config.study_params.get("reference_tol", 1e-20))
    iterations = int(config.study_params.get("contraction_iterations", 3))
    rows, raw = [], []
    for tau in config.study_taus():
        setup = build_setup(config, tau=tau)
        try:
            errors = contraction_errors(setup, reference_tol, iterations)
            rate = contraction_rate(errors)
        except (ValueError, RuntimeError) as e:
            logger.error(f"{setup.run_id}: contraction rate unavailable, {e}")
            rows.append((tau, math.nan))
            continue
        logger.info(f"{setup.run_id}: contraction rate {rate:.6f}")
        rows.append((tau, rate))
        raw.extend({"tau": tau, "iteration": i, "error_norm": e} for i, e in enumerate(errors))
    result = StudyResult.fit("tau", "rate", rows)
    log_event(config.name, "study_finished", {"study": "contraction", "slope": result.slope})
    return result, pd.DataFrame(raw, columns=["tau", "iteration", "error_norm"])


def _sweep_point(job: tuple) -> tuple[dict, Optional[dict]]:
    config, scheme_cfg, tau, h = job
    row = {
        "scheme": scheme_cfg.type,
        "param": scheme_cfg.parameter(),
        "tau": tau,
        "h": h,
        "avg_iterations": math.nan,
        "failures": 1,
        "completed": False,
    }
    try:
        setup = build_setup(config, tau=tau, h=h, scheme_cfg=scheme_cfg)
        record = single_run(setup)
    except (ModelDomainError, MeshError, ValueError, RuntimeError) as e:
        logger.error(f"Sweep point {scheme_cfg.type} tau={tau} h={h} failed: {e}")
        return row, None
    if record.failed:
        logger.error(f"{record.run_id}: {record.failure_reason}")
    row.update(
        avg_iterations=record.average_iterations,
        failures=record.failed_steps,
        completed=not record.failed,
    )
    return row, summary_row(setup, record)


def sweep(config: RunConfig, workers: Optional[int] = None) -> tuple[pd.DataFrame, pd.DataFrame]:
    """
    Run every (scheme, tau, h) point of the study grid to the final time
    :param config: configuration with study_params.schemes, taus and hs
    :param workers: worker processes, study_params.workers if omitted
    :return: sweep table in grid order and the per-run summary
    """
    workers = int(workers or config.study_params.get("workers", 1))
    jobs = [
        (config, scheme_cfg, tau, h)
        for scheme_cfg in config.study_schemes()
        for tau in config.study_taus()
        for h in config.study_hs()
    ]
    logger.info(f"Sweep '{config.name}': {len(jobs)} points on {workers} worker(s)")
    if workers > 1:
        with Pool(processes=workers) as pool:
            results = pool.map(_sweep_point, jobs)
    else:
        results = [_sweep_point(job) for job in jobs]

    rows = [row for row, _ in results]
    summaries = [summary for _, summary in results if summary is not None]
    failed = sum(1 for row in rows if not row["completed"])
    log_event(config.name, "study_finished", {"study": "sweep", "points": len(rows), "failed_points": failed})
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS), pd.DataFrame(summaries, columns=SUMMARY_COLUMNS)


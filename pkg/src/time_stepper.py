import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from base_nonlinearity import BaseNonlinearity, ModelDomainError, regularize
from base_scheme import (
    BaseScheme,
    DivergenceError,
    IterationStatus,
    IterationTrace,
    NonConvergenceError,
)
from infra.assembly import SparseSpd, assemble_stiffness_p1
from infra.fe_problem import FeProblem
from infra.fields import Field, FieldP0, FieldP1
from infra.linear_solver import solve_spd
from model_system import ModelSystem, compute_u_breve, initial_phi_sup
from solver_utils import log_event
from splitting import initial_w_guess

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-3
POSITIVITY_SLACK = 1e-10


class InvariantViolationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.t_end > self.t_start:
            raise ValueError(
                f"t_end must exceed t_start, got [{self.t_start}, {self.t_end}]"
            )

    @property
    def n_steps(self) -> int:
        ratio = (self.t_end - self.t_start) / self.tau
        nearest = round(ratio)
        if nearest >= 1 and abs(ratio - nearest) <= 1e-9 * ratio:
            return int(nearest)
        return math.ceil(ratio)

    def is_exact(self) -> bool:
        ratio = (self.t_end - self.t_start) / self.tau
        return abs(ratio - round(ratio)) <= 1e-9 * ratio

    def time(self, n: int) -> float:
        return self.t_start + n * self.tau

    @property
    def t_final(self) -> float:
        return self.time(self.n_steps)

    def step_index(self, t: float) -> int:
        return int(min(max(round((t - self.t_start) / self.tau), 0), self.n_steps))


@dataclass
class StepRecord:
    index: int
    time: float
    trace: Optional[IterationTrace]
    u: Optional[FieldP0] = None
    w: Optional[FieldP1] = None
    v: Optional[Field] = None


@dataclass
class Snapshot:
    time: float
    step: int
    u: FieldP0
    w: FieldP1
    v: Field


@dataclass
class RunRecord:
    run_id: str
    config: dict
    u_breve: float
    tau: float
    initial: Optional[StepRecord] = None
    steps: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    failed: bool = False
    failure_reason: Optional[str] = None
    wall_time: float = 0.0

    @property
    def failed_steps(self) -> int:
        return sum(1 for s in self.steps if not s.trace.converged)

    @property
    def converged_steps(self) -> int:
        return sum(1 for s in self.steps if s.trace.converged)

    @property
    def average_iterations(self) -> float:
        counts = [s.trace.iterations for s in self.steps if s.trace.converged]
        return float(np.mean(counts)) if counts else math.nan

    @property
    def last_status(self) -> Optional[IterationStatus]:
        return self.steps[-1].trace.status if self.steps else None

    def raise_for_failure(self):
        if not self.failed:
            return
        if self.last_status == IterationStatus.DIVERGED:
            raise DivergenceError(f"{self.run_id}: {self.failure_reason}")
        if self.last_status == IterationStatus.MAX_ITER:
            raise NonConvergenceError(f"{self.run_id}: {self.failure_reason}")
        raise InvariantViolationError(f"{self.run_id}: {self.failure_reason}")

    def trace_frame(self) -> pd.DataFrame:
        rows = [
            {
                "run_id": self.run_id,
                "time_step": s.index,
                "iteration": i + 1,
                "error": error,
                "converged": s.trace.converged,
            }
            for s in self.steps
            for i, error in enumerate(s.trace.errors)
        ]
        columns = ["run_id", "time_step", "iteration", "error", "converged"]
        return pd.DataFrame(rows, columns=columns)


def update_v_pde(
    problem: FeProblem, model: ModelSystem, u_n: FieldP0, v_prev: FieldP1, tau: float
) -> FieldP1:
    """
    Solve (M + τK_D) v = τG + M v_prev with D(u_n) per cell and G_j = ∫ g(u_n, v_prev) φ_j
    """
    if model.mu != 1:
        raise ValueError("The substrate equation is only solved for mu = 1")
    if model.g_M > 0 and tau >= 1.0 / model.g_M:
        raise ModelDomainError(f"Time step {tau} violates tau < 1/g_M")
    mesh = problem.mesh
    stiffness = assemble_stiffness_p1(
        mesh, model.diffusivity(u_n.values), free=problem.v_free
    )
    mass = problem.mass.full
    system = SparseSpd((mass + tau * stiffness.full).tocsr(), problem.v_free)

    bary, q_weights = mesh.quadrature()
    reaction = model.reaction(u_n.values[:, None], v_prev.at_quadrature())
    local = ((reaction * q_weights) @ bary) * mesh.volumes[:, None]
    load = np.bincount(
        mesh.cells.ravel(), weights=local.ravel(), minlength=mesh.n_vertices
    )
    rhs = tau * load + mass @ v_prev.values

    fixed = problem.v_fixed_values()
    free_values = solve_spd(
        system, system.restrict(rhs) - system.lift(fixed), problem.solver
    )
    return FieldP1(
        mesh,
        system.expand(free_values, fixed),
        dirichlet_mask=problem.v_mask(),
        boundary_values=fixed,
    )


def update_v_ode(
    model: ModelSystem, u_n: FieldP0, v_prev: FieldP0, tau: float
) -> FieldP0:
    if model.mu != 0:
        raise ValueError("The pointwise substrate update is only used for mu = 0")
    if model.g_M > 0 and tau >= 1.0 / model.g_M:
        raise ModelDomainError(f"Time step {tau} violates tau < 1/g_M")
    values = v_prev.values + tau * model.reaction(u_n.values, v_prev.values)
    return FieldP0(u_n.mesh, values)


def _update_v(
    problem: FeProblem, model: ModelSystem, u_n: FieldP0, v_prev: Field, tau: float
) -> Field:
    if model.mu == 1:
        return update_v_pde(problem, model, u_n, v_prev, tau)
    return update_v_ode(model, u_n, v_prev, tau)


def _check_invariants(model: ModelSystem, u: FieldP0, v: Field, u_breve: float):
    if np.any(u.values < 0):
        raise InvariantViolationError(f"Negative density {float(u.values.min())}")
    if float(u.values.max()) > u_breve + BOUND_SLACK:
        raise InvariantViolationError(
            f"Density {float(u.values.max())} exceeds the bound {u_breve}"
        )
    if model.has_substrate and float(np.min(v.values)) < -POSITIVITY_SLACK:
        raise InvariantViolationError(f"Negative substrate {float(np.min(v.values))}")


def regularized_phi(
    model: ModelSystem, problem: FeProblem, grid: TimeGrid, u0: FieldP0
) -> tuple[float, BaseNonlinearity]:
    """
    :return: the density bound ŭ of the run and Φ regularized above it
    """
    mesh = problem.mesh
    u0_sup = float(u0.values.max())
    u_breve = compute_u_breve(
        model,
        u0_sup,
        initial_phi_sup(model, u0_sup),
        mesh.domain_diameter,
        mesh.dim,
        grid.t_final - grid.t_start,
        grid.tau,
    )
    phi_breve = regularize(model.phi, u_breve) if u_breve > 0 else model.phi
    return u_breve, phi_breve


def run(
    model: ModelSystem,
    problem: FeProblem,
    grid: TimeGrid,
    scheme: BaseScheme,
    u0: FieldP0,
    v0: Field,
    snapshot_times: Iterable[float] = (),
    run_id: str = "run",
    keep_fields: bool = False,
    config: Optional[dict] = None,
) -> RunRecord:
    """
    Semi-implicit time loop: the density step is solved from (u_{n-1}, v_{n-1}),
    then the substrate is advanced with the new density
    :param model: model system
    :param problem: discretisation, carries the boundary spec
    :param grid: uniform time grid
    :param scheme: linearisation scheme
    :param u0: initial density (P0)
    :param v0: initial substrate, P1 when mu = 1 and P0 otherwise
    :param snapshot_times: times at which fields are stored
    :param run_id: identifier used in traces and events
    :param keep_fields: store the fields of every step
    :param config: configuration echo stored with the record
    :return: record of traces, snapshots and failure status
    """
    tau = grid.tau
    if tau >= model.tau_disc():
        raise ModelDomainError(
            f"Time step {tau} violates tau < tau_disc = {model.tau_disc()}"
        )
    if grid.n_steps > 0 and not grid.is_exact():
        logger.warning(
            f"Interval is not a multiple of tau={tau}; last step ends at {grid.t_final}"
        )
    u_breve, phi_breve = regularized_phi(model, problem, grid, u0)
    record = RunRecord(run_id=run_id, config=dict(config or {}), u_breve=u_breve, tau=tau)
    snapshot_steps = {grid.step_index(t) for t in snapshot_times}
    policy = scheme.config.on_nonconvergence

    u, v = u0, v0
    w = None
    started = time.perf_counter()
    if keep_fields or 0 in snapshot_steps:
        w0 = initial_w_guess(problem, phi_breve, u0)
        if keep_fields:
            record.initial = StepRecord(0, grid.t_start, None, u0, w0, v0)
        if 0 in snapshot_steps:
            record.snapshots.append(Snapshot(grid.t_start, 0, u0, w0, v0))

    log_event(run_id, "run_started", {"u_breve": u_breve, "steps": grid.n_steps})
    for n in range(1, grid.n_steps + 1):
        t = grid.time(n)
        u_new, w, trace = scheme.solve_nonlinear_step(
            problem, model, phi_breve, u, v, tau, w_guess=w
        )
        step = StepRecord(n, t, trace)
        record.steps.append(step)
        if trace.status == IterationStatus.DIVERGED:
            record.failed = True
            record.failure_reason = f"diverged at step {n} (t={t})"
            break
        if not trace.converged:
            logger.warning(
                f"{run_id}: step {n} not converged after {trace.iterations} iterations"
            )
            if policy == "abort":
                record.failed = True
                record.failure_reason = f"not converged at step {n} (t={t})"
                break
        v_new = _update_v(problem, model, u_new, v, tau)
        if trace.converged:
            try:
                _check_invariants(model, u_new, v_new, u_breve)
            except InvariantViolationError as e:
                record.failed = True
                record.failure_reason = f"step {n}: {e}"
                break
        u, v = u_new, v_new
        if keep_fields:
            step.u, step.w, step.v = u, w, v
        if n in snapshot_steps:
            record.snapshots.append(Snapshot(t, n, u, w, v))
        log_event(
            run_id,
            "step",
            {
                "step": n,
                "t": t,
                "iterations": trace.iterations,
                "error": trace.final_error,
                "status": trace.status.value,
            },
        )

    record.wall_time = time.perf_counter() - started
    if record.failed:
        logger.error(f"{run_id}: run failed, {record.failure_reason}")
        log_event(run_id, "run_failed", {"reason": record.failure_reason})
    log_event(
        run_id,
        "run_finished",
        {
            "failed": record.failed,
            "average_iterations": record.average_iterations,
            "failed_steps": record.failed_steps,
            "wall_time_seconds": record.wall_time,
        },
    )
    return record

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from base_nonlinearity import BaseNonlinearity, ModelDomainError
from infra.fe_problem import FeProblem
from infra.fields import Field, FieldP0, FieldP1, gradient_norm_squared
from infra.linear_solver import LinearSolverError
from model_system import ModelSystem
from splitting import (
    clip_positive,
    compute_h_field,
    initial_w_guess,
    linear_iteration,
    stopping_error,
)

logger = logging.getLogger(__name__)

SCHEME_TYPES = ("l", "m", "newton")
FAILURE_POLICIES = ("abort", "continue")


class NonConvergenceError(RuntimeError):
    pass


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    """
    Linearisation choice and its stopping parameters. Newton is the M-scheme
    with M = m_reg.
    """

    type: str = "m"
    L: Optional[float] = None
    M: Optional[float] = None
    gamma: Optional[float] = None
    m_reg: float = 1e-7
    tol: float = 1e-5
    max_iter: int = 500
    divergence_threshold: float = 1e10
    on_nonconvergence: str = "abort"

    def __post_init__(self):
        if self.type not in SCHEME_TYPES:
            raise ValueError(f"Unknown scheme type: {self.type}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if not self.divergence_threshold > 0:
            raise ValueError("divergence_threshold must be positive")
        if self.on_nonconvergence not in FAILURE_POLICIES:
            raise ValueError(f"Unknown failure policy: {self.on_nonconvergence}")
        if self.type == "l" and not (self.L is not None and self.L > 0):
            raise ValueError(f"L-scheme requires L > 0, got {self.L}")
        if self.type == "m" and not (self.M is not None and self.M > 0):
            raise ValueError(f"M-scheme requires M > 0, got {self.M}")
        if self.type == "newton" and not self.m_reg > 0:
            raise ValueError(f"m_reg must be positive, got {self.m_reg}")
        if self.gamma is not None and not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    def parameter(self) -> float:
        """
        :return: the stabilisation constant of the scheme (L, M or m_reg)
        """
        return {"l": self.L, "m": self.M, "newton": self.m_reg}[self.type]


class IterationStatus(Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    DIVERGED = "diverged"


@dataclass
class IterationTrace:
    errors: list = field(default_factory=list)
    status: Optional[IterationStatus] = None

    @property
    def iterations(self) -> int:
        return len(self.errors)

    @property
    def converged(self) -> bool:
        return self.status == IterationStatus.CONVERGED

    @property
    def contraction_estimates(self) -> list:
        return [
            b / a if a > 0 else math.inf for a, b in zip(self.errors, self.errors[1:])
        ]

    @property
    def final_error(self) -> float:
        return self.errors[-1] if self.errors else math.nan


IterationObserver = Callable[[int, FieldP0, FieldP1], None]


class BaseScheme(ABC):
    def __init__(self, config: SchemeConfig):
        self.__config = config

    @property
    def config(self) -> SchemeConfig:
        """
        :return: scheme configuration
        """
        return self.__config

    def scheme_type(self) -> str:
        return self.config.type

    @abstractmethod
    def l_factor_field(
        self, phi_breve: BaseNonlinearity, u_prev: FieldP0, tau: float
    ) -> FieldP0:
        """
        Linearisation factor L on every cell, strictly positive
        :param phi_breve: regularized nonlinearity
        :param u_prev: previous iterate
        :param tau: time step
        """
        raise NotImplementedError()

    @abstractmethod
    def norm_gradient_weight(self, phi_m: float, tau: float) -> float:
        """
        :return: weight of τ‖∇e_w‖² in the contraction norm of the scheme
        """
        raise NotImplementedError()

    def error_norm(
        self, h_field: FieldP0, e_u: FieldP0, e_w: FieldP1, phi_m: float, tau: float
    ) -> float:
        """
        Norm of an iteration error pair in which the scheme contracts
        """
        mesh = e_u.mesh
        density = float(np.sum(h_field.values * e_u.values**2 * mesh.volumes))
        diffusion = self.norm_gradient_weight(phi_m, tau) * tau * gradient_norm_squared(e_w)
        return math.sqrt(density + diffusion)

    def solve_nonlinear_step(
        self,
        problem: FeProblem,
        model: ModelSystem,
        phi_breve: BaseNonlinearity,
        u_prev_time: FieldP0,
        v_prev_time: Field,
        tau: float,
        w_guess: Optional[FieldP1] = None,
        on_iterate: Optional[IterationObserver] = None,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
    ) -> tuple[FieldP0, FieldP1, IterationTrace]:
        """
        Iterate the linearisation from u_prev_time until the stopping functional
        drops below tol, max_iter is reached, or the iteration blows up
        :param w_guess: starting w, the projection of Φ̆(u_prev_time) if omitted
        :param on_iterate: called with (i, u_i, w_i), starting with the initial guess at i = 0
        :param tol: overrides the configured tolerance
        :param max_iter: overrides the configured iteration cap
        :return: last iterate and its trace
        """
        config = self.config
        tol = config.tol if tol is None else tol
        max_iter = config.max_iter if max_iter is None else max_iter
        h_field = compute_h_field(model, v_prev_time, tau)
        u = u_prev_time
        w = w_guess if w_guess is not None else initial_w_guess(problem, phi_breve, u)
        trace = IterationTrace()
        if on_iterate:
            on_iterate(0, u, w)

        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(1, max_iter + 1):
                try:
                    L_field = self.l_factor_field(phi_breve, u, tau)
                    u_tilde, w_new = linear_iteration(
                        problem, h_field, u_prev_time, u, L_field, phi_breve, tau
                    )
                except (LinearSolverError, ModelDomainError) as e:
                    logger.debug(f"Iteration {i} failed: {e}")
                    trace.errors.append(math.nan)
                    trace.status = IterationStatus.DIVERGED
                    break
                u_new = clip_positive(u_tilde)
                error = stopping_error(u_new, u, w_new, w, L_field, tau)
                trace.errors.append(error)
                u, w = u_new, w_new
                if on_iterate:
                    on_iterate(i, u, w)
                logger.debug(f"Iteration {i}: error {error:.3e}")
                if not math.isfinite(error) or error > config.divergence_threshold:
                    trace.status = IterationStatus.DIVERGED
                    break
                if error < tol:
                    trace.status = IterationStatus.CONVERGED
                    break
            else:
                trace.status = IterationStatus.MAX_ITER
        return u, w, trace

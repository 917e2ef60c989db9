import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from base_scheme import IterationTrace
from infra.fields import l2_error

logger = logging.getLogger(__name__)

_GAUSS_TIMES = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


@dataclass(frozen=True)
class BarenblattParams:
    """
    Self-similar porous medium profile
    z(x, t) = t^(-dκ)·[C − k·|x|²·t^(-2κ)]_+^(1/(m-1)),
    κ = 1/(d(m-1)+2), k = (m-1)/(2m(d(m-1)+2)).
    """

    m: float
    d: int
    C: float
    beta: float = 0.0

    def __post_init__(self):
        if self.m <= 1:
            raise ValueError(f"Barenblatt exponent must exceed 1, got {self.m}")
        if self.d not in (1, 2):
            raise ValueError(f"Barenblatt dimension must be 1 or 2, got {self.d}")
        if self.C <= 0:
            raise ValueError(f"Barenblatt constant must be positive, got {self.C}")

    @property
    def kappa(self) -> float:
        return 1.0 / (self.d * (self.m - 1) + 2)

    @property
    def k(self) -> float:
        return (self.m - 1) / (2 * self.m * (self.d * (self.m - 1) + 2))

    def support_radius(self, t: float) -> float:
        return math.sqrt(self.C / self.k) * t**self.kappa

    def modified_time(self, t):
        """
        s(t) = e^(β(m-1)t)/(β(m-1)) for the growing equation, t itself when β = 0
        """
        if self.beta == 0:
            return t
        rate = self.beta * (self.m - 1)
        return np.exp(rate * t) / rate

    @classmethod
    def with_support(
        cls, m: float, d: int, radius: float, t: float, beta: float = 0.0
    ) -> "BarenblattParams":
        """
        Choose C so that the support radius equals `radius` at time t
        """
        probe = cls(m, d, 1.0, beta)
        s = probe.modified_time(t)
        return cls(m, d, probe.k * radius**2 * s ** (-2 * probe.kappa), beta)


def _squared_radius(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return x**2
    return np.sum(x**2, axis=-1)


def barenblatt(x, t: float, p: BarenblattParams):
    if not t > 0:
        raise ValueError(f"Barenblatt profile needs t > 0, got {t}")
    core = p.C - p.k * _squared_radius(x, p.d) * t ** (-2 * p.kappa)
    return t ** (-p.d * p.kappa) * np.maximum(core, 0.0) ** (1.0 / (p.m - 1))


def exact_modified_pme(x, t: float, p: BarenblattParams):
    """
    Exact solution u = e^(βt)·z(x, s(t)) of ∂t u = Δ(u^m) + βu
    """
    if p.beta == 0:
        raise ValueError("The growing porous medium solution needs beta != 0")
    return math.exp(p.beta * t) * barenblatt(x, p.modified_time(t), p)


def barenblatt_mass(t: float, p: BarenblattParams, n_points: int = 10001) -> float:
    """
    Trapezoid mass of the one-dimensional profile over its support
    """
    radius = p.support_radius(t)
    x = np.linspace(-radius, radius, n_points)
    return float(trapezoid(barenblatt(x, t, p), x))


@dataclass(frozen=True)
class ExactSolution:
    """
    Analytic (u, Φ(u), v) evaluated at points of shape (..., dim) and a time
    """

    u: Callable
    w: Callable
    v: Optional[Callable] = None

    @classmethod
    def barenblatt(cls, p: BarenblattParams) -> "ExactSolution":
        return cls(
            u=lambda x, t: barenblatt(x, t, p),
            w=lambda x, t: barenblatt(x, t, p) ** p.m,
        )

    @classmethod
    def modified_pme(cls, p: BarenblattParams) -> "ExactSolution":
        return cls(
            u=lambda x, t: exact_modified_pme(x, t, p),
            w=lambda x, t: exact_modified_pme(x, t, p) ** p.m,
        )


def spacetime_error(record, exact: ExactSolution) -> float:
    """
    Σ_n ∫_{t_{n-1}}^{t_n} ‖u_n − u(t)‖² + ‖w_n − Φ(u(t))‖² + ‖v_n − v(t)‖² dt,
    with two Gauss times per step
    :param record: run record holding the fields of every step
    :param exact: analytic solution, the v term is skipped without exact v
    """
    if not record.steps:
        raise ValueError(f"{record.run_id}: no steps recorded")
    total = 0.0
    previous_time = record.steps[0].time - record.tau
    for step in record.steps:
        if step.u is None or step.w is None:
            raise ValueError(f"{record.run_id}: fields of step {step.index} were not kept")
        length = step.time - previous_time
        for node in _GAUSS_TIMES:
            t = previous_time + node * length
            squared = l2_error(step.u, lambda x: exact.u(x, t)) ** 2
            squared += l2_error(step.w, lambda x: exact.w(x, t)) ** 2
            if exact.v is not None and step.v is not None:
                squared += l2_error(step.v, lambda x: exact.v(x, t)) ** 2
            total += 0.5 * length * squared
        previous_time = step.time
    return total


def fit_order(pairs: Iterable[tuple[float, float]]) -> float:
    """
    Least-squares slope of log(error) against log(control)
    """
    return _fit(pairs)[0]


def _fit(pairs) -> tuple[float, float]:
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError(f"Fitting an order needs at least 2 pairs, got {len(pairs)}")
    controls, values = np.array(pairs, dtype=float).T
    if np.any(controls <= 0) or np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("Fitting an order needs positive, finite values")
    slope, intercept = np.polyfit(np.log(controls), np.log(values), 1)
    return float(slope), float(intercept)


def contraction_rate(trace: Union[IterationTrace, Sequence[float]]) -> float:
    """
    Geometric mean of the first three error ratios, (e_3/e_0)^(1/3)
    """
    errors = list(trace.errors if isinstance(trace, IterationTrace) else trace)
    if len(errors) < 4:
        raise ValueError(f"Contraction rate needs 4 error values, got {len(errors)}")
    if any(e == 0 for e in errors[:3]):
        raise ValueError("Contraction rate undefined for a zero error")
    return float((errors[3] / errors[0]) ** (1.0 / 3.0))


@dataclass
class StudyResult:
    control: str
    measured: str
    rows: list
    slope: float = math.nan
    intercept: float = math.nan

    @classmethod
    def fit(cls, control: str, measured: str, rows: list) -> "StudyResult":
        result = cls(control, measured, list(rows))
        usable = [(c, v) for c, v in rows if v is not None and math.isfinite(v) and v > 0]
        if len(usable) < len(rows):
            logger.warning(
                f"{len(rows) - len(usable)} of {len(rows)} {measured} values excluded from the fit"
            )
        if len(usable) >= 2:
            result.slope, result.intercept = _fit(usable)
        return result

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=[self.control, self.measured])

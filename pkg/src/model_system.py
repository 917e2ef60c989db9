import logging
import math
from dataclasses import dataclass

import numpy as np

from base_nonlinearity import (
    BaseNonlinearity,
    ModelDomainError,
    invert_phi,
    phi_eval,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstantGrowth:
    rate: float

    def __call__(self, v):
        return np.full(np.shape(v), self.rate, dtype=float)


@dataclass(frozen=True)
class MonodGrowth:
    """
    f(v) = k3·v/(v + k2) - k4
    """

    k2: float
    k3: float
    k4: float

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return self.k3 * v / (v + self.k2) - self.k4


@dataclass(frozen=True)
class MonodConsumption:
    """
    g(u, v) = -k1·u·v/(v + k2)
    """

    k1: float
    k2: float

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return -self.k1 * u * v / (v + self.k2)


@dataclass(frozen=True)
class NoReaction:
    def __call__(self, u, v):
        return np.zeros(np.broadcast(np.asarray(u), np.asarray(v)).shape)


@dataclass(frozen=True)
class ConstantDiffusivity:
    d2: float

    def __call__(self, u):
        return np.full(np.shape(u), self.d2, dtype=float)


@dataclass(frozen=True)
class ModelSystem:
    """
    One instance of the coupled system: u diffuses through Φ and grows with f(v),
    v reacts through g(u, v) and diffuses with D(u) when mu = 1.
    """

    name: str
    phi: BaseNonlinearity
    f: object
    g: object
    D: object
    mu: int
    f_M: float
    g_M: float
    D_m: float = 1.0
    D_M: float = 1.0
    has_substrate: bool = True

    def __post_init__(self):
        if self.mu not in (0, 1):
            raise ModelDomainError(f"mu must be 0 or 1, got {self.mu}")
        if self.f_M < 0 or self.g_M < 0:
            raise ModelDomainError(
                f"Bounds must be non-negative, got f_M={self.f_M}, g_M={self.g_M}"
            )
        if not 0 < self.D_m <= self.D_M:
            raise ModelDomainError(
                f"Diffusivity bounds must satisfy 0 < D_m <= D_M, got {self.D_m}, {self.D_M}"
            )

    def growth(self, v):
        return self.f(np.maximum(np.asarray(v, dtype=float), 0.0))

    def reaction(self, u, v):
        # Lipschitz extension below v = 0
        return self.g(u, np.maximum(np.asarray(v, dtype=float), 0.0))

    def diffusivity(self, u):
        return self.D(u)

    def tau_disc(self) -> float:
        """
        :return: largest admissible time step, min(1/f_M, 1/g_M), infinite if both vanish
        """
        bounds = [1.0 / c for c in (self.f_M, self.g_M) if c > 0]
        return min(bounds) if bounds else math.inf


def compute_u_breve(
    model: ModelSystem,
    u0_sup: float,
    phi_u0_sup: float,
    domain_diam: float,
    dim: int,
    T: float,
    tau: float,
) -> float:
    """
    A-priori upper bound ŭ of the time-discrete solutions
    :param model: model system
    :param u0_sup: maximum of the initial density
    :param phi_u0_sup: maximum of Φ(u0)
    :param domain_diam: diameter of the domain
    :param dim: spatial dimension
    :param T: length of the time interval
    :param tau: time step
    :return: ŭ, strictly below b
    """
    f_M = model.f_M
    if f_M > 0 and tau >= 1.0 / f_M:
        raise ModelDomainError(
            f"Time step {tau} violates tau < 1/f_M = {1.0 / f_M}"
        )
    phi = model.phi
    if not phi.is_singular():
        growth = T * f_M / (1.0 - tau * f_M) if f_M > 0 else 0.0
        return u0_sup * math.exp(growth)
    target = phi_u0_sup + domain_diam**2 / (2 * dim) * f_M
    u_breve = invert_phi(phi, target)
    if not u_breve < phi.b:
        raise ModelDomainError(f"Bisection for ŭ did not stay below b={phi.b}")
    logger.info(f"ŭ={u_breve} for {model.name} (Φ target {target})")
    return u_breve


def initial_phi_sup(model: ModelSystem, u0_sup: float) -> float:
    return phi_eval(model.phi, u0_sup)

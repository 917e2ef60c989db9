import logging
import math
from abc import ABC, abstractmethod

import numpy as np
from scipy.optimize import bisect

logger = logging.getLogger(__name__)

_INVERT_TOL = 1e-12


class ModelDomainError(ValueError):
    pass


class BaseNonlinearity(ABC):
    """
    Diffusion nonlinearity Φ with Φ(0) = 0, strictly increasing on (0, b).
    Arguments below zero are extended by Φ(u) = 0 and Φ'(u) = Φ'(0).
    """

    def __init__(self, b: float = math.inf, phi_m: float = 0.0, phi_M: float = math.inf):
        self.__b = b
        self.__phi_m = phi_m
        self.__phi_M = phi_M

    @property
    def b(self) -> float:
        """
        :return: upper density bound, infinite for non-singular nonlinearities
        """
        return self.__b

    @property
    def phi_m(self) -> float:
        """
        :return: infimum of Φ' on [0, b)
        """
        return self.__phi_m

    @property
    def phi_M(self) -> float:
        """
        :return: supremum of Φ' on [0, b), may be infinite
        """
        return self.__phi_M

    def is_singular(self) -> bool:
        return math.isfinite(self.b)

    def value(self, u):
        u = np.asarray(u, dtype=float)
        self._check_domain(u)
        return self._value(np.maximum(u, 0.0))

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        self._check_domain(u)
        return self._derivative(np.maximum(u, 0.0))

    def kind(self) -> str:
        return self.__class__.__name__

    def _check_domain(self, u: np.ndarray):
        if self.is_singular() and np.any(u >= self.b):
            raise ModelDomainError(
                f"{self.kind()} evaluated at {float(np.max(u))} >= b={self.b}"
            )

    @abstractmethod
    def _value(self, u: np.ndarray) -> np.ndarray:
        """
        Φ on non-negative arguments below b
        """
        raise NotImplementedError()

    @abstractmethod
    def _derivative(self, u: np.ndarray) -> np.ndarray:
        """
        Φ' on non-negative arguments below b
        """
        raise NotImplementedError()


class RegularizedPhi(BaseNonlinearity):
    """
    Φ continued linearly beyond the threshold u_breve, with matching value and slope.
    """

    def __init__(self, base: BaseNonlinearity, u_breve: float):
        self.base = base
        self.u_breve = float(u_breve)
        self.phi_at_breve = float(base.value(self.u_breve))
        self.phi_prime_at_breve = float(base.derivative(self.u_breve))
        super().__init__(
            b=math.inf,
            phi_m=base.phi_m,
            phi_M=max(base.phi_m, self.phi_prime_at_breve),
        )

    def _value(self, u):
        below = np.minimum(u, self.u_breve)
        linear = self.phi_prime_at_breve * (u - self.u_breve) + self.phi_at_breve
        return np.where(u <= self.u_breve, self.base.value(below), linear)

    def _derivative(self, u):
        below = np.minimum(u, self.u_breve)
        return np.where(
            u <= self.u_breve, self.base.derivative(below), self.phi_prime_at_breve
        )


def phi_eval(phi: BaseNonlinearity, u):
    """
    Evaluate Φ(u) = ∫₀ᵘ Φ'(s) ds, scalar or array
    :raises ModelDomainError: if u >= b for a singular nonlinearity
    """
    value = phi.value(u)
    return float(value) if np.ndim(value) == 0 else value


def regularize(phi: BaseNonlinearity, u_breve: float) -> BaseNonlinearity:
    if not phi.is_singular():
        if u_breve < 0:
            raise ModelDomainError(f"u_breve must be non-negative, got {u_breve}")
        return phi
    if not 0 < u_breve < phi.b:
        raise ModelDomainError(f"u_breve must lie in (0, {phi.b}), got {u_breve}")
    return RegularizedPhi(phi, u_breve)


def _upper_bracket(phi: BaseNonlinearity, w: float) -> float:
    if phi.is_singular():
        for k in range(1, 60):
            hi = phi.b * (1.0 - 2.0**-k)
            if phi_eval(phi, hi) >= w:
                return hi
        raise ModelDomainError(f"No bracket for Φ⁻¹({w}) below b={phi.b}")
    hi = 1.0
    while phi_eval(phi, hi) < w:
        hi *= 2.0
        if not math.isfinite(hi):
            raise ModelDomainError(f"No bracket for Φ⁻¹({w})")
    return hi


def invert_phi(phi: BaseNonlinearity, w: float) -> float:
    """
    Bisection inverse of the monotone Φ
    :param phi: nonlinearity
    :param w: target value, non-negative
    :return: u with |Φ(u) - w| <= 1e-12 max(1, w), or the bisection limit with a
        warning when Φ cannot reach w that closely (jumps, floating-point resolution)
    """
    if w < 0:
        raise ModelDomainError(f"Φ⁻¹ requires a non-negative argument, got {w}")
    if w == 0:
        return 0.0
    hi = _upper_bracket(phi, w)
    residual_hi = phi_eval(phi, hi) - w
    if residual_hi == 0:
        return hi
    try:
        u = bisect(
            lambda s: phi_eval(phi, s) - w,
            0.0,
            hi,
            xtol=1e-300,
            rtol=4 * np.finfo(float).eps,
            maxiter=2000,
        )
    except (ValueError, RuntimeError) as e:
        raise ModelDomainError(f"Bisection for Φ⁻¹({w}) failed: {e}") from e
    if abs(phi_eval(phi, u) - w) > _INVERT_TOL * max(1.0, w):
        logger.warning(
            f"Φ⁻¹({w}) stopped at u={u} with residual {phi_eval(phi, u) - w:.3e}"
        )
    return float(u)

import math
from typing import Callable

import numpy as np

from base_nonlinearity import BaseNonlinearity


class CustomPhi(BaseNonlinearity):
    def __init__(
        self,
        phi: Callable,
        phi_prime: Callable,
        b: float = math.inf,
        phi_m: float = 0.0,
        phi_M: float = math.inf,
    ):
        super().__init__(b=b, phi_m=phi_m, phi_M=phi_M)
        self.phi = phi
        self.phi_prime = phi_prime

    def _value(self, u):
        return np.asarray(self.phi(u), dtype=float)

    def _derivative(self, u):
        return np.asarray(self.phi_prime(u), dtype=float)


class PolynomialPhi:
    """
    u + u^p, picklable so it can travel to sweep workers
    """

    def __init__(self, p: float):
        self.p = p

    def __call__(self, u):
        return u + u**self.p


class PolynomialPhiPrime:
    def __init__(self, p: float):
        self.p = p

    def __call__(self, u):
        return 1.0 + self.p * u ** (self.p - 1)


def nondegenerate_phi(p: float = 4.0) -> CustomPhi:
    return CustomPhi(PolynomialPhi(p), PolynomialPhiPrime(p), phi_m=1.0)


import numpy as np
from scipy.integrate import quad

from base_nonlinearity import BaseNonlinearity, ModelDomainError

_NODES_PER_UNIT = 64
_SERIES_LIMIT = 0.3
_SERIES_TERMS = 60


class BiofilmPhi(BaseNonlinearity):
    """
    Degenerate and singular biofilm diffusion, Φ'(u) = d1·u^α/(1-u)^β with b = 1.

    For α = β = 4 the antiderivative has a closed form. Small arguments use its
    power series to avoid cancellation. Other exponents integrate Φ' adaptively
    from cached nodes on a uniform grid of [0, 1).
    """

    def __init__(self, d1: float = 1e-6, alpha: float = 4.0, beta: float = 4.0):
        if d1 <= 0:
            raise ModelDomainError(f"d1 must be positive, got {d1}")
        if alpha < 1 or beta < 1:
            raise ModelDomainError(
                f"Biofilm exponents must be >= 1, got alpha={alpha}, beta={beta}"
            )
        super().__init__(b=1.0, phi_m=0.0)
        self.d1 = float(d1)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self._nodes: dict[int, float] = {0: 0.0}

    def has_closed_form(self) -> bool:
        return self.alpha == 4.0 and self.beta == 4.0

    def _derivative(self, u):
        return self.d1 * u**self.alpha / (1.0 - u) ** self.beta

    def _value(self, u):
        if self.has_closed_form():
            return self.d1 * np.where(
                u < _SERIES_LIMIT,
                self._series(np.minimum(u, _SERIES_LIMIT)),
                self._closed_form(np.maximum(u, _SERIES_LIMIT)),
            )
        return np.vectorize(self._integrated, otypes=[float])(u)

    @staticmethod
    def _closed_form(u):
        return (
            (18 * u**2 - 30 * u + 13) / (3 * (1 - u) ** 3)
            + u
            + 4 * np.log1p(-u)
            - 13.0 / 3.0
        )

    def _series(self, u):
        # ∫₀ᵘ s^α (1-s)^-β ds with the binomial series of (1-s)^-β
        total = np.zeros_like(u)
        coefficient = 1.0
        for k in range(_SERIES_TERMS):
            power = self.alpha + k + 1
            total = total + coefficient * u**power / power
            coefficient *= (self.beta + k) / (k + 1)
        return total

    def _shape(self, s: float) -> float:
        return s**self.alpha / (1.0 - s) ** self.beta

    def _node_value(self, k: int) -> float:
        if k not in self._nodes:
            left = self._node_value(k - 1)
            piece, _ = quad(
                self._shape,
                (k - 1) / _NODES_PER_UNIT,
                k / _NODES_PER_UNIT,
                epsabs=0.0,
                epsrel=1e-12,
                limit=200,
            )
            self._nodes[k] = left + piece
        return self._nodes[k]

    def _integrated(self, u: float) -> float:
        k = int(u * _NODES_PER_UNIT)
        start = k / _NODES_PER_UNIT
        piece, _ = quad(self._shape, start, u, epsabs=0.0, epsrel=1e-12, limit=200)
        return self.d1 * (self._node_value(k) + piece)

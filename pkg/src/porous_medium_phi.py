import math

from base_nonlinearity import BaseNonlinearity, ModelDomainError


class PowerLawPhi(BaseNonlinearity):
    """
    Φ(u) = u^m of the porous medium equation, degenerate at u = 0.
    """

    def __init__(self, m: float):
        if m <= 1:
            raise ModelDomainError(f"Power-law exponent must exceed 1, got {m}")
        super().__init__(b=math.inf, phi_m=0.0, phi_M=math.inf)
        self.m = float(m)

    def _value(self, u):
        return u**self.m

    def _derivative(self, u):
        return self.m * u ** (self.m - 1)

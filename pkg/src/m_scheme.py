import numpy as np

from base_nonlinearity import BaseNonlinearity
from base_scheme import BaseScheme, SchemeConfig
from infra.fields import FieldP0


class MScheme(BaseScheme):
    """
    L = max(Φ̆'(u) + Mτ^γ, 2Mτ^γ) per cell
    """

    def __init__(self, config: SchemeConfig):
        super().__init__(config)
        if config.gamma is None:
            raise ValueError("M-scheme requires gamma")
        self.M = self._stabilisation(config)
        self.gamma = float(config.gamma)

    @staticmethod
    def _stabilisation(config: SchemeConfig) -> float:
        return float(config.M)

    def shift(self, tau: float) -> float:
        return self.M * tau**self.gamma

    def l_factor_field(
        self, phi_breve: BaseNonlinearity, u_prev: FieldP0, tau: float
    ) -> FieldP0:
        shift = self.shift(tau)
        values = np.maximum(phi_breve.derivative(u_prev.values) + shift, 2.0 * shift)
        return FieldP0(u_prev.mesh, values)

    def norm_gradient_weight(self, phi_m: float, tau: float) -> float:
        return 2.0 / (phi_m + self.shift(tau))


class NewtonScheme(MScheme):
    """
    Regularized Newton: the M-scheme with the tiny constant m_reg
    """

    @staticmethod
    def _stabilisation(config: SchemeConfig) -> float:
        return float(config.m_reg)

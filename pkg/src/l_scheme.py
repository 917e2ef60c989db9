import numpy as np

from base_nonlinearity import BaseNonlinearity
from base_scheme import BaseScheme, SchemeConfig
from infra.fields import FieldP0


class LScheme(BaseScheme):
    """
    Constant stabilisation L; contracts for L above sup Φ̆'.
    """

    def __init__(self, config: SchemeConfig):
        super().__init__(config)
        self.L = float(config.L)

    def l_factor_field(
        self, phi_breve: BaseNonlinearity, u_prev: FieldP0, tau: float
    ) -> FieldP0:
        return FieldP0(u_prev.mesh, np.full(u_prev.mesh.n_cells, self.L))

    def norm_gradient_weight(self, phi_m: float, tau: float) -> float:
        return 2.0 / (self.L + phi_m)

import logging

import numpy as np
import scipy.sparse.linalg as spla

from infra.assembly import SparseSpd

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12
SOLVER_METHODS = ("direct", "cg")


class LinearSolverError(RuntimeError):
    pass


def _direct(matrix, rhs: np.ndarray) -> np.ndarray:
    try:
        return spla.splu(matrix.tocsc()).solve(rhs)
    except RuntimeError as e:
        raise LinearSolverError(f"Sparse factorization failed: {e}") from e


def _conjugate_gradient(matrix, rhs: np.ndarray) -> np.ndarray:
    x, info = spla.cg(
        matrix, rhs, rtol=RESIDUAL_TOL, atol=0.0, maxiter=10 * matrix.shape[0]
    )
    if info != 0:
        raise LinearSolverError(f"Conjugate gradient did not converge (info={info})")
    return x


def solve_spd(system: SparseSpd, rhs: np.ndarray, method: str = "direct") -> np.ndarray:
    """
    Solve the system restricted to its free unknowns
    :param system: operator and its free index set
    :param rhs: right-hand side over the free unknowns
    :param method: "direct" (sparse LU) or "cg"
    :return: solution over the free unknowns
    :raises LinearSolverError: if the solve fails or the residual check does not hold
    """
    matrix = system.matrix
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (matrix.shape[0],):
        raise LinearSolverError(
            f"Right-hand side of shape {rhs.shape} for a {matrix.shape} system"
        )
    if matrix.shape[0] == 0 or not np.any(rhs):
        return np.zeros_like(rhs)
    if method == "direct":
        x = _direct(matrix, rhs)
    elif method == "cg":
        x = _conjugate_gradient(matrix, rhs)
    else:
        raise LinearSolverError(f"Unknown linear solver method: {method}")

    residual = np.linalg.norm(matrix @ x - rhs)
    scale = np.linalg.norm(rhs) + spla.norm(matrix, np.inf) * np.linalg.norm(x)
    if not np.isfinite(residual) or residual > RESIDUAL_TOL * scale:
        raise LinearSolverError(
            f"Linear solve residual {residual:.3e} exceeds tolerance (scale {scale:.3e})"
        )
    logger.debug(f"Solved {matrix.shape[0]} unknowns with {method}, residual {residual:.2e}")
    return x

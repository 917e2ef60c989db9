import math

import pytest

from conftest import get_run_config
from study_runner import build_setup, contraction_errors, contraction_study


@pytest.mark.timeout(600)
def test_m_scheme_rate_bound_on_nondegenerate_problem():
    config = get_run_config("nondegenerate")
    M, gamma = config.scheme.M, config.scheme.gamma
    result, _ = contraction_study(config)
    for tau, rate in result.rows:
        shift = M * tau**gamma
        assert rate <= 2 * shift / (1 + shift) + 0.05


@pytest.mark.timeout(600)
def test_l_scheme_rate_bound_on_nondegenerate_problem():
    L = 1.5
    config = get_run_config("nondegenerate", overrides=["scheme.type=l", f"scheme.L={L}"])
    result, _ = contraction_study(config)
    for _, rate in result.rows:
        assert rate <= math.sqrt(L / (L + 1)) + 0.05


@pytest.mark.timeout(600)
def test_newton_beats_the_l_scheme_near_the_solution():
    newton = get_run_config("nondegenerate", overrides=["scheme.type=newton"])
    l_scheme = get_run_config("nondegenerate", overrides=["scheme.type=l", "scheme.L=1.5"])
    newton_errors = contraction_errors(build_setup(newton, tau=0.05), reference_tol=1e-24)
    l_errors = contraction_errors(build_setup(l_scheme, tau=0.05), reference_tol=1e-24)
    assert all(b < a for a, b in zip(l_errors, l_errors[1:]))
    assert newton_errors[-1] < l_errors[-1]

import math

import pytest

from base_scheme import SchemeConfig
from benchmark_utils import ExactSolution
from conftest import get_run_config
from run_config import parse_config
from study_runner import (
    SUMMARY_COLUMNS,
    build_setup,
    contraction_errors,
    exact_solution_for,
    single_run,
    summary_row,
    sweep,
)


def test_build_setup_replaces_grid_values():
    config = get_run_config("pme_single")
    setup = build_setup(config, tau=0.05, h=0.1, scheme_cfg=SchemeConfig(type="newton", gamma=1 / 3))
    assert setup.grid.tau == 0.05
    assert setup.grid.n_steps == 2
    assert setup.problem.mesh.n_cells == 20
    assert setup.scheme.scheme_type() == "newton"
    assert setup.run_id == "pme-single-newton-tau0.05-h0.1"


def test_summary_row_of_single_run():
    config = get_run_config("pme_single", overrides=["mesh.h=0.05"])
    setup = build_setup(config)
    record = single_run(setup, keep_fields=True)
    row = summary_row(setup, record)
    assert list(row) == SUMMARY_COLUMNS
    assert row["M_or_L"] == 0.001
    assert row["failed_steps"] == 0
    assert row["avg_iterations"] == record.average_iterations
    assert all(step.u is not None for step in record.steps)
    assert record.config["name"] == "pme-single"


def test_exact_solution_only_for_barenblatt():
    assert isinstance(exact_solution_for(get_run_config("pme_single")), ExactSolution)
    with pytest.raises(ValueError, match="No exact solution"):
        exact_solution_for(get_run_config("zero_ic"))
    with pytest.raises(ValueError, match="biofilm"):
        exact_solution_for(get_run_config("biofilm_pde_ode"))


def test_single_point_sweep_matches_direct_run():
    config = get_run_config("pme_single", overrides=["mesh.h=0.05", "study=sweep"])
    table, summary = sweep(config)
    assert len(table) == 1
    record = single_run(build_setup(config))
    assert table["avg_iterations"][0] == record.average_iterations
    assert bool(table["completed"][0])
    assert summary["run_id"][0] == record.run_id


def test_sweep_records_failures_and_continues():
    config = get_run_config(
        "pme_single",
        overrides=[
            "mesh.h=0.05",
            "study=sweep",
            'study_params.schemes=[{"max_iter": 1, "tol": 1e-30}, {}]',
        ],
    )
    table, summary = sweep(config)
    assert table["completed"].tolist() == [False, True]
    assert table["failures"][0] == 1
    assert math.isnan(table["avg_iterations"][0])
    assert len(summary) == 2


def test_contraction_errors():
    config = parse_config(
        {"model": {"preset": "nondegenerate"}, "mesh": {"h": 0.05}, "scheme": {"M": 0.5, "gamma": 1}}
    )
    setup = build_setup(config, tau=0.1)
    errors = contraction_errors(setup, reference_tol=1e-24, iterations=3)
    assert len(errors) == 4
    assert all(b < a for a, b in zip(errors, errors[1:]))

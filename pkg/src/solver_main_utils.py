import json
import logging
import math
import os
import time
from typing import Iterable, List

import pandas as pd

from base_nonlinearity import ModelDomainError
from infra.field_io import write_field_csv, write_table, write_vtk
from infra.fields import FieldP0, FieldP1
from infra.mesh import MeshError
from run_config import ConfigError, RunConfig, load_config
from solver_utils import json_safe, log_event
from study_runner import (
    SUMMARY_COLUMNS,
    RunSetup,
    build_setup,
    contraction_study,
    single_run,
    summary_row,
    sweep,
    time_convergence,
)
from time_stepper import RunRecord, Snapshot

logger = logging.getLogger(__name__)

SUBCOMMANDS = {
    "run": "single",
    "convergence": "time_convergence",
    "contraction": "contraction",
    "sweep": "sweep",
}

EXIT_OK = 0
EXIT_STUDY_FAILED = 1
EXIT_CONFIG_ERROR = 2

_PLOT_SCRIPT = '''"""
Plot the tables written next to this script (requires matplotlib)
"""
import os

import matplotlib.pyplot as plt
import pandas as pd

folder = os.path.dirname(os.path.abspath(__file__))


def _loglog(table, x, y, title):
    frame = pd.read_csv(os.path.join(folder, table))
    plt.figure()
    plt.loglog(frame[x], frame[y], "o-")
    plt.xlabel(x)
    plt.ylabel(y)
    plt.title(title)
    plt.savefig(os.path.join(folder, table.replace(".csv", ".png")))


if os.path.exists(os.path.join(folder, "convergence.csv")):
    _loglog("convergence.csv", "tau", "error", "Time convergence")
if os.path.exists(os.path.join(folder, "contraction.csv")):
    _loglog("contraction.csv", "tau", "rate", "Contraction rate")
if os.path.exists(os.path.join(folder, "sweep.csv")):
    frame = pd.read_csv(os.path.join(folder, "sweep.csv"))
    for (scheme, param, tau), group in frame.groupby(["scheme", "param", "tau"]):
        plt.figure()
        plt.semilogx(group["h"], group["avg_iterations"], "o-")
        plt.xlabel("h")
        plt.ylabel("average iterations")
        plt.title(f"{scheme} {param} tau={tau:g}")
        plt.savefig(os.path.join(folder, f"sweep_{scheme}_{param:g}_{tau:g}.png"))
'''


def _snapshot_prefix(directory: str, snapshot: Snapshot) -> str:
    return os.path.join(directory, "snapshots", f"step_{snapshot.step:05d}")


def write_snapshots(config: RunConfig, setup: RunSetup, record: RunRecord) -> List[str]:
    """
    Write every stored snapshot as one CSV per field, plus a VTK file in 2D when enabled
    :return: written paths
    """
    directory = config.output["directory"]
    written = []
    for snapshot in record.snapshots:
        prefix = _snapshot_prefix(directory, snapshot)
        fields = {"u": snapshot.u, "w": snapshot.w}
        if setup.model.has_substrate:
            fields["v"] = snapshot.v
        for name, field in fields.items():
            written.append(write_field_csv(field, f"{prefix}_{name}.csv"))
        if config.output.get("vtk") and setup.problem.mesh.dim == 2:
            point_data = {n: f.values for n, f in fields.items() if isinstance(f, FieldP1)}
            cell_data = {n: f.values for n, f in fields.items() if isinstance(f, FieldP0)}
            written.append(
                write_vtk(
                    f"{prefix}.vtk",
                    setup.problem.mesh,
                    point_data,
                    cell_data,
                    title=f"{record.run_id} t={snapshot.time:.17g}",
                )
            )
    return written


def _write_traces(config: RunConfig, records: Iterable[RunRecord]):
    if not config.output.get("traces", True):
        return
    frames = [record.trace_frame() for record in records]
    if frames:
        write_table(pd.concat(frames, ignore_index=True), os.path.join(config.output["directory"], "traces.csv"))


def _write_summary(config: RunConfig, rows: list):
    write_table(
        pd.DataFrame(rows, columns=SUMMARY_COLUMNS),
        os.path.join(config.output["directory"], "run_summary.csv"),
    )


def write_metadata(config: RunConfig, metadata: dict) -> str:
    path = os.path.join(config.output["directory"], "metadata.json")
    document = {"config": config.to_dict()}
    document.update(metadata)
    with open(path, "w") as f:
        json.dump(json_safe(document), f, indent=2, sort_keys=True)
    return path


def write_plot_script(config: RunConfig) -> str:
    path = os.path.join(config.output["directory"], "plot_results.py")
    with open(path, "w") as f:
        f.write(_PLOT_SCRIPT)
    return path


def _failure_summary(records: Iterable[RunRecord]) -> list:
    return [
        {"run_id": r.run_id, "reason": r.failure_reason, "failed_steps": r.failed_steps}
        for r in records
        if r.failed or r.failed_steps
    ]


def _run_single(config: RunConfig) -> tuple[dict, bool]:
    setup = build_setup(config)
    record = single_run(setup)
    logger.info(
        f"{record.run_id}: u_breve {record.u_breve:.6g}, "
        f"{record.converged_steps}/{setup.grid.n_steps} steps converged, "
        f"average iterations {record.average_iterations:.3f}"
    )
    write_snapshots(config, setup, record)
    _write_traces(config, [record])
    _write_summary(config, [summary_row(setup, record)])
    metadata = {
        "u_breve": record.u_breve,
        "failures": _failure_summary([record]),
        "failed": record.failed,
    }
    return metadata, not record.failed


def _run_time_convergence(config: RunConfig) -> tuple[dict, bool]:
    result, records = time_convergence(config)
    directory = config.output["directory"]
    write_table(result.to_frame(), os.path.join(directory, "convergence.csv"))
    _write_traces(config, [record for _, record in records])
    _write_summary(config, [summary_row(setup, record) for setup, record in records])
    logger.info(f"Time convergence slope {result.slope:.4f}")
    metadata = {
        "u_breve": [record.u_breve for _, record in records],
        "slope": result.slope,
        "intercept": result.intercept,
        "failures": _failure_summary(record for _, record in records),
    }
    return metadata, not any(record.failed for _, record in records)


def _run_contraction(config: RunConfig) -> tuple[dict, bool]:
    result, raw = contraction_study(config)
    directory = config.output["directory"]
    write_table(result.to_frame(), os.path.join(directory, "contraction.csv"))
    write_table(raw, os.path.join(directory, "contraction_norms.csv"))
    logger.info(f"Contraction rate slope {result.slope:.4f}")
    missing = [tau for tau, rate in result.rows if math.isnan(rate)]
    metadata = {
        "slope": result.slope,
        "intercept": result.intercept,
        "failures": [{"tau": tau, "reason": "rate unavailable"} for tau in missing],
    }
    return metadata, not missing


def _run_sweep(config: RunConfig) -> tuple[dict, bool]:
    table, summaries = sweep(config)
    directory = config.output["directory"]
    write_table(table, os.path.join(directory, "sweep.csv"))
    write_table(summaries, os.path.join(directory, "run_summary.csv"))
    failed = table[~table["completed"]]
    metadata = {
        "points": len(table),
        "failures": failed[["scheme", "param", "tau", "h"]].to_dict(orient="records"),
    }
    return metadata, True


_STUDIES = {
    "single": _run_single,
    "time_convergence": _run_time_convergence,
    "contraction": _run_contraction,
    "sweep": _run_sweep,
}


def run_study(subcommand: str, config_path: str, overrides: List[str]) -> int:
    """
    Load the configuration, execute the study selected by the subcommand and write its artifacts
    :param subcommand: one of SUBCOMMANDS, it selects the study regardless of the file's study key
    :param config_path: JSON configuration file
    :param overrides: "section.key=value" items
    :return: exit status
    """
    if subcommand not in SUBCOMMANDS:
        logger.error(f"Unsupported subcommand: {subcommand}")
        return EXIT_CONFIG_ERROR
    try:
        config = load_config(config_path, list(overrides) + [f"study={SUBCOMMANDS[subcommand]}"])
        config.validate_paths()
    except ConfigError as e:
        logger.error(f"Invalid configuration {config_path}: {e}")
        return EXIT_CONFIG_ERROR

    logger.info(f"Starting {config.study} study '{config.name}', output in {config.output['directory']}")
    started = time.perf_counter()
    try:
        metadata, succeeded = _STUDIES[config.study](config)
    except (ModelDomainError, MeshError, ValueError, RuntimeError) as e:
        logger.error(f"Study '{config.name}' aborted: {e}")
        log_event(config.name, "study_aborted", {"reason": str(e)})
        write_metadata(
            config,
            {"wall_time_seconds": time.perf_counter() - started, "aborted": str(e)},
        )
        return EXIT_STUDY_FAILED

    metadata["wall_time_seconds"] = time.perf_counter() - started
    write_metadata(config, metadata)
    if config.output.get("plot_script"):
        write_plot_script(config)
    if not succeeded:
        logger.error(f"Study '{config.name}' finished with aborted runs")
        return EXIT_STUDY_FAILED
    logger.info(f"Study '{config.name}' finished in {metadata['wall_time_seconds']:.2f}s")
    return EXIT_OK

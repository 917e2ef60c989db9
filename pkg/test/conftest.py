import json
import os
from typing import Optional

import pytest

from model_registry import get_model_registry
from run_config import RunConfig, parse_config


def get_studies_folder() -> str:
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), "studies")


def get_study_folder(name: str) -> str:
    return os.path.join(get_studies_folder(), name)


def get_config_file(name: str) -> str:
    return os.path.join(get_study_folder(name), "config.json")


def get_config(name: str) -> dict:
    with open(get_config_file(name)) as f:
        return json.load(f)


def get_run_config(name: str, output_dir: Optional[str] = None, overrides=None) -> RunConfig:
    document = get_config(name)
    if output_dir is not None:
        document.setdefault("output", {})["directory"] = output_dir
    return parse_config(document, overrides)


@pytest.fixture(autouse=True)
def reset_model_registry():
    get_model_registry().reset_presets()
    yield
    get_model_registry().reset_presets()


def assert_iterations_fall_with_tau(table, slack: float = 0.5):
    """
    For every (h, scheme) of a sweep table, the average iteration count does not grow
    as tau decreases; runs with failed steps have no average and are left out
    """
    usable = table[table["completed"] & (table["failures"] == 0) & table["avg_iterations"].notna()]
    for (h, scheme), group in usable.groupby(["h", "scheme"]):
        counts = group.sort_values("tau", ascending=False)["avg_iterations"].tolist()
        for coarse, fine in zip(counts, counts[1:]):
            assert fine <= coarse + slack, f"h={h}, scheme={scheme}: {counts}"

"""
Run and study configuration.

A configuration is a JSON document with the sections listed in SECTION_KEYS.
Model presets contribute their own defaults (domain, time interval, boundary
conditions, initial condition); file values override them and command-line
overrides ("section.key=value") override the file.
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from base_nonlinearity import ModelDomainError
from base_scheme import SchemeConfig
from infra.fe_problem import BoundarySpec
from initial_conditions import COMMON_KEYS, INITIAL_CONDITION_KEYS
from model_registry import get_model_registry
from solver_utils import parse_override

logger = logging.getLogger(__name__)

STUDY_TYPES = ("single", "time_convergence", "contraction", "sweep")

SECTION_KEYS = {
    "mesh": {"domain", "h", "solver"},
    "time": {"t_start", "t_end", "tau"},
    "scheme": {
        "type",
        "L",
        "M",
        "gamma",
        "m_reg",
        "tol",
        "max_iter",
        "divergence_threshold",
        "on_nonconvergence",
    },
    "output": {"directory", "snapshot_times", "vtk", "plot_script", "traces"},
    "study_params": {
        "taus",
        "tau_exponents",
        "hs",
        "schemes",
        "reference_tol",
        "contraction_iterations",
        "workers",
    },
}
TOP_LEVEL_KEYS = {
    "name",
    "study",
    "model",
    "boundary",
    "initial_condition",
} | set(SECTION_KEYS)

_GENERIC_DEFAULTS = {
    "name": "run",
    "study": "single",
    "mesh": {"domain": [-1.0, 1.0], "h": 0.01, "solver": "direct"},
    "time": {"t_start": 0.0, "t_end": 1.0, "tau": 0.01},
    "scheme": {
        "type": "m",
        "M": 1e-3,
        "tol": 1e-5,
        "max_iter": 500,
        "divergence_threshold": 1e10,
        "m_reg": 1e-7,
        "on_nonconvergence": "abort",
    },
    "boundary": {"u": {"all": "dirichlet_zero"}, "v": {}},
    "output": {
        "directory": "out",
        "snapshot_times": [],
        "vtk": False,
        "plot_script": False,
        "traces": True,
    },
    "study_params": {
        "reference_tol": 1e-20,
        "contraction_iterations": 3,
        "workers": 1,
    },
}

_PRESET_DEFAULTS = {
    "pme": {
        "time": {"t_start": 0.5, "t_end": 1.0},
        "initial_condition": {"type": "barenblatt"},
    },
    "biofilm": {
        "time": {"t_start": 0.0, "t_end": 1.2},
        "scheme": {"M": 1e-2},
        "boundary": {"u": {"all": "neumann_zero"}, "v": {"left": 1.0}},
        "initial_condition": {
            "type": "hemispheres",
            "height": 0.9,
            "radius": 0.2,
            "x1": -0.3,
            "x2": 0.3,
            "v0": 1.0,
        },
    },
    "nondegenerate": {
        "mesh": {"domain": [0.0, 1.0], "h": 0.02},
        "time": {"t_start": 0.0, "t_end": 0.5, "tau": 0.05},
        "scheme": {"M": 0.5},
        "initial_condition": {"type": "sine", "amplitude": 0.25},
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    name: str
    study: str
    model: dict
    mesh: dict
    time: dict
    scheme: SchemeConfig
    boundary: dict
    initial_condition: dict
    output: dict
    study_params: dict = field(default_factory=dict)

    @property
    def preset(self) -> str:
        return self.model["preset"]

    @property
    def model_params(self) -> dict:
        return {k: v for k, v in self.model.items() if k != "preset"}

    def boundary_spec(self) -> BoundarySpec:
        return BoundarySpec.from_dict(self.boundary)

    def study_taus(self) -> list:
        params = self.study_params
        if params.get("taus") is not None:
            return [float(t) for t in params["taus"]]
        if params.get("tau_exponents") is not None:
            return [10.0 ** float(x) for x in params["tau_exponents"]]
        return [float(self.time["tau"])]

    def study_hs(self) -> list:
        hs = self.study_params.get("hs")
        return [float(h) for h in hs] if hs is not None else [float(self.mesh["h"])]

    def study_schemes(self) -> list:
        """
        :return: scheme configurations of a sweep, each entry overriding the main scheme
        """
        entries = self.study_params.get("schemes") or [{}]
        base = self.scheme_dict()
        return [SchemeConfig(**{**base, **entry}) for entry in entries]

    def scheme_dict(self) -> dict:
        return {k: getattr(self.scheme, k) for k in SECTION_KEYS["scheme"]}

    def with_overrides(self, **sections) -> "RunConfig":
        data = self.to_dict()
        for section, values in sections.items():
            data[section].update(values)
        return _build(data)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "study": self.study,
            "model": copy.deepcopy(self.model),
            "mesh": copy.deepcopy(self.mesh),
            "time": copy.deepcopy(self.time),
            "scheme": self.scheme_dict(),
            "boundary": copy.deepcopy(self.boundary),
            "initial_condition": copy.deepcopy(self.initial_condition),
            "output": copy.deepcopy(self.output),
            "study_params": copy.deepcopy(self.study_params),
        }

    def validate_paths(self):
        directory = os.path.abspath(self.output["directory"])
        try:
            os.makedirs(directory, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"output.directory is not writable: {directory} ({e})")
        if not os.access(directory, os.W_OK):
            raise ConfigError(f"output.directory is not writable: {directory}")


def _merge(base: dict, update: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_overrides(document: dict, overrides: Iterable[str]) -> dict:
    """
    Apply "section.key=value" overrides on a raw document
    """
    document = copy.deepcopy(document)
    for item in overrides:
        try:
            key, value = parse_override(item)
        except ValueError as e:
            raise ConfigError(str(e))
        parts = key.split(".")
        if parts[0] not in TOP_LEVEL_KEYS:
            raise ConfigError(f"Unknown configuration key: {key}")
        target = document
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"Cannot override inside non-section key: {key}")
        target[parts[-1]] = value
    return document


def _check_keys(section: str, values: dict, allowed: set):
    if not isinstance(values, dict):
        raise ConfigError(f"Section '{section}' must be an object")
    for key in values:
        if key not in allowed:
            name = key if section == "<root>" else f"{section}.{key}"
            raise ConfigError(f"Unknown configuration key: {name}")


def _with_defaults(document: dict) -> dict:
    _check_keys("<root>", document, TOP_LEVEL_KEYS)
    preset = document.get("model", {}).get("preset", "pme")
    if preset not in _PRESET_DEFAULTS:
        raise ConfigError(
            f"Unknown model.preset '{preset}', expected one of {sorted(_PRESET_DEFAULTS)}"
        )
    defaults = _merge(_GENERIC_DEFAULTS, _PRESET_DEFAULTS[preset])
    ic_default = defaults.pop("initial_condition")
    merged = _merge(defaults, {k: v for k, v in document.items() if k != "initial_condition"})
    ic = document.get("initial_condition", {})
    if ic.get("type", ic_default["type"]) == ic_default["type"]:
        ic = _merge(ic_default, ic)
    merged["initial_condition"] = ic
    merged.setdefault("model", {})["preset"] = preset
    return merged


def _resolve_model(data: dict) -> tuple[dict, object]:
    model = dict(data["model"])
    preset = get_model_registry().get_preset(model.pop("preset"))
    try:
        params = preset.resolve(model)
    except KeyError as e:
        raise ConfigError(f"Unknown configuration key: model.{e.args[0]}")
    try:
        built = preset.builder(params)
    except (ModelDomainError, ValueError) as e:
        raise ConfigError(f"Invalid model parameters: {e}")
    return {"preset": preset.name, **params}, (preset, params, built)


def _resolve_initial_condition(data: dict) -> dict:
    ic = dict(data["initial_condition"])
    kind = ic.get("type")
    if kind not in INITIAL_CONDITION_KEYS:
        raise ConfigError(
            f"Unknown initial_condition.type '{kind}', expected one of {sorted(INITIAL_CONDITION_KEYS)}"
        )
    _check_keys("initial_condition", ic, INITIAL_CONDITION_KEYS[kind] | COMMON_KEYS)
    if kind == "barenblatt":
        ic.setdefault("t0", data["time"]["t_start"])
        for key in ("m", "beta", "C"):
            ic.setdefault(key, None)
    if kind == "hemispheres":
        missing = INITIAL_CONDITION_KEYS[kind] - set(ic)
        if missing:
            raise ConfigError(f"Missing configuration key: initial_condition.{sorted(missing)[0]}")
    if kind == "sine":
        ic.setdefault("amplitude", 1.0)
    ic.setdefault("v0", 0.0)
    return ic


def _check_tau(key: str, tau: float, tau_disc: float):
    if not tau > 0:
        raise ConfigError(f"{key} must be positive, got {tau}")
    if tau >= tau_disc:
        raise ConfigError(
            f"{key}={tau} violates tau < tau_disc = min(1/f_M, 1/g_M) = {tau_disc}"
        )


def _build(data: dict) -> RunConfig:
    for section, allowed in SECTION_KEYS.items():
        _check_keys(section, data[section], allowed)
    if data["study"] not in STUDY_TYPES:
        raise ConfigError(
            f"Unknown study '{data['study']}', expected one of {list(STUDY_TYPES)}"
        )

    model, (preset, params, built) = _resolve_model(data)
    scheme_values = dict(data["scheme"])
    if scheme_values.get("gamma") is None:
        scheme_values["gamma"] = preset.default_gamma(params)
    try:
        scheme = SchemeConfig(**scheme_values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid scheme section: {e}")

    mesh = dict(data["mesh"])
    if not isinstance(mesh["h"], (int, float)) or not mesh["h"] > 0:
        raise ConfigError(f"mesh.h must be positive, got {mesh['h']}")
    domain = mesh["domain"]
    intervals = domain if domain and isinstance(domain[0], (list, tuple)) else [domain]
    if not 1 <= len(intervals) <= 2 or any(
        len(iv) != 2 or not iv[1] > iv[0] for iv in intervals
    ):
        raise ConfigError(f"mesh.domain must be [lo, hi] or [[x0, x1], [y0, y1]], got {domain}")
    if mesh["solver"] not in ("direct", "cg"):
        raise ConfigError(f"mesh.solver must be 'direct' or 'cg', got {mesh['solver']}")

    time_section = dict(data["time"])
    if not time_section["t_end"] > time_section["t_start"]:
        raise ConfigError("time.t_end must exceed time.t_start")
    tau_disc = built.tau_disc()
    _check_tau("time.tau", time_section["tau"], tau_disc)

    try:
        boundary = BoundarySpec.from_dict(data["boundary"])
    except ValueError as e:
        raise ConfigError(f"Invalid boundary section: {e}")
    segments = {"all", "left", "right"} | ({"bottom", "top"} if len(intervals) == 2 else set())
    for variable, conditions in (("u", boundary.u), ("v", boundary.v)):
        for segment in conditions:
            if segment not in segments:
                raise ConfigError(f"Unknown configuration key: boundary.{variable}.{segment}")

    study_params = dict(data["study_params"])
    config = RunConfig(
        name=str(data["name"]),
        study=data["study"],
        model=model,
        mesh=mesh,
        time=time_section,
        scheme=scheme,
        boundary=copy.deepcopy(data["boundary"]),
        initial_condition=_resolve_initial_condition(data),
        output=dict(data["output"]),
        study_params=study_params,
    )
    for tau in config.study_taus():
        _check_tau("study_params.taus", tau, tau_disc)
    for h in config.study_hs():
        if not h > 0:
            raise ConfigError(f"study_params.hs must be positive, got {h}")
    for entry in study_params.get("schemes") or []:
        _check_keys("study_params.schemes", entry, SECTION_KEYS["scheme"])
    try:
        config.study_schemes()
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid study_params.schemes entry: {e}")
    if not int(study_params.get("workers", 1)) >= 1:
        raise ConfigError("study_params.workers must be at least 1")
    return config


def parse_config(
    text: Union[str, dict], overrides: Optional[Iterable[str]] = None
) -> RunConfig:
    """
    Parse, default-fill and validate a configuration document
    :param text: JSON text (or an already decoded document)
    :param overrides: "section.key=value" items applied on top of the document
    :return: validated configuration
    :raises ConfigError: naming the offending key
    """
    if isinstance(text, str):
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Configuration is not valid JSON: {e}")
    else:
        document = copy.deepcopy(text)
    if not isinstance(document, dict):
        raise ConfigError("Configuration must be a JSON object")
    document = apply_overrides(document, overrides or [])
    config = _build(_with_defaults(document))
    logger.debug(f"Parsed configuration '{config.name}' ({config.study}, {config.preset})")
    return config


def load_config(path: str, overrides: Optional[Iterable[str]] = None) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"Configuration file does not exist: {path}")
    with open(path) as f:
        return parse_config(f.read(), overrides)


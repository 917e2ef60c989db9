import json

import pytest

from conftest import get_config, get_config_file
from run_config import ConfigError, apply_overrides, load_config, parse_config


def test_minimal_pme_document_is_filled_with_defaults():
    config = parse_config({"model": {"preset": "pme"}})
    assert config.preset == "pme"
    assert config.model_params == {"m": 4.0, "beta_reaction": 1.0}
    assert config.scheme.gamma == pytest.approx(1.0 / 3.0)
    assert config.scheme.tol == 1e-5
    assert config.scheme.max_iter == 500
    assert config.time["t_start"] == 0.5
    assert config.initial_condition["type"] == "barenblatt"
    assert config.initial_condition["t0"] == 0.5
    assert config.study == "single"


def test_biofilm_preset_defaults():
    config = parse_config({"model": {"preset": "biofilm", "mu": 1, "k4": 0.42}})
    assert config.scheme.gamma == pytest.approx(0.25)
    assert config.scheme.M == 1e-2
    assert config.boundary["u"]["all"] == "neumann_zero"
    assert config.boundary["v"]["left"] == 1.0
    assert config.initial_condition["v0"] == 1.0
    assert config.boundary_spec().v_condition("left").value == 1.0


def test_explicit_file_value_overrides_preset_boundary():
    config = parse_config({"model": {"preset": "biofilm"}, "boundary": {"v": {"left": 0.5, "right": 1.0}}})
    assert config.boundary["v"] == {"left": 0.5, "right": 1.0}


def test_tau_must_stay_below_tau_disc():
    with pytest.raises(ConfigError, match="tau_disc"):
        parse_config({"model": {"preset": "pme"}, "time": {"tau": 1.0}})
    with pytest.raises(ConfigError, match="study_params.taus"):
        parse_config({"model": {"preset": "pme"}, "study_params": {"taus": [0.1, 2.0]}})


@pytest.mark.parametrize(
    "document, key",
    [
        ({"mesh": {"hh": 0.1}}, "mesh.hh"),
        ({"colour": "red"}, "colour"),
        ({"model": {"preset": "biofilm", "k9": 1}}, "model.k9"),
        ({"initial_condition": {"type": "zero", "radius": 1}}, "initial_condition.radius"),
        ({"boundary": {"v": {"top": 1.0}}}, "boundary.v.top"),
        ({"study_params": {"schemes": [{"type": "m", "MM": 1}]}}, "study_params.schemes.MM"),
    ],
)
def test_unknown_keys_are_named(document, key):
    with pytest.raises(ConfigError, match=f"Unknown configuration key: {key}"):
        parse_config(document)


@pytest.mark.parametrize(
    "document, message",
    [
        ({"mesh": {"h": 0}}, "mesh.h"),
        ({"mesh": {"domain": [1.0, -1.0]}}, "mesh.domain"),
        ({"mesh": {"solver": "lu"}}, "mesh.solver"),
        ({"time": {"t_start": 1.0, "t_end": 0.5}}, "t_end"),
        ({"study": "marathon"}, "Unknown study"),
        ({"model": {"preset": "heat"}}, "model.preset"),
        ({"scheme": {"type": "l"}}, "Invalid scheme section"),
        ({"initial_condition": {"type": "hemispheres", "height": 1}}, "Missing configuration key"),
        ({"study_params": {"hs": [0.1, -0.1]}}, "study_params.hs"),
        ({"study_params": {"workers": 0}}, "workers"),
    ],
)
def test_invalid_values(document, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(document)


def test_invalid_json():
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config("{")
    with pytest.raises(ConfigError, match="JSON object"):
        parse_config("[1, 2]")


def test_overrides_win_over_the_file():
    config = parse_config(
        {"model": {"preset": "pme"}, "time": {"tau": 0.05}},
        ["time.tau=0.02", "scheme.type=newton", "output.directory=results", "model.m=3"],
    )
    assert config.time["tau"] == 0.02
    assert config.scheme.type == "newton"
    assert config.scheme.gamma == pytest.approx(0.5)
    assert config.output["directory"] == "results"


def test_bad_overrides():
    with pytest.raises(ConfigError, match="key=value"):
        apply_overrides({}, ["time.tau"])
    with pytest.raises(ConfigError, match="Unknown configuration key: timing.tau"):
        apply_overrides({}, ["timing.tau=1"])
    with pytest.raises(ConfigError, match="non-section"):
        apply_overrides({"name": "x"}, ["name.first=y"])


def test_study_grids():
    config = parse_config({"study_params": {"tau_exponents": [-1, -2]}})
    assert config.study_taus() == pytest.approx([0.1, 0.01])
    assert config.study_hs() == [0.01]
    explicit = parse_config({"study_params": {"taus": [0.2], "hs": [0.1, 0.05]}})
    assert explicit.study_taus() == [0.2]
    assert explicit.study_hs() == [0.1, 0.05]
    assert parse_config({}).study_taus() == [0.01]


def test_sweep_schemes_inherit_the_main_scheme():
    config = parse_config({"scheme": {"tol": 1e-7}, "study_params": {"schemes": [{"type": "newton"}, {"M": 0.1}]}})
    newton, m_scheme = config.study_schemes()
    assert newton.type == "newton"
    assert newton.tol == 1e-7
    assert m_scheme.M == 0.1
    assert m_scheme.gamma == config.scheme.gamma


def test_round_trip():
    config = parse_config({"model": {"preset": "biofilm", "mu": 1}, "name": "trip"})
    assert parse_config(json.dumps(config.to_dict())) == config


def test_with_overrides():
    config = parse_config({})
    finer = config.with_overrides(mesh={"h": 0.005}, time={"tau": 0.02})
    assert finer.mesh["h"] == 0.005
    assert finer.time["tau"] == 0.02
    assert config.mesh["h"] == 0.01


@pytest.mark.parametrize(
    "name",
    [
        "pme_single",
        "pme_convergence",
        "pme_contraction",
        "pme_sweep",
        "biofilm_pde_ode",
        "biofilm_pde_pde",
        "biofilm_sweep",
        "biofilm_2d",
        "zero_ic",
        "nondegenerate",
    ],
)
def test_study_configs_are_valid(name):
    config = load_config(get_config_file(name))
    assert config.name == get_config(name)["name"]


def test_missing_file():
    with pytest.raises(ConfigError, match="does not exist"):
        load_config("/nonexistent/config.json")


def test_validate_paths(tmp_path):
    config = parse_config({}, [f"output.directory={tmp_path / 'out' / 'nested'}"])
    config.validate_paths()
    assert (tmp_path / "out" / "nested").is_dir()
    blocker = tmp_path / "file"
    blocker.write_text("")
    config = parse_config({}, [f"output.directory={blocker / 'sub'}"])
    with pytest.raises(ConfigError, match="not writable"):
        config.validate_paths()

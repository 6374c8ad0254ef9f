"""Config parsing: strict validation, typed getters, object builders."""

import math

import numpy as np
import pytest

from dbarheat import ConfigError, GridSpec, config_from_text, get_preset
from dbarheat.config import ExperimentConfig

MINIMAL = """
[experiment]
command = evolve
seed = 3

[grid]
extent = 6.0
points = 33

[weight]
kind = catalog
name = modsq

[stepper]
dt = 0.01

[schedule]
t_final = 1.0
count = 4
"""


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match=r"\[gird\]"):
        config_from_text("[gird]\nextent = 6\n")


def test_unknown_key_rejected_with_field_path():
    with pytest.raises(ConfigError, match=r"\[grid\] extnet"):
        config_from_text("[grid]\nextnet = 6\n")


def test_malformed_ini_rejected():
    with pytest.raises(ConfigError, match="cannot parse"):
        config_from_text("grid]\nextent = 6\n")


def test_typed_getters():
    cfg = config_from_text(MINIMAL)
    assert cfg.get_int("grid", "points") == 33
    assert cfg.get_float("grid", "extent") == 6.0
    assert cfg.get_str("experiment", "command") == "evolve"
    assert cfg.get_int("experiment", "seed") == 3
    assert cfg.get_float("kernel", "slack", 0.05) == 0.05
    with pytest.raises(ConfigError, match="required key missing"):
        cfg.get_float("kernel", "slack")
    with pytest.raises(ConfigError, match="cannot parse"):
        config_from_text("[grid]\npoints = 3.5\n").get_int("grid", "points")


def test_bool_and_float_list_parsing():
    cfg = config_from_text(
        "[audit]\nlambda_min = yes\nmatrix_dump = off\n"
        "[kernel]\ntimes = 0.1, 0.5 1\n")
    assert cfg.get_bool("audit", "lambda_min") is True
    assert cfg.get_bool("audit", "matrix_dump") is False
    assert cfg.get_floats("kernel", "times") == [0.1, 0.5, 1.0]
    with pytest.raises(ConfigError):
        config_from_text("[audit]\nlambda_min = maybe\n").get_bool(
            "audit", "lambda_min")


def test_overrides():
    cfg = config_from_text(MINIMAL)
    cfg.apply_overrides(["grid.points=65", "stepper.tol = 1e-9"])
    assert cfg.get_int("grid", "points") == 65
    assert cfg.get_float("stepper", "tol") == 1e-9
    with pytest.raises(ConfigError, match="section.key=value"):
        cfg.apply_overrides(["points=65"])
    with pytest.raises(ConfigError, match="unknown key"):
        cfg.apply_overrides(["grid.size=65"])


def test_grid_and_stepper_builders():
    cfg = config_from_text(MINIMAL)
    assert cfg.grid() == GridSpec(extent=6.0, points=33)
    st = cfg.stepper()
    assert st.dt == 0.01 and st.scheme == "crank_nicolson"
    assert st.tol == 1e-10 and st.max_iterations == 500


def test_schedule_builders():
    cfg = config_from_text(MINIMAL)
    assert np.allclose(cfg.schedule(), np.linspace(0.0, 1.0, 5))
    explicit = config_from_text("[schedule]\nsnapshots = 0.5 0.25 1.0\n")
    assert np.allclose(explicit.schedule(), [0.0, 0.25, 0.5, 1.0])
    with pytest.raises(ConfigError):
        config_from_text("[schedule]\nt_final = -1\n").schedule()


def test_datum_formulas():
    spec = GridSpec(extent=6.0, points=33)
    g = config_from_text(
        "[datum]\nkind = gaussian\namplitude = 0.5\nwidth = 2.0\n"
        "center_re = 1.0\ncenter_im = -1.0\n").datum(spec)
    zz = spec.nodes()
    want = 0.5 * np.exp(-np.abs(zz - (1 - 1j)) ** 2 / 4.0)
    assert np.max(np.abs(g.values - want)) == 0.0
    h = config_from_text(
        "[datum]\nkind = heavy_tail\namplitude = 0.05\nwidth = 0.2\n"
    ).datum(spec)
    want = 0.05 * (0.2**2 + np.abs(zz) ** 2) ** -0.5
    assert np.max(np.abs(h.values - want)) == 0.0
    with pytest.raises(ConfigError, match="kind"):
        config_from_text("[datum]\nkind = box\n").datum(spec)
    with pytest.raises(ConfigError, match="width"):
        config_from_text("[datum]\nwidth = 0\n").datum(spec)


def test_weight_builders():
    cfg = config_from_text(MINIMAL)
    assert cfg.weight().name == "modsq"
    poly = config_from_text(
        "[weight]\nkind = polynomial\nname = custom\n"
        "terms = 1 1 1.0 0.0\n    2 2 0.25 0.0\n")
    w = poly.weight()
    assert w.name == "custom"
    assert w.coeffs == {(1, 1): 1.0 + 0j, (2, 2): 0.25 + 0j}
    with pytest.raises(ConfigError, match="name"):
        config_from_text("[weight]\nname = nope\n").weight()
    with pytest.raises(ConfigError, match="terms"):
        config_from_text(
            "[weight]\nkind = polynomial\nterms = 1 1 1.0\n").weight()
    with pytest.raises(ConfigError, match="non-real"):
        config_from_text(
            "[weight]\nkind = polynomial\nterms = 2 0 1.0 0.0\n").weight()
    with pytest.raises(ConfigError, match="kind"):
        config_from_text("[weight]\nkind = table\n").weight()


def test_seed_override_precedence():
    cfg = config_from_text(MINIMAL)
    assert cfg.seed() == 3
    assert cfg.seed(11) == 11
    assert config_from_text("[grid]\nextent = 1\n").seed() == 0


def test_echo_round_trip():
    cfg = config_from_text(MINIMAL)
    cfg.set("stepper", "tol", "1e-12")
    again = config_from_text(cfg.echo())
    assert again.data == cfg.data


def test_presets_all_parse_and_declare_their_command():
    from dbarheat import preset_names
    for name in preset_names():
        cfg = get_preset(name)
        assert cfg.get_str("experiment", "command") in {
            "delta", "audit", "evolve", "kernel", "picard", "perturb",
            "lplq", "beta-check"}
    with pytest.raises(ConfigError, match="unknown preset"):
        get_preset("nope")

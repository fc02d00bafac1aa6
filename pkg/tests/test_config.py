import json

import numpy as np
import pytest

from pwlab.config import DEFAULTS, apply_overrides, build_starts, build_state, load_config, parse_override, tolerances
from pwlab.config import build_grid, build_model, build_potential
from pwlab.errors import ConfigInvalid


def test_defaults_validate():
    cfg = load_config(None)
    assert cfg["grid"]["points"] == DEFAULTS["grid"]["points"]


def test_override_parsing():
    assert parse_override("a.b=[1, 2]") == (["a", "b"], [1, 2])
    assert parse_override("kind=free") == (["kind"], "free")
    with pytest.raises(ConfigInvalid):
        parse_override("nothing")


def test_overrides_nest():
    cfg = apply_overrides({}, ["grid.points=[64]", "potential.kind=\"harmonic\""])
    assert cfg == {"grid": {"points": [64]}, "potential": {"kind": "harmonic"}}


def test_per_axis_defaults_follow_dimension():
    cfg = load_config(None, ["grid.points=[32,32]"])
    assert cfg["grid"]["lo"] == [-20.0, -20.0] and cfg["masses"] == [1.0, 1.0]
    assert cfg["state"]["sigma"] == [1.0, 1.0] and cfg["boost"]["v"] == [0.5, 0.5]


@pytest.mark.parametrize("override", ["grid.points=[20]", "bogus=1", "masses=[-1]", "state.kind=\"cat\"",
                                      "evolution.dt=0"])
def test_invalid_configs(override):
    with pytest.raises(ConfigInvalid):
        cfg = load_config(None, [override])
        build_grid(cfg)


def test_unreadable_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        load_config(p)


def test_seed_override_and_uniform_starts():
    a = load_config(None, ["starts.kind=\"uniform\""], seed=3)
    b = load_config(None, ["starts.kind=\"uniform\""], seed=3)
    g = build_grid(a)
    np.testing.assert_array_equal(build_starts(a, g), build_starts(b, g))
    assert a["seed"] == 3


def test_builders_produce_objects():
    cfg = load_config(None, ["grid.points=[128]", "potential={\"kind\":\"harmonic\",\"k\":[1.0]}",
                             "state.kind=\"harmonic_ground\""])
    g = build_grid(cfg)
    psi = build_state(cfg, g, build_model(cfg, g), build_potential(cfg))
    assert abs(psi.norm() - 1) < 1e-12


def test_harmonic_ground_needs_harmonic():
    cfg = load_config(None, ["state.kind=\"harmonic_ground\""])
    g = build_grid(cfg)
    with pytest.raises(ConfigInvalid):
        build_state(cfg, g, build_model(cfg, g), build_potential(cfg))


def test_tolerance_overrides():
    cfg = load_config(None, ["tolerances.max_gap=0.5"])
    assert tolerances(cfg, "boost-audit")["max_gap"] == 0.5

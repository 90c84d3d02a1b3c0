from __future__ import annotations

import json

import numpy as np
import pytest

from robot_impact.chain import contact_position, joint_space_inertia
from robot_impact.errors import ChainFileError
from robot_impact.io import (
    example_chain_path,
    example_scenario_path,
    load_example_chain,
    read_chain,
    read_scenario,
    write_chain,
    write_scenario,
)


def test_chain_round_trip(tmp_path, chain_factory, rng):
    model = chain_factory(6)
    write_chain(model, tmp_path / "c.json")
    back = read_chain(tmp_path / "c.json")
    q = rng.normal(size=6)
    np.testing.assert_allclose(joint_space_inertia(back, q), joint_space_inertia(model, q), atol=1e-12)
    np.testing.assert_allclose(contact_position(back, q), contact_position(model, q), atol=1e-12)
    write_chain(back, tmp_path / "d.json")
    assert json.loads((tmp_path / "d.json").read_text())["links"] == json.loads((tmp_path / "c.json").read_text())["links"]


def test_example_chain_is_labelled_and_valid():
    model = load_example_chain()
    assert model.dof == 7
    assert "not a Franka Panda" in model.name
    assert 15 < model.total_mass < 30


def _example():
    return json.loads(example_chain_path().read_text())


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.update(color="red"), "color"),
    (lambda d: d["links"][0].update(density=1.0), "density"),
    (lambda d: d["joints"][2]["origin"].update(rpy=[0, 0, 90.0]), "rpy"),
    (lambda d: d.update(units="deg"), "units"),
    (lambda d: d["links"][1].pop("mass"), "mass"),
    (lambda d: d["contact"].update(link="flange"), "contact.link"),
    (lambda d: d.update(schema_version=2), "schema_version"),
    (lambda d: d["joints"].pop(), "joints"),
    (lambda d: d["links"][3]["inertia"].update(izz=5.0), "links[3]"),
])
def test_chain_file_errors_name_the_field(tmp_path, mutate, field):
    data = _example()
    mutate(data)
    (tmp_path / "c.json").write_text(json.dumps(data))
    with pytest.raises(ChainFileError, match=field.replace("[", r"\[").replace("]", r"\]")):
        read_chain(tmp_path / "c.json")


def test_invalid_json_and_missing_file(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    with pytest.raises(ChainFileError):
        read_chain(tmp_path / "c.json")
    with pytest.raises(ChainFileError):
        read_chain(tmp_path / "missing.json")


def test_scenario_round_trip(tmp_path):
    s = read_scenario(example_scenario_path())
    assert s.chain().dof == len(s.q)
    write_scenario(s, tmp_path / "s.json")
    back = read_scenario(tmp_path / "s.json")
    assert back.chain_path == s.chain_path
    np.testing.assert_array_equal(back.q, s.q)
    assert (back.speed, back.e_r, back.velocities, back.contact_model) == (s.speed, s.e_r, s.velocities, s.contact_model)


@pytest.mark.parametrize("key, value", [("speed", -0.1), ("e_r", 1.5), ("shape", "x"), ("chain", "nope.json"),
                                        ("iim_method", "em"), ("q", "zero")])
def test_bad_scenario_rejected(tmp_path, key, value):
    data = json.loads(example_scenario_path().read_text())
    data["chain"] = str(example_chain_path())
    data[key] = value
    (tmp_path / "s.json").write_text(json.dumps(data))
    with pytest.raises(ChainFileError, match=key):
        read_scenario(tmp_path / "s.json")

import json

import numpy as np
import pytest

from toposq.errors import IntegrityError, ParseError, SchemaVersionError, UnknownPreset, UnknownState, ValidationError
from toposq.scenario_io import (
    PRESETS,
    build_model,
    load_model,
    load_scenario,
    preset,
    preset_model,
    save_model,
    scenario_from_dict,
    scenario_to_dict,
)
from toposq.truth import count_global_sections

MINIMAL = """
schema_version: 1
dim: 2
observables:
  Sz: [[1, 0], [0, -1]]
contexts:
  Vz: [Sz]
"""


def test_minimal_document():
    s = load_scenario(MINIMAL)
    assert s.dim == 2 and list(s.contexts) == ["Vz"] and s.closure == "subalgebras"


def test_full_document_with_complex_entries_and_states():
    doc = """
schema_version: 1
dim: 2
observables:
  Sy: [[0, [0, -1]], [[0, 1], 0]]
contexts:
  Vy: [Sy]
  Vp: [{projection: [[1, 0], [0, 0]]}]
closure: none
propositions:
  up: {observable: Sy, intervals: [[0.5, 2]]}
states:
  zero: [1, 0]
  mixed: {density: [[0.5, 0], [0, 0.5]]}
tolerances: {num: 1.0e-10}
"""
    s = load_scenario(doc)
    assert s.observables["Sy"][0, 1] == -1j
    assert s.states["zero"].ndim == 1 and s.states["mixed"].ndim == 2
    assert s.eps == 1e-10 and s.closure == "none"
    assert np.allclose(s.projection("up"), 0.5 * np.array([[1, -1j], [1j, 1]]))
    with pytest.raises(UnknownState):
        s.state("nope")


def test_json_is_accepted():
    doc = {"schema_version": 1, "dim": 2, "observables": {"Sz": [[1, 0], [0, -1]]}, "contexts": {"Vz": ["Sz"]}}
    assert load_scenario(json.dumps(doc)).dim == 2


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"observables": {"Sz": [[1, 2], [0, -1]]}}, "observables.Sz"),
        ({"contexts": {"Vz": ["Sq"]}}, "contexts.Vz[0]"),
        ({"dim": 1}, "dim"),
        ({"observables": {"Sz": [[1, 0], [0]]}}, "observables.Sz[1]"),
        ({"states": {"bad": [1, 1]}}, "states.bad.vector"),
        ({"states": {"bad": {"density": [[2, 0], [0, -1]]}}}, "states.bad.density"),
        ({"propositions": {"p": {"observable": "Sq", "intervals": [[0, 1]]}}}, "propositions.p.observable"),
        ({"propositions": {"p": {"observable": "Sz", "intervals": [[2, 1]]}}}, "propositions.p.intervals[0]"),
        ({"closure": "all"}, "closure"),
        ({"extra": 1}, "extra"),
        ({"contexts": {"Vz": [{"projection": [[1, 0], [0, 0.5]]}]}}, "contexts.Vz[0].projection"),
        ({"observables": {"Sz": [[1, 0], [0, -1]], "Sx": [[0, 1], [1, 0]]}, "contexts": {"Vz": ["Sz", "Sx"]}}, "contexts.Vz"),
        ({"observables": {"One": [[1, 0], [0, 1]]}, "contexts": {"Vz": ["One"]}}, "contexts.Vz"),
        ({"states": {"Sz": [1, 0]}}, "Sz"),
    ],
)
def test_validation_errors_name_the_field(patch, path):
    doc = {"schema_version": 1, "dim": 2, "observables": {"Sz": [[1, 0], [0, -1]]}, "contexts": {"Vz": ["Sz"]}}
    doc.update(patch)
    with pytest.raises(ValidationError) as exc:
        scenario_from_dict(doc)
    assert exc.value.path == path


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError, match="line 3"):
        load_scenario("schema_version: 1\ndim: 2\nobservables: {a: ]\n")
    with pytest.raises(ParseError, match="duplicate key 'dim'"):
        load_scenario("schema_version: 1\ndim: 2\ndim: 3\n")


def test_schema_version_is_enforced():
    with pytest.raises(SchemaVersionError):
        load_scenario(MINIMAL.replace("schema_version: 1", "schema_version: 2"))
    with pytest.raises(ValidationError):
        load_scenario(MINIMAL.replace("schema_version: 1", ""))


def test_presets():
    assert preset("qubit-zx").dim == 2
    assert len(preset("mermin-square").contexts) == 6
    assert len(preset_model("qutrit-chain").poset) == 4
    assert preset("ks-demo").report == {"ks_detail": True}
    with pytest.raises(UnknownPreset):
        preset("nope")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_scenario_dict_round_trip(name):
    s = preset(name)
    again = scenario_from_dict(scenario_to_dict(s))
    assert scenario_to_dict(again) == scenario_to_dict(s)


@pytest.mark.parametrize("name", ["qubit-zx", "qutrit-chain", "mermin-square", "qutrit-mub"])
def test_model_round_trip_is_exact(name):
    m = preset_model(name)
    text = save_model(m)
    back = load_model(text)
    assert back.poset.ids == m.poset.ids
    assert back.poset.arrows() == m.poset.arrows()
    for v in m.poset.ids:
        a, b = m.poset.context(v), back.poset.context(v)
        assert a.size == b.size
        assert all(np.array_equal(x, y) for x, y in zip(a.atoms, b.atoms))
    assert save_model(back) == text


def test_round_trip_preserves_section_count():
    back = load_model(save_model(preset_model("mermin-square")))
    assert count_global_sections(back.presheaf) == 0


def test_model_documents_are_deterministic():
    assert save_model(build_model(load_scenario(MINIMAL))) == save_model(build_model(load_scenario(MINIMAL)))
    assert save_model(preset_model("qutrit-chain")) == save_model(preset_model("qutrit-chain"))


def test_damaged_model_documents():
    text = save_model(preset_model("qutrit-chain"))
    with pytest.raises(IntegrityError):
        load_model(text[: len(text) // 2])
    with pytest.raises(IntegrityError):
        load_model(text.replace('"V3"', '"V4"', 1))
    with pytest.raises(ParseError):
        load_model("hello\n{}")
    with pytest.raises(SchemaVersionError):
        load_model(text.replace(" v1 ", " v9 ", 1))
    with pytest.raises(ParseError):
        load_model("")

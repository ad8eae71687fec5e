import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toposq import operators as ops
from toposq.daseinisation import daseinise
from toposq.errors import BadThreshold, DimensionMismatch, InconsistentData, NotPure, PresheafMismatch, Underdetermined
from toposq.measures import (
    DEFAULT_GRID,
    atom_probabilities,
    born_bridge,
    generalized_truth_object_component,
    measure,
    measure_from_family,
    reconstruct_state,
    support_of_measure,
    truth_object_family,
    verify_measure_axioms,
)
from toposq.spectrum import SpectralPresheaf
from toposq.subobjects import ClopenSubobject, bottom, enumerate_clopen, random_clopen, top
from toposq.truth import pseudo_state, truth_object_component, truth_value

from conftest import KET0, P0, PLUS, model

MIXED = np.eye(2) / 2


def test_measure_examples(poset_a):
    rho = ops.random_density(2, np.random.default_rng(0))
    assert measure(rho, top(poset_a)).values == {"Vz": 1.0, "Vx": 1.0}
    assert measure(rho, bottom(poset_a)).values == {"Vz": 0.0, "Vx": 0.0}
    mu = measure(MIXED, daseinise(P0, poset_a))
    assert mu["Vz"] == pytest.approx(0.5, abs=1e-15) and mu["Vx"] == 1.0
    with pytest.raises(DimensionMismatch):
        measure(np.eye(3) / 3, top(poset_a))


@pytest.mark.parametrize("rho", [ops.density_of(KET0), MIXED])
def test_axioms_on_poset_a(poset_a, rho):
    rep = verify_measure_axioms(rho, poset_a, 100, seed=1)
    assert rep.passed and rep.max_violation <= 1e-9 and rep.witness is None


def test_additivity_identity_for_equal_pair(poset_b):
    rng = np.random.default_rng(3)
    rho = ops.random_density(3, rng)
    s = random_clopen(poset_b, rng)
    mu = measure(rho, s)
    assert all(2 * mu[v] == mu[v] + mu[v] for v in poset_b.ids)


@pytest.mark.parametrize("name", ["qubit-zx", "qutrit-chain", "mermin-square"])
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_measures_are_antitone_and_normalised(name, seed):
    sig = model(name).presheaf
    rng = np.random.default_rng(seed)
    rho = ops.random_density(sig.dim, rng)
    s = random_clopen(sig, rng)
    assert measure(rho, s).is_antitone()
    assert all(abs(x - 1) <= 1e-9 for x in measure(rho, top(sig)).values.values())


def test_generalized_component_examples(poset_a):
    low = generalized_truth_object_component(MIXED, poset_a, 1e-9, "Vz")
    assert frozenset({0, 1}) in low and frozenset({0}) in low
    assert generalized_truth_object_component(ops.density_of(KET0), poset_a, 1.0, "Vz") == truth_object_component(
        KET0, poset_a, "Vz"
    ).members
    skew = np.diag([0.75, 0.25])
    assert generalized_truth_object_component(skew, poset_a, 0.8, "Vz") == {frozenset({0, 1})}
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(BadThreshold):
            generalized_truth_object_component(MIXED, poset_a, bad, "Vz")


def test_measure_from_family_examples(poset_a):
    grid = [k / 10 for k in range(1, 11)]
    fam = truth_object_family(MIXED, poset_a, grid)
    assert measure_from_family(fam, daseinise(P0, poset_a))["Vz"] == 0.5
    assert set(measure_from_family(fam, top(poset_a)).values.values()) == {1.0}
    assert set(measure_from_family(fam, bottom(poset_a)).values.values()) == {0.0}
    other = SpectralPresheaf(poset_a.poset)
    with pytest.raises(PresheafMismatch):
        measure_from_family(fam, top(other))


@pytest.mark.parametrize("name", ["qubit-zx", "qutrit-chain"])
def test_family_nesting_and_resolution(name):
    sig = model(name).presheaf
    rng = np.random.default_rng(8)
    for _ in range(5):
        rho = ops.random_density(sig.dim, rng)
        fam = truth_object_family(rho, sig)
        assert fam.is_nested() and fam.step == pytest.approx(0.05)
        for s in enumerate_clopen(sig):
            a, b = measure_from_family(fam, s), measure(rho, s)
            assert a.max_diff(b) <= fam.step + 1e-12


def test_support_examples(poset_a, poset_b):
    assert support_of_measure(KET0, poset_a) == pseudo_state(KET0, poset_a)
    assert support_of_measure(PLUS, poset_a).components == {"Vz": {0, 1}, "Vx": {0}}
    assert support_of_measure(np.array([1, 0, 0]), poset_b).component("V3") == {0}
    assert support_of_measure(ops.density_of(PLUS), poset_a) == pseudo_state(PLUS, poset_a)
    with pytest.raises(NotPure):
        support_of_measure(MIXED, poset_a)


@pytest.mark.parametrize("name", ["qubit-zx", "qutrit-chain"])
def test_bridge_between_measure_and_truth(name):
    sig = model(name).presheaf
    rng = np.random.default_rng(21)
    states = [ops.random_pure_state(sig.dim, rng) for _ in range(4)]
    states += [np.linalg.eigh(a)[1][:, -1] for v in sig.poset.contexts for a in v.atoms]
    for psi in states:
        assert support_of_measure(psi, sig) == pseudo_state(psi, sig)
        for s in enumerate_clopen(sig):
            mu = measure(psi, s)
            ones = {v for v in sig.ids if mu[v] >= 1 - 1e-9}
            assert ones == set(truth_value(psi, s).true_at())


def test_reconstruct_qubit_round_trip():
    sig = model("qubit-mub").presheaf
    rho = np.diag([0.75, 0.25])
    rec = reconstruct_state(sig, atom_probabilities(rho, sig))
    assert ops.max_norm(rec.rho - rho) <= 1e-6
    flat = {k: 0.5 for k in atom_probabilities(rho, sig)}
    assert ops.max_norm(reconstruct_state(sig, flat).rho - MIXED) <= 1e-9


def test_reconstruct_rejects_partial_and_inconsistent_data():
    sig = model("qubit-mub").presheaf
    probs = atom_probabilities(MIXED, sig)
    with pytest.raises(Underdetermined):
        reconstruct_state(sig, {k: p for k, p in probs.items() if k[0] == "B0"})
    bad = dict(probs)
    bad[("B0", 0)], bad[("B0", 1)] = 0.9, 0.3
    with pytest.raises(InconsistentData):
        reconstruct_state(sig, bad)
    skew = dict(probs)
    skew[("B0", 0)], skew[("B0", 1)] = 1.0, 0.0
    skew[("B1", 0)], skew[("B1", 1)] = 1.0, 0.0
    skew[("B2", 0)], skew[("B2", 1)] = 1.0, 0.0
    with pytest.raises(InconsistentData):
        reconstruct_state(sig, skew)


def test_born_bridge_examples(poset_a):
    out = born_bridge(PLUS, P0, poset_a)
    assert out["Vz"] == (pytest.approx(0.5), pytest.approx(0.5))
    assert out["Vx"] == (pytest.approx(1.0), pytest.approx(1.0))

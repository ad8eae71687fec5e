"""Scenario documents, built-in presets, and model persistence.

A scenario is a YAML (or JSON) document::

    schema_version: 1
    dim: 2
    observables:
      Sz: [[1, 0], [0, -1]]          # entries: number or [re, im]
    contexts:
      Vz: [Sz]                       # observable names or {projection: matrix}
    closure: subalgebras             # or: none
    propositions:
      SzUp: {observable: Sz, intervals: [[1, 1]]}
    states:
      zero: {vector: [1, 0]}
      mixed: {density: [[0.5, 0], [0, 0.5]]}
    tolerances: {num: 1.0e-9, cluster: 1.0e-7}   # optional

A model document is one header line carrying a SHA-256 of the body,
followed by a canonical JSON body with the scenario, the contexts and
their atoms, the proper inclusions, and the spectrum sizes.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from . import operators as ops
from .contexts import CLOSURE_POLICIES, Context, ContextPoset, build_poset, generate_context, order_poset
from .errors import (
    IntegrityError,
    ParseError,
    SchemaVersionError,
    ToposqError,
    UnknownPreset,
    UnknownProposition,
    UnknownState,
    ValidationError,
)
from .spectrum import SpectralPresheaf

SCHEMA_VERSION = 1
MODEL_SCHEMA_VERSION = 1
MODEL_MAGIC = "toposq-model"


@dataclass(frozen=True)
class Proposition:
    observable: str
    intervals: tuple[tuple[float, float], ...]

    def text(self) -> str:
        return f"{self.observable} in " + ",".join(f"[{_num(a)},{_num(b)}]" for a, b in self.intervals)


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass(frozen=True, eq=False)
class Scenario:
    dim: int
    observables: dict[str, np.ndarray]
    contexts: dict[str, list]  # generator refs: observable name or ("projection", matrix)
    closure: str
    propositions: dict[str, Proposition]
    states: dict[str, np.ndarray]  # 1-d: pure vector, 2-d: density matrix
    tolerances: dict[str, float] = field(default_factory=dict)
    report: dict[str, Any] = field(default_factory=dict)
    name: str = ""

    @property
    def eps(self) -> float:
        return self.tolerances.get("num", ops.EPS_NUM)

    @property
    def eps_cluster(self) -> float:
        return self.tolerances.get("cluster", ops.EPS_CLUSTER)

    def projection(self, name: str) -> np.ndarray:
        try:
            prop = self.propositions[name]
        except KeyError:
            raise UnknownProposition(name) from None
        return self.spectral(prop.observable, prop.intervals)

    def spectral(self, observable: str, intervals) -> np.ndarray:
        try:
            a = self.observables[observable]
        except KeyError:
            raise UnknownProposition(f"unknown observable {observable!r}") from None
        return ops.spectral_projection(a, intervals, self.eps, self.eps_cluster)

    def state(self, name: str) -> np.ndarray:
        try:
            return self.states[name]
        except KeyError:
            raise UnknownState(name) from None

    def generators(self, cid: str) -> list[np.ndarray]:
        out = []
        for ref in self.contexts[cid]:
            if isinstance(ref, str):
                out.extend(e for _, e in ops.spectral_decompose(self.observables[ref], self.eps, self.eps_cluster))
            else:
                out.append(ref[1])
        return out


# parsing

class _UniqueKeyLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node, deep=False):
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            mark = key_node.start_mark
            raise ParseError(f"line {mark.line + 1}, column {mark.column + 1}: duplicate key {key!r}")
        seen.add(key)
    return loader.construct_mapping(node, deep=deep)


_UniqueKeyLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def parse_document(text: str) -> Any:
    try:
        return yaml.load(text, Loader=_UniqueKeyLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ParseError(f"{where}{exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from None


def _entry(x, path: str) -> complex:
    if isinstance(x, bool):
        raise ValidationError(path, "expected a number or [re, im] pair")
    if isinstance(x, (int, float)):
        return complex(float(x), 0.0)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in x):
        return complex(float(x[0]), float(x[1]))
    raise ValidationError(path, "expected a number or [re, im] pair")


def _vector(x, dim: int, path: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != dim:
        raise ValidationError(path, f"expected a list of {dim} entries")
    return np.array([_entry(e, f"{path}[{i}]") for i, e in enumerate(x)], dtype=complex)


def _matrix(x, dim: int, path: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != dim:
        raise ValidationError(path, f"expected {dim} rows")
    return np.array([_vector(row, dim, f"{path}[{i}]") for i, row in enumerate(x)], dtype=complex)


def _mapping(doc, key: str, required: bool = True) -> dict:
    val = doc.get(key)
    if val is None:
        if required:
            raise ValidationError(key, "missing required section")
        return {}
    if not isinstance(val, dict):
        raise ValidationError(key, "expected a mapping")
    return val


def _check_matrix(check, m, path: str, eps: float):
    try:
        return check(m, eps)
    except ToposqError as exc:
        raise ValidationError(path, str(exc)) from None


def scenario_from_dict(doc: Any, name: str = "") -> Scenario:
    if not isinstance(doc, dict):
        raise ValidationError("<root>", "scenario document must be a mapping")
    version = doc.get("schema_version")
    if version is None:
        raise ValidationError("schema_version", "missing required field")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported scenario schema_version {version!r} (supported: {SCHEMA_VERSION})")
    known = {"schema_version", "dim", "observables", "contexts", "closure", "propositions", "states", "tolerances", "report", "name"}
    for key in doc:
        if key not in known:
            raise ValidationError(str(key), "unknown field")

    tol = _mapping(doc, "tolerances", required=False)
    tolerances = {}
    for key, val in tol.items():
        if key not in ("num", "cluster"):
            raise ValidationError(f"tolerances.{key}", "unknown tolerance (expected num or cluster)")
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not 0 < val < 1:
            raise ValidationError(f"tolerances.{key}", "expected a number in (0, 1)")
        tolerances[key] = float(val)
    eps = tolerances.get("num", ops.EPS_NUM)

    dim = doc.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
        raise ValidationError("dim", "expected an integer >= 2")

    observables = {}
    for oname, m in _mapping(doc, "observables", required=False).items():
        path = f"observables.{oname}"
        observables[str(oname)] = _check_matrix(ops.as_observable, _matrix(m, dim, path), path, eps)

    contexts: dict[str, list] = {}
    for cid, refs in _mapping(doc, "contexts").items():
        path = f"contexts.{cid}"
        if not isinstance(refs, list) or not refs:
            raise ValidationError(path, "expected a nonempty list of generators")
        resolved = []
        for i, ref in enumerate(refs):
            rpath = f"{path}[{i}]"
            if isinstance(ref, str):
                if ref not in observables:
                    raise ValidationError(rpath, f"unknown observable {ref!r}")
                resolved.append(ref)
            elif isinstance(ref, dict) and set(ref) == {"projection"}:
                p = _check_matrix(ops.as_projection, _matrix(ref["projection"], dim, f"{rpath}.projection"), f"{rpath}.projection", eps)
                resolved.append(("projection", p))
            else:
                raise ValidationError(rpath, "expected an observable name or {projection: matrix}")
        contexts[str(cid)] = resolved

    closure = doc.get("closure", "subalgebras")
    if closure not in CLOSURE_POLICIES:
        raise ValidationError("closure", f"expected one of {list(CLOSURE_POLICIES)}")

    propositions = {}
    for pname, spec in _mapping(doc, "propositions", required=False).items():
        path = f"propositions.{pname}"
        if not isinstance(spec, dict) or set(spec) != {"observable", "intervals"}:
            raise ValidationError(path, "expected {observable: name, intervals: [[a, b], ...]}")
        if spec["observable"] not in observables:
            raise ValidationError(f"{path}.observable", f"unknown observable {spec['observable']!r}")
        ivs = spec["intervals"]
        if not isinstance(ivs, list) or not ivs:
            raise ValidationError(f"{path}.intervals", "expected a nonempty list of [a, b] pairs")
        parsed = []
        for i, iv in enumerate(ivs):
            ipath = f"{path}.intervals[{i}]"
            if not (isinstance(iv, list) and len(iv) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in iv)):
                raise ValidationError(ipath, "expected [a, b]")
            a, b = float(iv[0]), float(iv[1])
            if not (math.isfinite(a) and math.isfinite(b)) or a > b:
                raise ValidationError(ipath, "expected finite a <= b")
            parsed.append((a, b))
        propositions[str(pname)] = Proposition(spec["observable"], tuple(parsed))

    states = {}
    for sname, spec in _mapping(doc, "states", required=False).items():
        path = f"states.{sname}"
        if isinstance(spec, list):
            spec = {"vector": spec}
        if not isinstance(spec, dict) or len(spec) != 1 or next(iter(spec)) not in ("vector", "density"):
            raise ValidationError(path, "expected {vector: [...]} or {density: [[...]]}")
        if "vector" in spec:
            states[str(sname)] = _check_matrix(ops.as_pure_state, _vector(spec["vector"], dim, f"{path}.vector"), f"{path}.vector", eps)
        else:
            states[str(sname)] = _check_matrix(ops.as_density, _matrix(spec["density"], dim, f"{path}.density"), f"{path}.density", eps)

    report = doc.get("report") or {}
    if not isinstance(report, dict):
        raise ValidationError("report", "expected a mapping")

    names = list(observables) + list(contexts) + list(propositions) + list(states)
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ValidationError(dupes[0], "name used in more than one section")

    scenario = Scenario(
        dim, observables, contexts, closure, propositions, states, tolerances, dict(report), str(doc.get("name", name))
    )
    # generators must commute and produce a nontrivial algebra
    for cid in contexts:
        try:
            generate_context(scenario.generators(cid), cid, eps)
        except ToposqError as exc:
            raise ValidationError(f"contexts.{cid}", str(exc)) from None
    return scenario


def load_scenario(text: str, name: str = "") -> Scenario:
    return scenario_from_dict(parse_document(text), name)


def _enc_entry(z: complex):
    return [float(z.real), float(z.imag)]


def _enc_matrix(m: np.ndarray):
    return [[_enc_entry(z) for z in row] for row in m]


def scenario_to_dict(s: Scenario) -> dict:
    contexts = {}
    for cid, refs in s.contexts.items():
        contexts[cid] = [r if isinstance(r, str) else {"projection": _enc_matrix(r[1])} for r in refs]
    states = {}
    for k, v in s.states.items():
        states[k] = {"vector": [_enc_entry(z) for z in v]} if v.ndim == 1 else {"density": _enc_matrix(v)}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "dim": s.dim,
        "observables": {k: _enc_matrix(v) for k, v in s.observables.items()},
        "contexts": contexts,
        "closure": s.closure,
        "propositions": {
            k: {"observable": p.observable, "intervals": [list(iv) for iv in p.intervals]}
            for k, p in s.propositions.items()
        },
        "states": states,
    }
    if s.tolerances:
        doc["tolerances"] = dict(s.tolerances)
    if s.report:
        doc["report"] = dict(s.report)
    return doc


# models

@dataclass(frozen=True, eq=False)
class Model:
    scenario: Scenario
    poset: ContextPoset
    presheaf: SpectralPresheaf


def build_model(scenario: Scenario) -> Model:
    generating = [generate_context(scenario.generators(cid), cid, scenario.eps) for cid in scenario.contexts]
    poset = build_poset(generating, scenario.closure, scenario.eps)
    return Model(scenario, poset, SpectralPresheaf(poset))


def _model_body(model: Model) -> dict:
    poset = model.poset
    return {
        "metadata": {"schema_version": MODEL_SCHEMA_VERSION, "format": MODEL_MAGIC},
        "scenario": scenario_to_dict(model.scenario),
        "contexts": [{"id": c.id, "atoms": [_enc_matrix(a) for a in c.atoms]} for c in poset.contexts],
        "order": [list(e) for e in poset.arrows()],
        "spectra": {c.id: c.size for c in poset.contexts},
    }


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def model_checksum(model: Model) -> str:
    return hashlib.sha256(_canonical_json(_model_body(model)).encode()).hexdigest()


def save_model(model: Model) -> str:
    body = _canonical_json(_model_body(model))
    digest = hashlib.sha256(body.encode()).hexdigest()
    return f"{MODEL_MAGIC} v{MODEL_SCHEMA_VERSION} sha256={digest}\n{body}\n"


def load_model(text: str) -> Model:
    header, sep, body = text.partition("\n")
    parts = header.split()
    if len(parts) != 3 or parts[0] != MODEL_MAGIC or not parts[2].startswith("sha256="):
        raise ParseError("not a toposq model document (bad header line)")
    if parts[1] != f"v{MODEL_SCHEMA_VERSION}":
        raise SchemaVersionError(f"unsupported model version {parts[1]!r}")
    body = body.rstrip("\n")
    if not sep or hashlib.sha256(body.encode()).hexdigest() != parts[2][len("sha256="):]:
        raise IntegrityError("model body does not match its checksum (truncated or modified)")
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model body: {exc}") from None
    if doc.get("metadata", {}).get("schema_version") != MODEL_SCHEMA_VERSION:
        raise SchemaVersionError("unsupported model body schema version")
    scenario = scenario_from_dict(doc["scenario"])
    contexts = []
    for entry in doc["contexts"]:
        atoms = tuple(ops._frozen(np.array([[complex(*z) for z in row] for row in a])) for a in entry["atoms"])
        contexts.append(Context(entry["id"], atoms))
    poset = order_poset(contexts, scenario.eps)
    if [list(e) for e in poset.arrows()] != doc["order"]:
        raise IntegrityError("stored order relation disagrees with the stored atoms")
    if {c.id: c.size for c in poset.contexts} != doc["spectra"]:
        raise IntegrityError("stored spectra disagree with the stored atoms")
    return Model(scenario, poset, SpectralPresheaf(poset))


# presets

def _pauli():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    return np.eye(2, dtype=complex), x, y, z


def _qubit_zx() -> dict:
    _, x, _, z = _pauli()
    h = 1 / math.sqrt(2)
    return {
        "schema_version": 1,
        "name": "qubit-zx",
        "dim": 2,
        "observables": {"Sz": _enc_matrix(z), "Sx": _enc_matrix(x)},
        "contexts": {"Vz": ["Sz"], "Vx": ["Sx"]},
        "closure": "subalgebras",
        "propositions": {
            "SzUp": {"observable": "Sz", "intervals": [[1, 1]]},
            "SzDown": {"observable": "Sz", "intervals": [[-1, -1]]},
            "SxUp": {"observable": "Sx", "intervals": [[1, 1]]},
            "SxDown": {"observable": "Sx", "intervals": [[-1, -1]]},
        },
        "states": {
            "zero": {"vector": [1, 0]},
            "one": {"vector": [0, 1]},
            "plus": {"vector": [h, h]},
            "minus": {"vector": [h, -h]},
            "mixed": {"density": [[0.5, 0], [0, 0.5]]},
        },
    }


def _qutrit_chain() -> dict:
    h = 1 / math.sqrt(2)
    u = 1 / math.sqrt(3)
    return {
        "schema_version": 1,
        "name": "qutrit-chain",
        "dim": 3,
        "observables": {"A": [[1, 0, 0], [0, 2, 0], [0, 0, 3]]},
        "contexts": {"V3": ["A"]},
        "closure": "subalgebras",
        "propositions": {
            "A1": {"observable": "A", "intervals": [[1, 1]]},
            "A2": {"observable": "A", "intervals": [[2, 2]]},
            "A3": {"observable": "A", "intervals": [[3, 3]]},
            "Ahigh": {"observable": "A", "intervals": [[1.5, 3.5]]},
            "Aodd": {"observable": "A", "intervals": [[1, 1], [3, 3]]},
        },
        "states": {
            "e1": {"vector": [1, 0, 0]},
            "e2": {"vector": [0, 1, 0]},
            "e3": {"vector": [0, 0, 1]},
            "s12": {"vector": [h, h, 0]},
            "uniform": {"vector": [u, u, u]},
            "mixed": {"density": [[0.5, 0, 0], [0, 0.25, 0], [0, 0, 0.25]]},
        },
    }


MERMIN_LAYOUT = (("XI", "IX", "XX"), ("IY", "YI", "YY"), ("XY", "YX", "ZZ"))


def _mermin_square() -> dict:
    paulis = dict(zip("IXYZ", _pauli()))
    observables = {}
    for row in MERMIN_LAYOUT:
        for name in row:
            observables[name] = _enc_matrix(np.kron(paulis[name[0]], paulis[name[1]]))
    contexts = {}
    for i, row in enumerate(MERMIN_LAYOUT):
        contexts[f"R{i + 1}"] = list(row)
    for j in range(3):
        contexts[f"C{j + 1}"] = [MERMIN_LAYOUT[i][j] for i in range(3)]
    h = 1 / math.sqrt(2)
    return {
        "schema_version": 1,
        "name": "mermin-square",
        "dim": 4,
        "observables": observables,
        "contexts": contexts,
        "closure": "subalgebras",
        "propositions": {
            f"{n}up": {"observable": n, "intervals": [[1, 1]]} for row in MERMIN_LAYOUT for n in row
        },
        "states": {
            "s00": {"vector": [1, 0, 0, 0]},
            "bell": {"vector": [h, 0, 0, h]},
            "mixed": {"density": (np.eye(4) / 4).real.tolist()},
        },
    }


def _ks_demo() -> dict:
    doc = _mermin_square()
    doc["name"] = "ks-demo"
    doc["report"] = {"ks_detail": True}
    return doc


def _mub_vectors(dim: int) -> list[list[np.ndarray]]:
    """Complete set of mutually unbiased bases for dim 2 or an odd prime."""
    if dim == 2:
        h = 1 / math.sqrt(2)
        return [
            [np.array([1, 0]), np.array([0, 1])],
            [np.array([h, h]), np.array([h, -h])],
            [np.array([h, 1j * h]), np.array([h, -1j * h])],
        ]
    omega = np.exp(2j * np.pi / dim)
    bases = [[np.eye(dim)[k] for k in range(dim)]]
    for k in range(dim):
        bases.append([
            np.array([omega ** (k * j * j + m * j) for j in range(dim)]) / math.sqrt(dim)
            for m in range(dim)
        ])
    return bases


def _mub_preset(dim: int, name: str) -> dict:
    contexts = {}
    for b, basis in enumerate(_mub_vectors(dim)):
        contexts[f"B{b}"] = [{"projection": _enc_matrix(np.outer(v, v.conj()))} for v in basis[:-1]]
    e0 = [1] + [0] * (dim - 1)
    return {
        "schema_version": 1,
        "name": name,
        "dim": dim,
        "observables": {},
        "contexts": contexts,
        "closure": "subalgebras",
        "propositions": {},
        "states": {"e0": {"vector": e0}, "mixed": {"density": (np.eye(dim) / dim).tolist()}},
    }


PRESETS = {
    "qubit-zx": _qubit_zx,
    "qutrit-chain": _qutrit_chain,
    "mermin-square": _mermin_square,
    "ks-demo": _ks_demo,
    "qubit-mub": lambda: _mub_preset(2, "qubit-mub"),
    "qutrit-mub": lambda: _mub_preset(3, "qutrit-mub"),
}


def preset(name: str) -> Scenario:
    try:
        doc = PRESETS[name]()
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return scenario_from_dict(doc, name)


def preset_model(name: str) -> Model:
    return build_model(preset(name))


def states_as_density(scenario: Scenario) -> dict[str, np.ndarray]:
    return {k: (ops.rank_one(v) if v.ndim == 1 else v) for k, v in scenario.states.items()}


def describe_model(model: Model) -> Mapping[str, int]:
    return {
        "contexts": len(model.poset),
        "arrows": len(model.poset.arrows()),
        "characters": model.presheaf.n_characters,
        "generating_contexts": len(model.scenario.contexts),
    }

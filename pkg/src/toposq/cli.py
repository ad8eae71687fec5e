"""Command-line front end: ``toposq build | truth | measure | ks | axioms | daseinise``.

Exit codes: 0 success, 1 a checked property failed, 2 bad input.
``--format json`` prints the machine report; the default is aligned text.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import checks
from . import operators as ops
from .errors import NotPure, ParseError, ToposqError
from .measures import born_bridge, measure
from .propositions import atom_projection, evaluate, is_atomic, parse_expression, render
from .scenario_io import (
    PRESETS,
    Model,
    build_model,
    describe_model,
    load_model,
    load_scenario,
    model_checksum,
    preset_model,
    save_model,
    states_as_density,
)
from .subobjects import alpha_inverse
from .truth import count_global_sections, global_section_search, largest_consistent_family, never_totally_true, truth_value

EXIT_OK, EXIT_PROPERTY, EXIT_INPUT = 0, 1, 2
BRIDGE_SAMPLES = 20
RANDOM_DENSITIES = 5


class Report:
    """Command echo, model identity, results, diagnostics and (optionally) timing."""

    def __init__(self, command: str, args: dict, model: Model | None):
        self.command = command
        self.args = args
        self.model = model
        self.results: dict = {}
        self.diagnostics: list[str] = []
        self.failed = False
        self.elapsed: float | None = None

    def as_dict(self) -> dict:
        out = {
            "command": self.command,
            "arguments": self.args,
            "results": self.results,
            "diagnostics": self.diagnostics,
            "status": "fail" if self.failed else "ok",
        }
        if self.model is not None:
            out["model"] = {"name": self.model.scenario.name, "sha256": model_checksum(self.model)}
        if self.elapsed is not None:
            out["timing"] = {"seconds": self.elapsed}
        return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (frozenset, set)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    return x


def _matrix(m: np.ndarray) -> list:
    """Real matrices as plain rows, complex ones as [re, im] entries."""
    m = np.asarray(m)
    if np.all(m.imag == 0):
        return [[float(z.real) for z in row] for row in m]
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("TOPOSQ_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ParseError(f"TOPOSQ_SEED must be an integer, got {env!r}") from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from None


def _model(args) -> Model:
    if getattr(args, "preset", None):
        return preset_model(args.preset)
    if getattr(args, "model", None):
        return load_model(_read(args.model))
    raise ParseError("give --model PATH or --preset NAME")


def _sieve_text(members) -> str:
    return "{" + ", ".join(sorted(members)) + "}"


# commands

def cmd_build(args) -> Report:
    if args.preset and args.scenario:
        raise ParseError("give a scenario path or --preset, not both")
    if args.preset:
        model = preset_model(args.preset)
    elif args.scenario:
        model = build_model(load_scenario(_read(args.scenario), Path(args.scenario).stem))
    else:
        raise ParseError("give a scenario path or --preset NAME")
    rep = Report("build", {"scenario": args.scenario, "preset": args.preset, "out": args.out}, model)
    rep.results = {
        "counts": dict(describe_model(model)),
        "contexts": [{"id": c.id, "atoms": c.size} for c in model.poset.contexts],
    }
    if args.out:
        Path(args.out).write_text(save_model(model), encoding="utf-8")
        rep.results["written"] = args.out
    return rep


def _text_build(r: dict) -> list[str]:
    c = r["results"]["counts"]
    lines = [
        f"model {r['model']['name']}  sha256 {r['model']['sha256']}",
        f"contexts {c['contexts']}  arrows {c['arrows']}  characters {c['characters']}",
        "",
    ]
    lines += _table(["context", "atoms"], [[e["id"], e["atoms"]] for e in r["results"]["contexts"]])
    if "written" in r["results"]:
        lines.append(f"written to {r['results']['written']}")
    return lines


def _pure(model: Model, name: str) -> np.ndarray:
    s = model.scenario.state(name)
    if s.ndim == 1:
        return s
    vals, vecs = np.linalg.eigh(s)
    if np.sum(vals > ops.EPS_NUM) != 1:
        raise NotPure(f"state {name!r} is mixed; truth values need a pure state")
    return vecs[:, -1]


def cmd_truth(args) -> Report:
    model = _model(args)
    rep = Report("truth", {"state": args.state, "prop": args.prop}, model)
    node = parse_expression(args.prop)
    s = evaluate(node, model)
    psi = _pure(model, args.state)
    tv = truth_value(psi, s)
    poset = model.poset
    rows = []
    for vid in poset.ids:
        rows.append({
            "context": vid,
            "true": vid in tv[vid].members,
            "sieve": sorted(tv[vid].members),
            "component": sorted(s.component(vid)),
        })
    unsat = never_totally_true(s)
    rep.results = {
        "proposition": render(node),
        "contexts": rows,
        "totally_true": tv.is_top(),
        "totally_false": tv.is_bottom(),
        "true_at": tv.true_at(),
        "totally_true_in_some_state": not unsat,
    }
    if unsat:
        proper = [vid for vid in poset.ids if s.component(vid) != frozenset(range(poset.context(vid).size))]
        rep.diagnostics.append(
            "never totally true: the projections of its components at "
            + ", ".join(proper)
            + " have zero common range, so no pseudo-state lies below it"
        )
    return rep


def _text_truth(r: dict) -> list[str]:
    res = r["results"]
    verdict = "totally true" if res["totally_true"] else "totally false" if res["totally_false"] else "partially true"
    lines = [f"proposition {res['proposition']}  state {r['arguments']['state']}: {verdict}", ""]
    lines += _table(
        ["context", "true", "component", "sieve"],
        [[e["context"], "yes" if e["true"] else "no", _sieve_text(map(str, e["component"])), _sieve_text(e["sieve"])]
         for e in res["contexts"]],
    )
    return lines


def cmd_measure(args) -> Report:
    model = _model(args)
    seed = _seed(args.seed)
    rep = Report("measure", {"state": args.state, "prop": args.prop, "seed": seed}, model)
    node = parse_expression(args.prop)
    s = evaluate(node, model)
    state = model.scenario.state(args.state)
    mu = measure(state, s)
    rows = [{"context": vid, "value": mu[vid]} for vid in model.poset.ids]
    violation = mu.antitone_violation()
    rep.results = {"proposition": render(node), "values": rows, "antitone": violation <= 1e-9, "antitone_violation": violation}
    if violation > 1e-9:
        rep.failed = True
        rep.diagnostics.append(f"antitonicity violated by {violation!r}")

    def bridge_ok(psi) -> bool:
        m = measure(psi, s)
        ones = {vid for vid in model.poset.ids if m[vid] >= 1.0 - ops.EPS_NUM}
        return ones == set(truth_value(psi, s).true_at())

    rng = np.random.default_rng(seed)
    randoms = [ops.random_pure_state(model.scenario.dim, rng) for _ in range(BRIDGE_SAMPLES)]
    bad = sum(1 for psi in randoms if not bridge_ok(psi))
    own = bridge_ok(state) if state.ndim == 1 else None
    consistent = bad == 0 and own is not False
    rep.results["bridge"] = {
        "state_checked": own is not None,
        "random_states": BRIDGE_SAMPLES,
        "mismatches": bad + (own is False),
        "verdict": "consistent" if consistent else "inconsistent",
    }
    if is_atomic(node) and state.ndim == 1:
        p = atom_projection(node, model)
        rep.results["born"] = [
            {"context": vid, "measure": a, "expectation": b} for vid, (a, b) in born_bridge(state, p, model.presheaf).items()
        ]
    if not consistent:
        rep.failed = True
        rep.diagnostics.append("contexts of measure 1 differ from the contexts where the truth value is maximal")
    return rep


def _text_measure(r: dict) -> list[str]:
    res = r["results"]
    lines = [f"measure of {res['proposition']} in state {r['arguments']['state']}", ""]
    lines += _table(["context", "value"], [[e["context"], repr(e["value"])] for e in res["values"]])
    lines.append("")
    lines.append("antitone: " + ("yes" if res["antitone"] else f"no (violation {res['antitone_violation']!r})"))
    b = res["bridge"]
    lines.append(f"bridge to truth values: {b['verdict']} ({b['random_states']} random pure states"
                 + (", plus the given state)" if b["state_checked"] else ")"))
    return lines


def cmd_ks(args) -> Report:
    model = _model(args)
    rep = Report("ks", {}, model)
    presheaf = model.presheaf
    count = count_global_sections(presheaf)
    least = global_section_search(presheaf)
    rep.results = {
        "global_sections": count,
        "least_section": None if least is None else {vid: ch.index for vid, ch in least.items()},
        "contexts": len(model.poset),
        "characters": presheaf.n_characters,
    }
    if model.scenario.report.get("ks_detail"):
        fam = largest_consistent_family(presheaf)
        rep.results["detail"] = {
            "maximal_contexts": model.poset.maximal(),
            "largest_consistent_family": list(fam),
            "excluded": [v for v in model.poset.maximal() if v not in fam],
        }
    if count == 0:
        rep.diagnostics.append("no global section: no consistent choice of one character per context exists")
    return rep


def _text_ks(r: dict) -> list[str]:
    res = r["results"]
    lines = [f"global sections: {res['global_sections']}  ({res['contexts']} contexts, {res['characters']} characters)"]
    if res["least_section"] is not None:
        lines += ["", "least section:"]
        lines += _table(["context", "character"], [[k, v] for k, v in res["least_section"].items()])
    if "detail" in res:
        d = res["detail"]
        lines.append("")
        lines.append("largest consistent family of maximal contexts: " + ", ".join(d["largest_consistent_family"]))
        lines.append("excluded: " + (", ".join(d["excluded"]) or "none"))
    return lines


def cmd_axioms(args) -> Report:
    model = _model(args)
    seed = _seed(args.seed)
    n = args.samples
    rep = Report("axioms", {"samples": n, "seed": seed}, model)
    if n < 0:
        raise ParseError("--samples must be nonnegative")
    if n == 0:
        rep.results = {"note": "no samples"}
        rep.diagnostics.append("no samples: nothing was checked")
        return rep
    presheaf = model.presheaf
    states = states_as_density(model.scenario)
    rng = np.random.default_rng(seed)
    for k in range(RANDOM_DENSITIES):
        states[f"random{k}"] = ops.random_density(presheaf.dim, rng)
    results = {
        "measure": checks.measure_suite(presheaf, states, n, seed),
        "daseinisation": checks.daseinisation_suite(presheaf, n, np.random.default_rng(seed + 1)),
        "heyting": checks.heyting_suite(presheaf, n, np.random.default_rng(seed + 2)),
    }
    rep.results = results
    for suite, body in results.items():
        if not checks.suite_passed(body):
            rep.failed = True
            rep.diagnostics.append(f"{suite} suite has failures")
    return rep


def _text_axioms(r: dict) -> list[str]:
    res = r["results"]
    if "note" in res:
        return [res["note"]]
    lines = ["measure axioms", ""]
    lines += _table(
        ["state", "pairs", "normalisation", "additivity", "antitone", "result"],
        [[k, v["pairs"], repr(v["normalisation_error"]), repr(v["additivity_error"]), repr(v["antitone_error"]),
          "pass" if v["passed"] else "FAIL"] for k, v in res["measure"].items()],
    )
    d = res["daseinisation"]
    lines += ["", "daseinisation", ""]
    rows = []
    for key in ("bounds", "order", "injectivity", "join", "meet", "non_surjective"):
        rows.append([key, "pass" if d[key]["passed"] else "FAIL", _detail(key, d[key])])
    lines += _table(["property", "result", "detail"], rows)
    h = res["heyting"]
    lines += ["", f"heyting laws ({h['elements']} subobjects, {'all' if h['enumerated'] else 'sampled'})", ""]
    rows = [[key, "pass" if h[key]["passed"] else "FAIL"] for key in
            ("distributivity", "absorption", "adjunction", "outputs_closed", "double_negation")]
    lines += _table(["law", "result"], rows)
    lem = h["excluded_middle"]["strict_witness"]
    lines.append("")
    if lem is None:
        lines.append("excluded middle: no strict witness among the checked subobjects")
    else:
        lines.append("excluded middle fails: S = " + _components(lem["S"]))
        lines.append("                S or not S = " + _components(lem["S_or_not_S"]))
    return lines


def _components(c: dict) -> str:
    return "  ".join(f"{k}:{{{','.join(map(str, v))}}}" for k, v in c.items())


def _detail(key: str, body: dict) -> str:
    if key == "meet" and body["strict_witness"]:
        w = body["strict_witness"]
        return f"strict witness at {w['context']} (meet of rank {w['rank_of_meet']})"
    if key == "non_surjective" and body["witness"]:
        return "witness: " + _components(body["witness"]["meet"]) if len(body["witness"]["meet"]) <= 6 else (
            f"witness over {len(body['witness']['meet'])} contexts, none of {body['witness']['scanned']} scanned projections hits it"
        )
    if key == "injectivity":
        return f"{body['context_projections']} context projections distinct"
    if key == "join":
        return f"{body['stagewise_differences']} stage-wise differences"
    if key == "order":
        return f"{body['random_pairs_checked']} random pairs, {body['random_weak_failures']} failures"
    return ""


def cmd_daseinise(args) -> Report:
    model = _model(args)
    rep = Report("daseinise", {"prop": args.prop}, model)
    node = parse_expression(args.prop)
    s = evaluate(node, model)
    rows = []
    for v in model.poset.contexts:
        comp = s.component(v.id)
        proj = alpha_inverse(v, comp)
        rows.append({
            "context": v.id,
            "component": sorted(comp),
            "rank": ops.projection_rank(proj),
            "projection": _matrix(proj),
        })
    rep.results = {"proposition": render(node), "atomic": is_atomic(node), "contexts": rows}
    return rep


def _text_daseinise(r: dict) -> list[str]:
    res = r["results"]
    lines = [f"daseinisation of {res['proposition']}", ""]
    lines += _table(
        ["context", "component", "rank"],
        [[e["context"], _sieve_text(map(str, e["component"])), e["rank"]] for e in res["contexts"]],
    )
    for e in res["contexts"]:
        lines += ["", f"{e['context']}:"]
        lines += ["  " + " ".join(_fmt_entry(z) for z in row) for row in e["projection"]]
    return lines


def _fmt_entry(z) -> str:
    if isinstance(z, list):
        return f"{z[0]!r}{z[1]:+}j"
    return repr(z)


def _table(headers: list[str], rows: list[list]) -> list[str]:
    cells = [[str(c) for c in row] for row in rows]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(headers)]

    def fmt(row):
        return "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()

    return [fmt(headers), fmt(["-" * w for w in widths])] + [fmt(r) for r in cells]


COMMANDS = {
    "build": (cmd_build, _text_build),
    "truth": (cmd_truth, _text_truth),
    "measure": (cmd_measure, _text_measure),
    "ks": (cmd_ks, _text_ks),
    "axioms": (cmd_axioms, _text_axioms),
    "daseinise": (cmd_daseinise, _text_daseinise),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    source = argparse.ArgumentParser(add_help=False)
    group = source.add_mutually_exclusive_group()
    group.add_argument("--model", metavar="PATH", help="model document written by 'build --out'")
    group.add_argument("--preset", choices=sorted(PRESETS))

    parser = argparse.ArgumentParser(prog="toposq", description="Finite-dimensional topos quantum logic toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", parents=[common], help="build a model from a scenario")
    p.add_argument("scenario", nargs="?", help="scenario file (YAML or JSON)")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("truth", parents=[common, source], help="truth value of a proposition in a pure state")
    p.add_argument("--state", required=True)
    p.add_argument("--prop", required=True)

    p = sub.add_parser("measure", parents=[common, source], help="measure of a proposition in a state")
    p.add_argument("--state", required=True)
    p.add_argument("--prop", required=True)
    p.add_argument("--seed", type=int)

    sub.add_parser("ks", parents=[common, source], help="count global sections of the spectral presheaf")

    p = sub.add_parser("axioms", parents=[common, source], help="run the property suites")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("daseinise", parents=[common, source], help="daseinise a proposition context by context")
    p.add_argument("--prop", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    run, text = COMMANDS[args.command]
    start = time.perf_counter()
    try:
        rep = run(args)
    except ToposqError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.timing:
        rep.elapsed = time.perf_counter() - start
    doc = _jsonable(rep.as_dict())
    if args.format == "json":
        print(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False))
    else:
        print("\n".join(text(doc)))
        for d in doc["diagnostics"]:
            print(f"note: {d}")
        if "timing" in doc:
            print(f"time: {doc['timing']['seconds']!r} s")
    return EXIT_PROPERTY if rep.failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Property suites over a concrete presheaf: daseinisation laws, Heyting laws,
and measure axioms. Each suite returns a JSON-ready dict; a check that
fails sets ``"passed": False`` and carries a witness."""

from __future__ import annotations

import itertools

import numpy as np

from . import operators as ops
from .daseinisation import daseinise, daseinise_at, restriction_equality
from .measures import verify_measure_axioms
from .spectrum import SpectralPresheaf
from .subobjects import (
    ClopenSubobject,
    _closure_violation,
    bottom,
    implies,
    join,
    join_all,
    meet,
    negate,
    sample_clopen,
    top,
)


def describe(s: ClopenSubobject) -> dict[str, list[int]]:
    return {vid: sorted(c) for vid, c in s.components.items()}


def context_projections(presheaf: SpectralPresheaf, eps: float = ops.EPS_NUM) -> list[np.ndarray]:
    """Every projection of every context, without duplicates, 0 and 1 included."""
    out: list[np.ndarray] = []
    for v in presheaf.poset.contexts:
        for _, p in v.projections():
            if not any(ops.projections_equal(p, q, eps) for q in out):
                out.append(p)
    return out


def random_projections(dim: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random projections of rank 1 .. dim-1."""
    return [ops.random_projection(dim, int(rng.integers(1, dim)), rng) for _ in range(count)]


def random_ordered_pair(dim: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random ``P < Q`` with ``0 < rank P < rank Q``."""
    k = int(rng.integers(2, dim + 1))
    j = int(rng.integers(1, k))
    u = ops.random_unitary(dim, rng)
    q = u[:, :k] @ u[:, :k].conj().T
    p = u[:, :j] @ u[:, :j].conj().T
    return ops._frozen(p), ops._frozen(q)


def _strictly_below(p, q) -> bool:
    return ops.projection_leq(p, q) and not ops.projections_equal(p, q)


def candidate_vectors(presheaf: SpectralPresheaf, rng: np.random.Generator, n_random: int = 8) -> list[np.ndarray]:
    """Atom eigenvectors of rank-one atoms, their pairwise superpositions, and random states."""
    base: list[np.ndarray] = []
    for v in presheaf.poset.contexts:
        for a in v.atoms:
            if ops.projection_rank(a) == 1:
                vals, vecs = np.linalg.eigh(a)
                vec = vecs[:, -1]
                if not any(abs(abs(np.vdot(vec, b)) - 1) < 1e-9 for b in base):
                    base.append(vec)
    vecs = list(base)
    for x, y in itertools.combinations(base, 2):
        if abs(np.vdot(x, y)) < 1e-9:
            vecs.append((x + y) / np.linalg.norm(x + y))
    vecs.extend(ops.random_pure_state(presheaf.dim, rng) for _ in range(n_random))
    return vecs


def non_surjectivity_witness(presheaf: SpectralPresheaf, rng: np.random.Generator, max_pairs: int = 4000):
    """Find non-orthogonal, non-parallel ``psi1, psi2`` whose pseudo-state meet is not the
    daseinisation of any projection in the scan (all context projections plus the
    block projections of the meet's own components)."""
    projections = context_projections(presheaf)
    images = {daseinise(p, presheaf).mask for p in projections}
    vecs = candidate_vectors(presheaf, rng)
    tried = 0
    for x, y in itertools.combinations(vecs, 2):
        ov = abs(np.vdot(x, y))
        if ov < 1e-6 or ov > 1 - 1e-6:
            continue
        tried += 1
        if tried > max_pairs:
            break
        m = meet(daseinise(ops.rank_one(x), presheaf), daseinise(ops.rank_one(y), presheaf))
        if m.mask in images:
            continue
        own = [presheaf.context(vid).block(c) for vid, c in m.components.items()]
        if any(daseinise(r, presheaf).mask == m.mask for r in own):
            continue
        return {"psi1": x, "psi2": y, "meet": m, "scanned": len(projections) + len(own)}
    return None


def meet_strict_witness(presheaf: SpectralPresheaf, projections) -> dict | None:
    """``P`` outside a context ``V`` with ``daseinise_at(P) * daseinise_at(1 - P) != 0`` at V."""
    one = np.eye(presheaf.dim)
    for p in projections:
        for v in presheaf.poset.contexts:
            dp = daseinise_at(p, v)
            if ops.projections_equal(dp, p):
                continue
            dq = daseinise_at(one - p, v)
            both = dp @ dq
            if ops.max_norm(both) > ops.EPS_NUM:
                return {"projection": p, "context": v.id, "rank_of_meet": ops.projection_rank(both)}
    return None


def daseinisation_suite(presheaf: SpectralPresheaf, n_random: int, rng: np.random.Generator) -> dict:
    """Properties (1)-(6) of outer daseinisation on a finite poset.

    Strict order preservation and injectivity are asserted over the
    projections that occur in the poset's contexts, where they hold on any
    poset. Collisions among random projections are counted separately:
    a truncated poset may lack the contexts that separate them.
    """
    dim = presheaf.dim
    out: dict = {}
    zero, one = np.zeros((dim, dim)), np.eye(dim)
    out["bounds"] = {
        "passed": daseinise(zero, presheaf) == bottom(presheaf) and daseinise(one, presheaf) == top(presheaf)
    }

    ctx = context_projections(presheaf)
    rnd = random_projections(dim, n_random, rng)
    ctx_masks = [daseinise(p, presheaf).mask for p in ctx]

    # (1) order
    failures = []
    for (p, mp), (q, mq) in itertools.permutations(zip(ctx, ctx_masks), 2):
        if _strictly_below(p, q) and not (mp & ~mq == 0 and mp != mq):
            failures.append("context pair")
            break
    weak_fail = 0
    for _ in range(n_random):
        p, q = random_ordered_pair(dim, rng)
        if daseinise(p, presheaf).mask & ~daseinise(q, presheaf).mask:
            weak_fail += 1
    out["order"] = {
        "passed": not failures and weak_fail == 0,
        "strict_pairs_checked": "all context projections",
        "random_pairs_checked": n_random,
        "random_weak_failures": weak_fail,
    }

    # (2) injectivity
    seen: dict[int, int] = {}
    collision = None
    for k, m in enumerate(ctx_masks):
        if m in seen:
            collision = (seen[m], k)
            break
        seen[m] = k
    rnd_masks = [daseinise(p, presheaf).mask for p in rnd]
    pool = ctx_masks + rnd_masks
    out["injectivity"] = {
        "passed": collision is None,
        "context_projections": len(ctx),
        "random_projections": len(rnd),
        "distinct_images_with_random": len(set(pool)),
        "inputs_with_random": len(pool),
    }

    # (4) joins, binary and n-ary
    join_diff = 0
    for _ in range(n_random):
        k = int(rng.integers(2, 5))
        ps = [rnd[int(i)] for i in rng.integers(0, len(rnd), size=k)] if rnd else []
        if not ps:
            break
        lhs = daseinise(ops.projection_join(ps), presheaf)
        rhs = join_all((daseinise(p, presheaf) for p in ps), presheaf)
        join_diff += bin(lhs.mask ^ rhs.mask).count("1")
    for p, q in zip(rnd, rnd[1:]):
        lhs = daseinise(ops.projection_join([p, q]), presheaf)
        rhs = join(daseinise(p, presheaf), daseinise(q, presheaf))
        join_diff += bin(lhs.mask ^ rhs.mask).count("1")
    out["join"] = {"passed": join_diff == 0, "stagewise_differences": join_diff}

    # (5) meets
    meet_fail = 0
    for p, q in zip(rnd + ctx, (rnd + ctx)[1:]):
        lhs = daseinise(ops.projection_meet([p, q]), presheaf)
        rhs = meet(daseinise(p, presheaf), daseinise(q, presheaf))
        if lhs.mask & ~rhs.mask:
            meet_fail += 1
    witness = meet_strict_witness(presheaf, ctx + rnd)
    out["meet"] = {
        "passed": meet_fail == 0 and witness is not None,
        "inequality_failures": meet_fail,
        "strict_witness": None
        if witness is None
        else {"context": witness["context"], "rank_of_meet": witness["rank_of_meet"]},
    }

    # (6) non-surjectivity
    ns = non_surjectivity_witness(presheaf, rng)
    out["non_surjective"] = {
        "passed": ns is not None,
        "witness": None if ns is None else {"meet": describe(ns["meet"]), "scanned": ns["scanned"]},
    }

    # reported, not asserted
    out["restriction_equality"] = {
        "holds_for_all_context_projections": all(restriction_equality(p, presheaf) for p in ctx),
        "holds_for_all_random": all(restriction_equality(p, presheaf) for p in rnd),
    }
    return out


def heyting_suite(presheaf: SpectralPresheaf, samples: int, rng: np.random.Generator, max_triples_base: int = 60) -> dict:
    """Lattice and Heyting laws over all clopen subobjects (small presheaves)
    or over ``samples`` random ones."""
    elems = sample_clopen(presheaf, samples, rng)
    enumerated = presheaf.n_characters <= 12
    masks = [s.mask for s in elems]
    full = top(presheaf).mask
    base = masks if enumerated else masks[: max_triples_base + 2]

    imp: dict[tuple[int, int], int] = {}
    closed = True
    for a, b in itertools.product(base, repeat=2):
        m = implies(ClopenSubobject(presheaf, a, check=False), ClopenSubobject(presheaf, b, check=False)).mask
        imp[(a, b)] = m
        if _closure_violation(presheaf, m) is not None:
            closed = False

    distributive = adjunction = True
    bad = None
    for z, a, b in itertools.product(base, repeat=3):
        if z & (a | b) != (z & a) | (z & b) or z | (a & b) != (z | a) & (z | b):
            distributive = False
            bad = bad or ("distributivity", z, a, b)
        if ((z & a) & ~b == 0) != (z & ~imp[(a, b)] == 0):
            adjunction = False
            bad = bad or ("adjunction", z, a, b)
    absorption = all(a & (a | b) == a and a | (a & b) == a for a, b in itertools.product(base, repeat=2))

    lem_witness = dn_witness = None
    dn_ok = True
    for s in elems:
        ns = negate(s)
        if _closure_violation(presheaf, ns.mask) is not None:
            closed = False
        if lem_witness is None and join(s, ns).mask != full:
            lem_witness = s
        nns = negate(ns)
        if s.mask & ~nns.mask:
            dn_ok = False
        if dn_witness is None and nns.mask != s.mask:
            dn_witness = s

    return {
        "elements": len(elems),
        "enumerated": enumerated,
        "triples": len(base) ** 3,
        "distributivity": {"passed": distributive},
        "absorption": {"passed": absorption},
        "adjunction": {"passed": adjunction},
        "outputs_closed": {"passed": closed},
        "double_negation": {
            "passed": dn_ok,
            "strict_witness": None if dn_witness is None else describe(dn_witness),
        },
        "excluded_middle": {
            "strict_witness": None
            if lem_witness is None
            else {
                "S": describe(lem_witness),
                "S_or_not_S": describe(join(lem_witness, negate(lem_witness))),
            }
        },
        "first_failure": None if bad is None else bad[0],
    }


def measure_suite(presheaf: SpectralPresheaf, states: dict[str, np.ndarray], pairs: int, seed: int) -> dict:
    out = {}
    for k, (name, rho) in enumerate(sorted(states.items())):
        rep = verify_measure_axioms(rho, presheaf, pairs, seed + k)
        out[name] = {
            "passed": rep.passed,
            "pairs": rep.pairs,
            "normalisation_error": rep.normalisation_error,
            "additivity_error": rep.additivity_error,
            "antitone_error": rep.antitone_error,
            "witness": None if rep.witness is None else [describe(s) for s in rep.witness],
        }
    return out


def suite_passed(node) -> bool:
    """True unless some nested dict has ``"passed": False``."""
    if isinstance(node, dict):
        if node.get("passed") is False:
            return False
        return all(suite_passed(v) for v in node.values())
    if isinstance(node, list):
        return all(suite_passed(v) for v in node)
    return True

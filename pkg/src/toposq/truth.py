"""Pure states as pseudo-states, truth objects, sieve-valued truth values,
and the search for global sections of the spectral presheaf."""

from __future__ import annotations

import itertools
from collections.abc import Iterator, Mapping
from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .contexts import ContextPoset, Sieve, empty_sieve, principal_sieve, sieve_intersect_down
from .daseinisation import daseinise, daseinise_at
from .errors import DimensionMismatch
from .spectrum import Character, SpectralPresheaf, clopen_subsets
from .subobjects import ClopenSubobject, alpha, alpha_inverse, leq


@dataclass(frozen=True, eq=False)
class TruthValue:
    """Global element of the sieve presheaf: one sieve per context."""

    poset: ContextPoset
    sieves: Mapping[str, Sieve]

    def __getitem__(self, vid: str) -> Sieve:
        return self.sieves[vid]

    def members(self) -> dict[str, frozenset[str]]:
        return {vid: self.sieves[vid].members for vid in self.poset.ids}

    def __eq__(self, other):
        if not isinstance(other, TruthValue):
            return NotImplemented
        return self.poset is other.poset and self.members() == other.members()

    def __hash__(self):
        return hash(tuple(sorted((k, tuple(sorted(v))) for k, v in self.members().items())))

    def __le__(self, other: "TruthValue") -> bool:
        return all(self.sieves[v].members <= other.sieves[v].members for v in self.poset.ids)

    def __lt__(self, other: "TruthValue") -> bool:
        return self <= other and self != other

    def meet(self, other: "TruthValue") -> "TruthValue":
        return TruthValue(
            self.poset,
            {v: Sieve(v, self.sieves[v].members & other.sieves[v].members) for v in self.poset.ids},
        )

    def join(self, other: "TruthValue") -> "TruthValue":
        return TruthValue(
            self.poset,
            {v: Sieve(v, self.sieves[v].members | other.sieves[v].members) for v in self.poset.ids},
        )

    def true_at(self) -> list[str]:
        """Contexts whose own sieve contains themselves (the sieve is maximal there)."""
        return [v for v in self.poset.ids if v in self.sieves[v].members]

    def is_top(self) -> bool:
        return all(self.sieves[v].members == self.poset.down(v) for v in self.poset.ids)

    def is_bottom(self) -> bool:
        return all(not self.sieves[v].members for v in self.poset.ids)


def top_value(poset: ContextPoset) -> TruthValue:
    """Totally true: the maximal sieve everywhere."""
    return TruthValue(poset, {v: principal_sieve(poset, v) for v in poset.ids})


def bottom_value(poset: ContextPoset) -> TruthValue:
    """Totally false: the empty sieve everywhere."""
    return TruthValue(poset, {v: empty_sieve(poset, v) for v in poset.ids})


def is_global_element(value: TruthValue) -> bool:
    poset = value.poset
    for v in poset.ids:
        s = value.sieves[v]
        if s.base != v or not s.members <= poset.down(v):
            return False
        for m in s.members:
            if not poset.down(m) <= s.members:
                return False
        for lower in poset.down(v):
            if sieve_intersect_down(poset, s, lower).members != value.sieves[lower].members:
                return False
    return True


def _check_dim(psi: np.ndarray, presheaf: SpectralPresheaf):
    if psi.shape[0] != presheaf.dim:
        raise DimensionMismatch(f"state of length {psi.shape[0]} on a presheaf of dim {presheaf.dim}")


def pseudo_state(psi, presheaf: SpectralPresheaf) -> ClopenSubobject:
    """Daseinisation of the rank-one projection onto ``psi``."""
    psi = ops.as_pure_state(psi)
    _check_dim(psi, presheaf)
    return daseinise(ops.rank_one(psi), presheaf)


def truth_value(psi, s: ClopenSubobject) -> TruthValue:
    """``V -> {V' <= V : w_psi at V' is inside S at V'}``."""
    presheaf = s.presheaf
    w = pseudo_state(psi, presheaf)
    poset = presheaf.poset
    qualifying = {
        v for v in poset.ids if (w.mask & ~s.mask) & presheaf.full_mask(v) == 0
    }
    return TruthValue(poset, {v: Sieve(v, poset.down(v) & qualifying) for v in poset.ids})


def is_totally_true(s: ClopenSubobject, psi) -> bool:
    """Whether ``S`` lies in the filter above the pseudo-state of ``psi``."""
    return leq(pseudo_state(psi, s.presheaf), s)


@dataclass(frozen=True)
class TruthObjectComponent:
    context: str
    members: frozenset[frozenset[int]]

    def __contains__(self, subset) -> bool:
        return frozenset(subset) in self.members


def truth_object_component(psi, presheaf: SpectralPresheaf, vid: str) -> TruthObjectComponent:
    """Subsets ``S`` of ``Sigma_V`` whose projection has expectation 1 in ``psi``."""
    psi = ops.as_pure_state(psi)
    _check_dim(psi, presheaf)
    v = presheaf.context(vid)
    members = frozenset(
        s for s in clopen_subsets(v) if ops.born_probability(psi, alpha_inverse(v, s)) >= 1.0 - ops.EPS_NUM
    )
    return TruthObjectComponent(vid, members)


def truth_object_restrict(
    component: TruthObjectComponent, presheaf: SpectralPresheaf, lower: str
) -> frozenset[frozenset[int]]:
    """Image of a truth-object component at a smaller context:
    each ``S`` goes to the daseinisation of its projection there."""
    upper = presheaf.context(component.context)
    presheaf.poset.atom_map(upper.id, lower)  # raises NotBelow
    w = presheaf.context(lower)
    return frozenset(
        alpha(w, daseinise_at(alpha_inverse(upper, s), w)) for s in component.members
    )


# global sections

def iter_global_sections(presheaf: SpectralPresheaf) -> Iterator[dict[str, int]]:
    """Every global section, as ``{context id: atom index}``.

    Depth-first over contexts in descending atom count; choosing a
    character forces its restriction at every smaller context. Sections
    come out in lexicographic order of that context sequence.
    """
    poset = presheaf.poset
    order = poset.top_down()
    assigned: dict[str, int] = {}

    def rec(k: int):
        if k == len(order):
            yield dict(assigned)
            return
        vid = order[k]
        if vid in assigned:
            yield from rec(k + 1)
            return
        lowers = [w for w in poset.down(vid) if w != vid]
        for i in range(presheaf.size(vid)):
            if any(
                w in assigned and presheaf.restrict_index(vid, i, w) != assigned[w] for w in lowers
            ):
                continue
            new = [w for w in lowers if w not in assigned]
            assigned[vid] = i
            for w in new:
                assigned[w] = presheaf.restrict_index(vid, i, w)
            yield from rec(k + 1)
            for w in new:
                del assigned[w]
            del assigned[vid]

    yield from rec(0)


def global_section_search(presheaf: SpectralPresheaf) -> dict[str, Character] | None:
    """The first global section in search order, or ``None`` if there is none."""
    for sec in iter_global_sections(presheaf):
        return {vid: Character(vid, sec[vid]) for vid in presheaf.ids}
    return None


def count_global_sections(presheaf: SpectralPresheaf) -> int:
    return sum(1 for _ in iter_global_sections(presheaf))


def largest_consistent_family(presheaf: SpectralPresheaf) -> tuple[str, ...]:
    """Largest set of maximal contexts whose downsets carry a common section
    (earliest such set in combination order)."""
    poset = presheaf.poset
    tops = poset.maximal()
    for k in range(len(tops), 0, -1):
        for combo in itertools.combinations(tops, k):
            keep = set().union(*(poset.down(v) for v in combo))
            sub = SpectralPresheaf(poset.restrict(keep))
            if global_section_search(sub) is not None:
                return combo
    return ()


def bloch_grid(n: int = 64) -> list[np.ndarray]:
    """``n`` qubit states on a Fibonacci lattice over the Bloch sphere."""
    golden = np.pi * (3.0 - np.sqrt(5.0))
    out = []
    for k in range(n):
        z = 1.0 - (2 * k + 1) / n
        theta = np.arccos(z)
        phi = golden * k
        out.append(ops._frozen([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]))
    return out


def satisfying_projection(s: ClopenSubobject) -> np.ndarray:
    """Projection onto the states that make ``s`` totally true.

    ``w_psi <= s`` holds iff the ray of ``psi`` lies under every
    ``P_{S_V}``, so the answer is the meet of those projections.
    """
    presheaf = s.presheaf
    projs = [alpha_inverse(presheaf.context(vid), s.component(vid)) for vid in presheaf.ids]
    return ops.projection_meet(projs)


def never_totally_true(s: ClopenSubobject) -> bool:
    return ops.projection_rank(satisfying_projection(s)) == 0

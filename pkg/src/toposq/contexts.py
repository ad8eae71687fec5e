"""Contexts (finite abelian algebras), their subalgebras, and the context poset."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .errors import (
    DimensionMismatch,
    DuplicateId,
    NotBelow,
    TrivialContext,
    UnknownContext,
)

CLOSURE_POLICIES = ("none", "subalgebras")


def _atom_sort_key(p: np.ndarray):
    # descending rank, then descending lexicographic order of entries rounded to 1e-6
    flat = []
    for z in np.round(p, 6).ravel():
        flat.append(-(z.real + 0.0))
        flat.append(-(z.imag + 0.0))
    return (-ops.projection_rank(p), tuple(flat))


def canonical_atoms(atoms: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    return tuple(sorted((ops._frozen(a) for a in atoms), key=_atom_sort_key))


@dataclass(frozen=True, eq=False)
class Context:
    """A finite abelian algebra, given by its atoms (minimal projections).

    Atoms are kept in canonical order; character ``i`` of the Gel'fand
    spectrum corresponds to ``atoms[i]``.
    """

    id: str
    atoms: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.atoms) < 2:
            raise TrivialContext(f"context {self.id!r} has a single atom (the trivial algebra)")
        dim = self.atoms[0].shape[0]
        for a in self.atoms:
            if a.shape != (dim, dim):
                raise DimensionMismatch(f"context {self.id!r} mixes atom shapes")

    @property
    def dim(self) -> int:
        return self.atoms[0].shape[0]

    @property
    def size(self) -> int:
        return len(self.atoms)

    def block(self, indices) -> np.ndarray:
        """Sum of the atoms with the given indices (the zero matrix when empty).

        The full index set gives the exact identity: atoms sum to 1 by invariant.
        """
        indices = set(indices)
        if len(indices) == self.size:
            return ops._frozen(np.eye(self.dim))
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for i in indices:
            out = out + self.atoms[i]
        return ops._frozen(out)

    def projections(self) -> Iterator[tuple[frozenset[int], np.ndarray]]:
        """All ``2**size`` projections of the context, keyed by atom-index set."""
        n = self.size
        for mask in range(1 << n):
            idx = frozenset(i for i in range(n) if mask >> i & 1)
            yield idx, self.block(idx)

    def same_atoms(self, other: "Context", eps: float = ops.EPS_NUM) -> bool:
        """Atom-set equality within ``eps``, by greedy matching."""
        if self.size != other.size or self.dim != other.dim:
            return False
        free = list(other.atoms)
        for a in self.atoms:
            for k, b in enumerate(free):
                if ops.projections_equal(a, b, eps):
                    del free[k]
                    break
            else:
                return False
        return True

    def __repr__(self):
        ranks = ",".join(str(ops.projection_rank(a)) for a in self.atoms)
        return f"Context({self.id!r}, dim={self.dim}, atom ranks=[{ranks}])"


def make_context(id: str, atoms: Sequence[np.ndarray]) -> Context:
    return Context(id, canonical_atoms(atoms))


def generate_context(generators: Sequence[np.ndarray], id: str, eps: float = ops.EPS_NUM) -> Context:
    """Context generated by pairwise-commuting projections."""
    atoms = ops.joint_atoms(generators, eps)
    if len(atoms) < 2:
        raise TrivialContext(f"generators of {id!r} only produce the identity")
    return make_context(id, atoms)


def set_partitions(n: int) -> Iterator[list[list[int]]]:
    """Set partitions of ``range(n)`` in restricted-growth-string order."""

    def rec(k: int, blocks: list[list[int]]):
        if k == n:
            yield [list(b) for b in blocks]
            return
        for b in blocks:
            b.append(k)
            yield from rec(k + 1, blocks)
            b.pop()
        blocks.append([k])
        yield from rec(k + 1, blocks)
        blocks.pop()

    if n == 0:
        yield []
        return
    yield from rec(0, [])


def partition_label(blocks: Sequence[Sequence[int]]) -> str:
    return "|".join(",".join(str(i) for i in b) for b in blocks)


def enumerate_subalgebras(v: Context) -> list[Context]:
    """All nontrivial subalgebras of ``v``: one per partition of its atoms into >= 2 blocks.

    The discrete partition yields ``v`` itself; every coarser one gets the
    id ``"<v.id>/<blocks>"`` with blocks written as atom indices of ``v``.
    """
    out = []
    for blocks in set_partitions(v.size):
        if len(blocks) < 2:
            continue
        if len(blocks) == v.size:
            out.append(v)
            continue
        out.append(make_context(f"{v.id}/{partition_label(blocks)}", [v.block(b) for b in blocks]))
    return out


@dataclass(frozen=True)
class Sieve:
    """A downward-closed set of contexts below ``base``."""

    base: str
    members: frozenset[str]

    def __contains__(self, vid: str) -> bool:
        return vid in self.members

    def __le__(self, other: "Sieve") -> bool:
        return self.base == other.base and self.members <= other.members


def _refinement(upper: Context, lower: Context, eps: float) -> tuple[int, ...] | None:
    """Atom map ``atoms(upper) -> atoms(lower)`` when lower is a subalgebra of upper."""
    if lower.size > upper.size:
        return None
    ranks_lower = [ops.projection_rank(b) for b in lower.atoms]
    mapping = []
    for a in upper.atoms:
        ra = ops.projection_rank(a)
        hits = [
            j
            for j, b in enumerate(lower.atoms)
            if ranks_lower[j] >= ra and ops.projection_leq(a, b, eps)
        ]
        if len(hits) != 1:
            return None
        mapping.append(hits[0])
    return tuple(mapping)


@dataclass(frozen=True, eq=False)
class ContextPoset:
    """Finite set of contexts ordered by algebra inclusion.

    ``refinement[(lower, upper)]`` sends each atom index of ``upper`` to the
    unique atom index of ``lower`` lying above it; it exists exactly when
    ``lower <= upper``.
    """

    contexts: tuple[Context, ...]
    refinement: dict[tuple[str, str], tuple[int, ...]] = field(repr=False)
    _index: dict[str, int] = field(init=False, repr=False)
    _down: dict[str, frozenset[str]] = field(init=False, repr=False)
    _up: dict[str, frozenset[str]] = field(init=False, repr=False)

    def __post_init__(self):
        index = {c.id: k for k, c in enumerate(self.contexts)}
        down = {c.id: set() for c in self.contexts}
        up = {c.id: set() for c in self.contexts}
        for lower, upper in self.refinement:
            down[upper].add(lower)
            up[lower].add(upper)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_down", {k: frozenset(v) for k, v in down.items()})
        object.__setattr__(self, "_up", {k: frozenset(v) for k, v in up.items()})

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.contexts]

    @property
    def dim(self) -> int:
        return self.contexts[0].dim

    def __len__(self):
        return len(self.contexts)

    def __contains__(self, vid: str) -> bool:
        return vid in self._index

    def context(self, vid: str) -> Context:
        try:
            return self.contexts[self._index[vid]]
        except KeyError:
            raise UnknownContext(vid) from None

    def position(self, vid: str) -> int:
        if vid not in self._index:
            raise UnknownContext(vid)
        return self._index[vid]

    def leq(self, lower: str, upper: str) -> bool:
        self.position(lower), self.position(upper)
        return (lower, upper) in self.refinement

    def down(self, vid: str) -> frozenset[str]:
        self.position(vid)
        return self._down[vid]

    def up(self, vid: str) -> frozenset[str]:
        self.position(vid)
        return self._up[vid]

    def atom_map(self, upper: str, lower: str) -> tuple[int, ...]:
        try:
            return self.refinement[(lower, upper)]
        except KeyError:
            self.position(upper), self.position(lower)
            raise NotBelow(f"{lower!r} is not below {upper!r}") from None

    def arrows(self) -> list[tuple[str, str]]:
        """Proper inclusions ``(lower, upper)`` in canonical order."""
        return sorted(
            ((lo, hi) for lo, hi in self.refinement if lo != hi),
            key=lambda e: (self._index[e[1]], self._index[e[0]]),
        )

    def maximal(self) -> list[str]:
        return [c.id for c in self.contexts if self._up[c.id] == {c.id}]

    def top_down(self) -> list[str]:
        """Context ids sorted by descending atom count, then poset order (a linear extension)."""
        return [c.id for c in sorted(self.contexts, key=lambda c: (-c.size, self._index[c.id]))]

    def sieve(self, base: str, members) -> Sieve:
        members = frozenset(members)
        dv = self.down(base)
        if not members <= dv:
            raise NotBelow(f"sieve members {sorted(members - dv)} are not below {base!r}")
        for m in members:
            if not self._down[m] <= members:
                raise ValueError(f"sieve on {base!r} is not downward closed at {m!r}")
        return Sieve(base, members)

    def restrict(self, vids) -> "ContextPoset":
        """The sub-poset on ``vids`` (caller passes a downward-closed set)."""
        keep = set(vids)
        return ContextPoset(
            tuple(c for c in self.contexts if c.id in keep),
            {k: v for k, v in self.refinement.items() if k[0] in keep and k[1] in keep},
        )


def principal_sieve(poset: ContextPoset, vid: str) -> Sieve:
    """The maximal sieve on ``vid``: its whole downset."""
    return Sieve(vid, poset.down(vid))


def empty_sieve(poset: ContextPoset, vid: str) -> Sieve:
    poset.position(vid)
    return Sieve(vid, frozenset())


def sieve_intersect_down(poset: ContextPoset, sieve: Sieve, vid: str) -> Sieve:
    if not poset.leq(vid, sieve.base):
        raise NotBelow(f"{vid!r} is not below {sieve.base!r}")
    return Sieve(vid, sieve.members & poset.down(vid))


def order_poset(contexts: Sequence[Context], eps: float = ops.EPS_NUM) -> ContextPoset:
    """Compute the inclusion order and atom maps among the given contexts."""
    refinement = {}
    for upper in contexts:
        for lower in contexts:
            m = _refinement(upper, lower, eps)
            if m is not None:
                refinement[(lower.id, upper.id)] = m
    return ContextPoset(tuple(contexts), refinement)


def build_poset(
    generating: Sequence[Context], closure: str = "subalgebras", eps: float = ops.EPS_NUM
) -> ContextPoset:
    """Assemble the context poset from generating contexts.

    With ``closure="subalgebras"`` every nontrivial subalgebra of every
    generating context is added; contexts with matching atom sets are
    identified, keeping the first id seen (generating contexts first, in
    the given order).
    """
    if closure not in CLOSURE_POLICIES:
        raise ValueError(f"closure must be one of {CLOSURE_POLICIES}, got {closure!r}")
    if not generating:
        raise ValueError("need at least one generating context")
    dim = generating[0].dim
    seen_ids = set()
    for c in generating:
        if c.dim != dim:
            raise DimensionMismatch(f"context {c.id!r} has dim {c.dim}, expected {dim}")
        if c.id in seen_ids:
            raise DuplicateId(c.id)
        seen_ids.add(c.id)

    chosen: list[Context] = []

    def add(c: Context):
        if any(c.same_atoms(d, eps) for d in chosen):
            return
        if any(c.id == d.id for d in chosen):
            raise DuplicateId(c.id)
        chosen.append(c)

    for c in generating:
        add(c)
    if closure == "subalgebras":
        for c in generating:
            for sub in enumerate_subalgebras(c):
                add(sub)
    return order_poset(chosen, eps)

"""Gel'fand spectra of contexts and the spectral presheaf over a context poset.

A finite abelian algebra has one character per atom: character ``i``
sends a projection of the context to 1 exactly when atom ``i`` lies below
it. Characters are therefore stored as ``(context id, atom index)`` and
evaluated order-theoretically. On a finite spectrum every subset is
clopen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .contexts import Context, ContextPoset
from .errors import CapacityError, NotBelow, NotInContext


@dataclass(frozen=True, order=True)
class Character:
    context: str
    index: int


def gelfand_spectrum(v: Context) -> list[Character]:
    return [Character(v.id, i) for i in range(v.size)]


def block_indices(v: Context, p: np.ndarray, eps: float = ops.EPS_NUM) -> frozenset[int]:
    """Atom indices of ``v`` below ``p``; raises unless ``p`` is a block sum of atoms."""
    p = np.asarray(p, dtype=complex)
    if p.shape != (v.dim, v.dim):
        raise NotInContext(f"operator shape {p.shape} does not match context {v.id!r}")
    inside = set()
    for i, a in enumerate(v.atoms):
        if ops.projection_leq(a, p, eps):
            inside.add(i)
        elif ops.max_norm(a @ p) > eps:
            raise NotInContext(f"atom {i} of {v.id!r} is neither below nor orthogonal to the projection")
    if ops.max_norm(v.block(inside) - p) > eps:
        raise NotInContext(f"projection is not a sum of atoms of {v.id!r}")
    return frozenset(inside)


def evaluate_character(v: Context, lam: Character, p: np.ndarray, eps: float = ops.EPS_NUM) -> int:
    """``lam(P)`` for a projection ``P`` of the context: 1 iff the character's atom is below ``P``."""
    if lam.context != v.id:
        raise NotInContext(f"character of {lam.context!r} evaluated on {v.id!r}")
    return int(lam.index in block_indices(v, p, eps))


def gelfand_transform(v: Context, lam: Character, a: np.ndarray, eps: float = ops.EPS_NUM) -> float:
    """``lam(A)`` for a self-adjoint ``A = sum_i a_i atom_i`` of the context."""
    if lam.context != v.id:
        raise NotInContext(f"character of {lam.context!r} evaluated on {v.id!r}")
    a = np.asarray(a, dtype=complex)
    coeffs = [np.trace(atom @ a).real / ops.projection_rank(atom) for atom in v.atoms]
    rebuilt = sum(c * atom for c, atom in zip(coeffs, v.atoms))
    if ops.max_norm(rebuilt - a) > eps:
        raise NotInContext(f"operator is not a real combination of the atoms of {v.id!r}")
    return float(coeffs[lam.index])


@dataclass(frozen=True, eq=False)
class SpectralPresheaf:
    """The presheaf ``V -> Sigma_V`` with restriction ``lam -> lam|V'`` along inclusions.

    Each character gets a fixed bit position (``offset[V] + index``) so that
    families of character sets can be stored as one integer.
    """

    poset: ContextPoset
    offset: dict[str, int] = field(init=False, repr=False)
    n_characters: int = field(init=False)
    cone: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        offs, k = {}, 0
        for c in self.poset.contexts:
            offs[c.id] = k
            k += c.size
        object.__setattr__(self, "offset", offs)
        object.__setattr__(self, "n_characters", k)
        # cone[b]: bits of every restriction of character b (itself included)
        cone = [0] * k
        for c in self.poset.contexts:
            for lower in self.poset.down(c.id):
                m = self.poset.atom_map(c.id, lower)
                for i, j in enumerate(m):
                    cone[offs[c.id] + i] |= 1 << (offs[lower] + j)
        object.__setattr__(self, "cone", tuple(cone))

    @property
    def ids(self) -> list[str]:
        return self.poset.ids

    @property
    def dim(self) -> int:
        return self.poset.dim

    def context(self, vid: str) -> Context:
        return self.poset.context(vid)

    def spectrum(self, vid: str) -> list[Character]:
        return gelfand_spectrum(self.poset.context(vid))

    def size(self, vid: str) -> int:
        return self.poset.context(vid).size

    def restrict(self, lam: Character, lower: str) -> Character:
        if not self.poset.leq(lower, lam.context):
            raise NotBelow(f"{lower!r} is not below {lam.context!r}")
        return Character(lower, self.poset.atom_map(lam.context, lower)[lam.index])

    def restrict_index(self, upper: str, index: int, lower: str) -> int:
        return self.poset.atom_map(upper, lower)[index]

    def image(self, upper: str, indices, lower: str) -> frozenset[int]:
        """Image of a set of characters at ``upper`` under restriction to ``lower``."""
        m = self.poset.atom_map(upper, lower)
        return frozenset(m[i] for i in indices)

    def bit(self, vid: str, index: int) -> int:
        return self.offset[vid] + index

    def full_mask(self, vid: str) -> int:
        return ((1 << self.size(vid)) - 1) << self.offset[vid]

    def characters(self) -> list[Character]:
        return [lam for vid in self.ids for lam in self.spectrum(vid)]


def spectral_presheaf(poset: ContextPoset) -> SpectralPresheaf:
    return SpectralPresheaf(poset)


LOCAL_SUBSET_LIMIT = 6


def clopen_subsets(v: Context, limit: int = LOCAL_SUBSET_LIMIT) -> list[frozenset[int]]:
    """All subsets of ``Sigma_V`` (all clopen on a finite spectrum), by increasing bitmask."""
    if v.size > limit:
        raise CapacityError(f"context {v.id!r} has {v.size} atoms; subset enumeration is capped at {limit}")
    return [frozenset(i for i in range(v.size) if m >> i & 1) for m in range(1 << v.size)]

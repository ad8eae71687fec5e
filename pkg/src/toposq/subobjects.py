"""Clopen subobjects of the spectral presheaf and their Heyting algebra.

A clopen subobject picks a set of characters at every context such that
restricting any chosen character to a smaller context lands in the set
chosen there. Internally the whole family is one integer bitmask over the
presheaf's character positions, which makes meet and join bitwise and
keeps equality exact.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

import numpy as np

from . import operators as ops
from .contexts import Context
from .errors import CapacityError, NotRestrictionClosed, PresheafMismatch
from .spectrum import SpectralPresheaf, block_indices

ENUMERATION_LIMIT = 12


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _closure_violation(presheaf: SpectralPresheaf, mask: int) -> int | None:
    for b in _bits(mask):
        if presheaf.cone[b] & ~mask:
            return b
    return None


class ClopenSubobject:
    """Element of Sub_cl(Sigma) over a fixed spectral presheaf."""

    __slots__ = ("presheaf", "mask")

    def __init__(self, presheaf: SpectralPresheaf, mask: int, *, check: bool = True):
        if check:
            bad = _closure_violation(presheaf, mask)
            if bad is not None:
                raise NotRestrictionClosed(
                    f"character {_describe_bit(presheaf, bad)} restricts outside the family"
                )
        self.presheaf = presheaf
        self.mask = mask

    @classmethod
    def from_components(cls, presheaf: SpectralPresheaf, components: Mapping[str, Iterable[int]]):
        """Build from ``{context id: character indices}``; missing contexts are empty."""
        mask = 0
        for vid, idx in components.items():
            n = presheaf.size(vid)
            for i in idx:
                if not 0 <= i < n:
                    raise IndexError(f"character index {i} out of range for {vid!r}")
                mask |= 1 << presheaf.bit(vid, i)
        return cls(presheaf, mask)

    def component(self, vid: str) -> frozenset[int]:
        off = self.presheaf.offset[vid]
        n = self.presheaf.size(vid)
        return frozenset(i for i in range(n) if self.mask >> (off + i) & 1)

    @property
    def components(self) -> dict[str, frozenset[int]]:
        return {vid: self.component(vid) for vid in self.presheaf.ids}

    def _same(self, other: "ClopenSubobject"):
        if self.presheaf is not other.presheaf:
            raise PresheafMismatch("subobjects live on different presheaves")

    def __eq__(self, other):
        if not isinstance(other, ClopenSubobject):
            return NotImplemented
        return self.presheaf is other.presheaf and self.mask == other.mask

    def __hash__(self):
        return hash((id(self.presheaf), self.mask))

    def __le__(self, other: "ClopenSubobject") -> bool:
        return leq(self, other)

    def __lt__(self, other: "ClopenSubobject") -> bool:
        return leq(self, other) and self.mask != other.mask

    def __and__(self, other):
        return meet(self, other)

    def __or__(self, other):
        return join(self, other)

    def __invert__(self):
        return negate(self)

    def __repr__(self):
        parts = ", ".join(f"{vid}:{sorted(s)}" for vid, s in self.components.items())
        return f"ClopenSubobject({parts})"


def _describe_bit(presheaf: SpectralPresheaf, b: int) -> str:
    for vid in presheaf.ids:
        off = presheaf.offset[vid]
        if off <= b < off + presheaf.size(vid):
            return f"{vid}#{b - off}"
    return str(b)


def bottom(presheaf: SpectralPresheaf) -> ClopenSubobject:
    return ClopenSubobject(presheaf, 0, check=False)


def top(presheaf: SpectralPresheaf) -> ClopenSubobject:
    return ClopenSubobject(presheaf, (1 << presheaf.n_characters) - 1, check=False)


def alpha(v: Context, p: np.ndarray, eps: float = ops.EPS_NUM) -> frozenset[int]:
    """Characters of ``v`` sending the projection ``p`` to 1."""
    return block_indices(v, p, eps)


def alpha_inverse(v: Context, indices: Iterable[int]) -> np.ndarray:
    """Projection of ``v`` whose characters are exactly ``indices``."""
    return v.block(indices)


def meet(s1: ClopenSubobject, s2: ClopenSubobject) -> ClopenSubobject:
    s1._same(s2)
    return ClopenSubobject(s1.presheaf, s1.mask & s2.mask, check=False)


def join(s1: ClopenSubobject, s2: ClopenSubobject) -> ClopenSubobject:
    s1._same(s2)
    return ClopenSubobject(s1.presheaf, s1.mask | s2.mask, check=False)


def meet_all(items: Iterable[ClopenSubobject], presheaf: SpectralPresheaf) -> ClopenSubobject:
    out = top(presheaf)
    for s in items:
        out = meet(out, s)
    return out


def join_all(items: Iterable[ClopenSubobject], presheaf: SpectralPresheaf) -> ClopenSubobject:
    out = bottom(presheaf)
    for s in items:
        out = join(out, s)
    return out


def leq(s1: ClopenSubobject, s2: ClopenSubobject) -> bool:
    s1._same(s2)
    return s1.mask & ~s2.mask == 0


def implies(s1: ClopenSubobject, s2: ClopenSubobject) -> ClopenSubobject:
    """Heyting implication: ``lam`` qualifies at V iff at every V' <= V,
    ``lam|V'`` in S1 forces ``lam|V'`` in S2."""
    s1._same(s2)
    bad = s1.mask & ~s2.mask
    cone = s1.presheaf.cone
    out = 0
    for b in range(s1.presheaf.n_characters):
        if not cone[b] & bad:
            out |= 1 << b
    return ClopenSubobject(s1.presheaf, out, check=False)


def negate(s: ClopenSubobject) -> ClopenSubobject:
    """Heyting negation ``S => 0``: characters none of whose restrictions lie in S."""
    return implies(s, bottom(s.presheaf))


def is_restriction_closed(presheaf: SpectralPresheaf, components: Mapping[str, Iterable[int]]) -> bool:
    try:
        ClopenSubobject.from_components(presheaf, components)
    except NotRestrictionClosed:
        return False
    return True


def enumerate_clopen(presheaf: SpectralPresheaf, limit: int = ENUMERATION_LIMIT) -> list[ClopenSubobject]:
    """Every clopen subobject, in increasing mask order.

    Only for presheaves with at most ``limit`` characters in total.
    """
    n = presheaf.n_characters
    if n > limit:
        raise CapacityError(f"{n} characters exceed the enumeration limit of {limit}")
    return [
        ClopenSubobject(presheaf, m, check=False)
        for m in range(1 << n)
        if _closure_violation(presheaf, m) is None
    ]


def random_clopen(presheaf: SpectralPresheaf, rng: np.random.Generator, density: float | None = None):
    """Seeded random clopen subobject.

    Draws a random character subset at every stage, then adds every
    restriction image so the family is closed. ``density`` is the draw
    probability per character; by default it is itself drawn uniformly,
    which spreads samples between near-empty and near-full families.
    """
    p = rng.uniform(0.0, 0.6) if density is None else density
    draws = rng.random(presheaf.n_characters) < p
    mask = 0
    for b in np.flatnonzero(draws):
        mask |= presheaf.cone[int(b)]
    return ClopenSubobject(presheaf, mask, check=False)


def sample_clopen(presheaf: SpectralPresheaf, count: int, rng: np.random.Generator) -> list[ClopenSubobject]:
    """Full enumeration when small enough, else ``count`` random draws plus 0 and Sigma."""
    if presheaf.n_characters <= ENUMERATION_LIMIT:
        return enumerate_clopen(presheaf)
    out = [bottom(presheaf), top(presheaf)]
    out.extend(random_clopen(presheaf, rng) for _ in range(count))
    return out

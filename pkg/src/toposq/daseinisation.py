"""Outer daseinisation of projections.

At a context V the projection P is replaced by the least projection of V
above it. A projection Q of V dominates P iff (1 - Q)P = 0, so the least
one is the sum of the atoms of V that do not annihilate P.
"""

from __future__ import annotations

import numpy as np

from . import operators as ops
from .contexts import Context
from .errors import DimensionMismatch
from .spectrum import SpectralPresheaf
from .subobjects import ClopenSubobject


def support_atoms(p: np.ndarray, v: Context, eps: float = ops.EPS_NUM) -> frozenset[int]:
    p = np.asarray(p, dtype=complex)
    if p.shape != (v.dim, v.dim):
        raise DimensionMismatch(f"projection shape {p.shape} vs context {v.id!r} of dim {v.dim}")
    return frozenset(i for i, a in enumerate(v.atoms) if ops.max_norm(a @ p) > eps)


def daseinise_at(p: np.ndarray, v: Context, eps: float = ops.EPS_NUM) -> np.ndarray:
    """Least projection of ``v`` dominating ``p``."""
    return v.block(support_atoms(p, v, eps))


def daseinise(p: np.ndarray, presheaf: SpectralPresheaf, eps: float = ops.EPS_NUM) -> ClopenSubobject:
    """The clopen subobject ``V -> alpha(daseinise_at(p, V))``."""
    p = np.asarray(p, dtype=complex)
    if p.shape != (presheaf.dim, presheaf.dim):
        raise DimensionMismatch(f"projection shape {p.shape} vs presheaf dim {presheaf.dim}")
    mask = 0
    for v in presheaf.poset.contexts:
        off = presheaf.offset[v.id]
        for i in support_atoms(p, v, eps):
            mask |= 1 << (off + i)
    # closed by construction; keep the check so a tolerance mismatch cannot slip through
    return ClopenSubobject(presheaf, mask)


def restriction_equality(p: np.ndarray, presheaf: SpectralPresheaf, eps: float = ops.EPS_NUM) -> bool:
    """Whether every restriction image of the daseinisation equals the lower component
    (not just lies inside it)."""
    s = daseinise(p, presheaf, eps)
    poset = presheaf.poset
    for upper in poset.ids:
        comp = s.component(upper)
        for lower in poset.down(upper):
            if presheaf.image(upper, comp, lower) != s.component(lower):
                return False
    return True

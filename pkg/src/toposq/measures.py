"""States as measures on the spectral presheaf.

A density matrix assigns to each clopen subobject the antitone function
``V -> tr(rho P_{S_V})``. This module builds that measure, checks the
measure axioms on samples, builds the thresholded family of generalised
truth objects and reads the measure back from it, and inverts atom
probabilities back into a density matrix.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .contexts import ContextPoset
from .errors import BadThreshold, DimensionMismatch, InconsistentData, NotPure, PresheafMismatch, Underdetermined
from .spectrum import SpectralPresheaf, clopen_subsets
from .daseinisation import daseinise, daseinise_at
from .subobjects import ClopenSubobject, alpha_inverse, join, meet, random_clopen, top

EPS_MEAS = 1e-9
DEFAULT_GRID = tuple(k / 20 for k in range(1, 21))


@dataclass(frozen=True, eq=False)
class AntitoneValuation:
    """Context-indexed values in [0, 1] that never decrease toward smaller contexts."""

    poset: ContextPoset
    values: Mapping[str, float]

    def __getitem__(self, vid: str) -> float:
        return self.values[vid]

    def antitone_violation(self) -> float:
        """Largest ``values(V) - values(V')`` over inclusions ``V' <= V`` (0 when antitone)."""
        worst = 0.0
        for lower, upper in self.poset.arrows():
            worst = max(worst, self.values[upper] - self.values[lower])
        return worst

    def is_antitone(self, eps: float = EPS_MEAS) -> bool:
        return self.antitone_violation() <= eps

    def max_diff(self, other: "AntitoneValuation") -> float:
        return max(abs(self.values[v] - other.values[v]) for v in self.poset.ids)


def _as_rho(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return ops.density_of(state)
    return ops.as_density(state)


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def measure(rho, s: ClopenSubobject) -> AntitoneValuation:
    """``V -> tr(rho P_{S_V})``, clamped into [0, 1]. Pure states may be passed as vectors."""
    rho = _as_rho(rho)
    presheaf = s.presheaf
    if rho.shape[0] != presheaf.dim:
        raise DimensionMismatch(f"state of dim {rho.shape[0]} on presheaf of dim {presheaf.dim}")
    values = {}
    for vid in presheaf.ids:
        v = presheaf.context(vid)
        values[vid] = _clamp(ops.expectation(rho, alpha_inverse(v, s.component(vid))))
    return AntitoneValuation(presheaf.poset, values)


def _raw_measure(rho: np.ndarray, s: ClopenSubobject) -> dict[str, float]:
    presheaf = s.presheaf
    return {
        vid: ops.expectation(rho, alpha_inverse(presheaf.context(vid), s.component(vid)))
        for vid in presheaf.ids
    }


@dataclass
class AxiomReport:
    pairs: int
    normalisation_error: float
    additivity_error: float
    antitone_error: float
    witness: tuple[ClopenSubobject, ClopenSubobject] | None = field(default=None, repr=False)
    tolerance: float = EPS_MEAS

    @property
    def max_violation(self) -> float:
        return max(self.normalisation_error, self.additivity_error, self.antitone_error)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def verify_measure_axioms(rho, presheaf: SpectralPresheaf, pairs: int, seed: int) -> AxiomReport:
    """Check ``mu(Sigma) = 1`` and stage-wise modular additivity on seeded random pairs.

    Uses unclamped traces so rounding is not hidden.
    """
    rho = _as_rho(rho)
    rng = np.random.default_rng(seed)
    full = _raw_measure(rho, top(presheaf))
    norm_err = max(abs(x - 1.0) for x in full.values())
    add_err = 0.0
    anti_err = 0.0
    witness = None
    arrows = presheaf.poset.arrows()
    for _ in range(pairs):
        s1, s2 = random_clopen(presheaf, rng), random_clopen(presheaf, rng)
        m1, m2 = _raw_measure(rho, s1), _raw_measure(rho, s2)
        mj, mm = _raw_measure(rho, join(s1, s2)), _raw_measure(rho, meet(s1, s2))
        err = max(abs(mj[v] + mm[v] - m1[v] - m2[v]) for v in presheaf.ids)
        if err > add_err:
            add_err = err
            if err > EPS_MEAS:
                witness = (s1, s2)
        for m in (m1, m2):
            for lower, upper in arrows:
                anti_err = max(anti_err, m[upper] - m[lower])
    return AxiomReport(pairs, norm_err, add_err, anti_err, witness)


def generalized_truth_object_component(rho, presheaf: SpectralPresheaf, r: float, vid: str) -> frozenset[frozenset[int]]:
    """Subsets of ``Sigma_V`` with ``rho``-probability at least ``r``."""
    if not 0.0 < r <= 1.0:
        raise BadThreshold(f"threshold {r!r} outside (0, 1]")
    rho = _as_rho(rho)
    v = presheaf.context(vid)
    return frozenset(
        s for s in clopen_subsets(v) if ops.expectation(rho, alpha_inverse(v, s)) >= r - EPS_MEAS
    )


@dataclass(frozen=True, eq=False)
class GeneralizedTruthObjectFamily:
    presheaf: SpectralPresheaf
    state: np.ndarray
    r_grid: tuple[float, ...]
    components: Mapping[tuple[float, str], frozenset[frozenset[int]]]

    @property
    def step(self) -> float:
        g = (0.0,) + self.r_grid
        return max(b - a for a, b in zip(g, g[1:]))

    def is_nested(self) -> bool:
        for vid in self.presheaf.ids:
            for lo, hi in zip(self.r_grid, self.r_grid[1:]):
                if not self.components[(hi, vid)] <= self.components[(lo, vid)]:
                    return False
        return True


def truth_object_family(rho, presheaf: SpectralPresheaf, r_grid: Sequence[float] = DEFAULT_GRID) -> GeneralizedTruthObjectFamily:
    grid = tuple(sorted(float(r) for r in r_grid))
    if not grid:
        raise BadThreshold("empty threshold grid")
    rho = _as_rho(rho)
    comps = {
        (r, vid): generalized_truth_object_component(rho, presheaf, r, vid)
        for r in grid
        for vid in presheaf.ids
    }
    return GeneralizedTruthObjectFamily(presheaf, rho, grid, comps)


def measure_from_family(family: GeneralizedTruthObjectFamily, s: ClopenSubobject) -> AntitoneValuation:
    """Largest grid threshold whose truth object contains ``S_V``, per context."""
    if s.presheaf is not family.presheaf:
        raise PresheafMismatch("subobject and family use different presheaves")
    values = {}
    for vid in family.presheaf.ids:
        comp = s.component(vid)
        hits = [r for r in family.r_grid if comp in family.components[(r, vid)]]
        values[vid] = max(hits) if hits else 0.0
    return AntitoneValuation(family.presheaf.poset, values)


def support_of_measure(state, presheaf: SpectralPresheaf) -> ClopenSubobject:
    """Smallest clopen subobject of measure constantly 1 for a pure state:
    at each context, the atoms carrying nonzero probability."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 2:
        rho = ops.as_density(state)
        vals, vecs = np.linalg.eigh(rho)
        if np.sum(vals > ops.EPS_NUM) != 1:
            raise NotPure("state has rank greater than one")
        psi = vecs[:, -1]
    else:
        psi = ops.as_pure_state(state)
    if psi.shape[0] != presheaf.dim:
        raise DimensionMismatch(f"state of dim {psi.shape[0]} on presheaf of dim {presheaf.dim}")
    comps = {}
    for vid in presheaf.ids:
        v = presheaf.context(vid)
        comps[vid] = [i for i, a in enumerate(v.atoms) if ops.born_probability(psi, a) > ops.EPS_NUM]
    return ClopenSubobject.from_components(presheaf, comps)


def atom_probabilities(rho, presheaf: SpectralPresheaf) -> dict[tuple[str, int], float]:
    rho = _as_rho(rho)
    return {
        (vid, i): ops.expectation(rho, a)
        for vid in presheaf.ids
        for i, a in enumerate(presheaf.context(vid).atoms)
    }


def _hermitian_basis(dim: int) -> list[np.ndarray]:
    basis = []
    for j in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[j, j] = 1
        basis.append(e)
    for j in range(dim):
        for k in range(j + 1, dim):
            re = np.zeros((dim, dim), dtype=complex)
            re[j, k] = re[k, j] = 1
            im = np.zeros((dim, dim), dtype=complex)
            im[j, k], im[k, j] = -1j, 1j
            basis.extend((re, im))
    return basis


@dataclass(frozen=True)
class Reconstruction:
    rho: np.ndarray
    residual: float
    equations: int


def reconstruct_state(
    presheaf: SpectralPresheaf,
    probabilities: Mapping[tuple[str, int], float],
    residual_tol: float = 1e-6,
) -> Reconstruction:
    """Least-squares density matrix reproducing the given atom probabilities.

    Solves ``tr(rho a) = p_a`` together with ``tr(rho) = 1`` over Hermitian
    matrices. Raises ``Underdetermined`` when the supplied atoms do not span
    the Hermitian matrices, ``InconsistentData`` when the best fit misses
    the data by more than ``residual_tol`` or is not positive.
    """
    dim = presheaf.dim
    for vid in {k[0] for k in probabilities}:
        total = sum(p for (w, _), p in probabilities.items() if w == vid)
        n = presheaf.size(vid)
        if sum(1 for w, _ in probabilities if w == vid) == n and abs(total - 1.0) > EPS_MEAS:
            raise InconsistentData(f"probabilities at {vid!r} sum to {total!r}")
    for key, p in probabilities.items():
        if not -EPS_MEAS <= p <= 1.0 + EPS_MEAS:
            raise InconsistentData(f"probability {p!r} at {key} outside [0, 1]")
    basis = _hermitian_basis(dim)
    rows, rhs = [], []
    for (vid, i), p in sorted(probabilities.items()):
        a = presheaf.context(vid).atoms[i]
        rows.append([ops.expectation(b, a) for b in basis])
        rhs.append(p)
    rows.append([np.trace(b).real for b in basis])
    rhs.append(1.0)
    m = np.array(rows)
    y = np.array(rhs)
    rank = np.linalg.matrix_rank(m, tol=1e-10)
    if rank < len(basis):
        raise Underdetermined(
            f"atom probabilities fix {rank} of {len(basis)} real parameters of the state"
        )
    coef, *_ = np.linalg.lstsq(m, y, rcond=None)
    residual = float(np.max(np.abs(m @ coef - y)))
    if residual > residual_tol:
        raise InconsistentData(f"least-squares residual {residual:.3g} exceeds {residual_tol:g}")
    rho = sum(c * b for c, b in zip(coef, basis))
    lowest = float(np.linalg.eigvalsh(rho)[0])
    if lowest < -residual_tol:
        raise InconsistentData(f"best fit has eigenvalue {lowest:.3g}; no state reproduces the data")
    return Reconstruction(ops._frozen(rho), residual, len(rhs))


def born_bridge(psi, p: np.ndarray, presheaf: SpectralPresheaf) -> dict[str, tuple[float, float]]:
    """Per context: measure of the daseinised proposition vs ``<psi|daseinise_at(P)|psi>``."""
    psi = ops.as_pure_state(psi)
    mu = measure(psi, daseinise(p, presheaf))
    return {
        vid: (mu[vid], ops.born_probability(psi, daseinise_at(p, presheaf.context(vid))))
        for vid in presheaf.ids
    }

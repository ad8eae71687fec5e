"""Finite-dimensional complex operator kernel.

Operators are plain ``numpy`` complex arrays. The ``as_*`` helpers validate
an array against its role (observable, projection, pure state, density
state) and return a read-only complex copy; every other function in the
package assumes its inputs went through one of them.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NonCommuting,
    NotDensity,
    NotHermitian,
    NotProjection,
    NotUnitVector,
)

EPS_NUM = 1e-9
EPS_CLUSTER = 1e-7

Interval = tuple[float, float]


def max_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def _square(a, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{what} must be a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise DimensionMismatch(f"{what} must have dimension >= 2")
    return a


def is_hermitian(a: np.ndarray, eps: float = EPS_NUM) -> bool:
    return max_norm(a - a.conj().T) <= eps


def as_observable(a, eps: float = EPS_NUM) -> np.ndarray:
    a = _square(a, "observable")
    if not is_hermitian(a, eps):
        raise NotHermitian(f"matrix deviates from its adjoint by {max_norm(a - a.conj().T):.3g}")
    return _frozen(a)


def as_projection(p, eps: float = EPS_NUM) -> np.ndarray:
    p = _square(p, "projection")
    if not is_hermitian(p, eps):
        raise NotHermitian("projection is not Hermitian")
    if max_norm(p @ p - p) > eps:
        raise NotProjection(f"P^2 - P has max entry {max_norm(p @ p - p):.3g}")
    return _frozen(p)


def as_pure_state(psi, eps: float = EPS_NUM) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] < 2:
        raise DimensionMismatch(f"state vector must be 1-d with length >= 2, got {psi.shape}")
    if abs(np.linalg.norm(psi) - 1.0) > eps:
        raise NotUnitVector(f"state has norm {np.linalg.norm(psi)!r}")
    return _frozen(psi)


def as_density(rho, eps: float = EPS_NUM) -> np.ndarray:
    rho = _square(rho, "density matrix")
    if not is_hermitian(rho, eps):
        raise NotHermitian("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > eps or abs(np.trace(rho).imag) > eps:
        raise NotDensity(f"trace is {np.trace(rho)!r}, expected 1")
    lo = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    if lo < -eps:
        raise NotDensity(f"density matrix has negative eigenvalue {lo!r}")
    return _frozen(rho)


def rank_one(psi) -> np.ndarray:
    """Projection onto the ray of ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    return _frozen(np.outer(psi, psi.conj()))


def density_of(psi) -> np.ndarray:
    return rank_one(as_pure_state(psi))


def identity(dim: int) -> np.ndarray:
    return _frozen(np.eye(dim))


def zero(dim: int) -> np.ndarray:
    return _frozen(np.zeros((dim, dim)))


def projection_rank(p: np.ndarray) -> int:
    return int(round(np.trace(p).real))


def spectral_decompose(a, eps: float = EPS_NUM, eps_cluster: float = EPS_CLUSTER):
    """Clustered spectral decomposition of a Hermitian matrix.

    Returns a list of ``(eigenvalue, eigenprojection)`` with strictly
    increasing eigenvalues. Neighbouring eigenvalues closer than
    ``eps_cluster`` share one eigenprojection; the reported eigenvalue of a
    cluster is its mean.
    """
    a = as_observable(a, eps)
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
    groups: list[list[int]] = [[0]]
    for k in range(1, len(vals)):
        if vals[k] - vals[k - 1] < eps_cluster:
            groups[-1].append(k)
        else:
            groups.append([k])
    out = []
    for g in groups:
        v = vecs[:, g]
        out.append((float(np.mean(vals[g])), _frozen(v @ v.conj().T)))
    return out


def _in_delta(x: float, delta: Sequence[Interval], slack: float) -> bool:
    return any(lo - slack <= x <= hi + slack for lo, hi in delta)


def spectral_projection(
    a, delta: Sequence[Interval], eps: float = EPS_NUM, eps_cluster: float = EPS_CLUSTER
) -> np.ndarray:
    """Spectral projection of ``a`` onto eigenvalues lying in a union of closed intervals.

    Interval endpoints are widened by ``eps_cluster`` so that a degenerate
    interval ``[x, x]`` picks up the floating-point eigenvalue near ``x``.
    """
    delta = [(float(lo), float(hi)) for lo, hi in delta]
    if not delta:
        raise ValueError("interval list must be nonempty")
    for lo, hi in delta:
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
    parts = spectral_decompose(a, eps, eps_cluster)
    out = np.zeros_like(parts[0][1])
    for lam, e in parts:
        if _in_delta(lam, delta, eps_cluster):
            out = out + e
    return _frozen(out)


def commute(p: np.ndarray, q: np.ndarray, eps: float = EPS_NUM) -> bool:
    return max_norm(p @ q - q @ p) <= eps


def joint_atoms(family: Sequence[np.ndarray], eps: float = EPS_NUM) -> list[np.ndarray]:
    """Minimal nonzero projections of the algebra generated by commuting projections.

    Starting from ``[1]``, every current piece ``a`` is split into ``aP`` and
    ``a(1 - P)`` for each generator ``P`` in turn; pieces with max-norm at most
    ``eps`` are dropped.
    """
    family = [np.asarray(p, dtype=complex) for p in family]
    if not family:
        raise ValueError("need at least one generator")
    dim = family[0].shape[0]
    for k, p in enumerate(family):
        if p.shape != (dim, dim):
            raise DimensionMismatch(f"generator {k} has shape {p.shape}, expected {(dim, dim)}")
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            if not commute(family[i], family[j], eps):
                raise NonCommuting(i, j)
    one = np.eye(dim, dtype=complex)
    atoms = [one]
    for p in family:
        nxt = []
        for a in atoms:
            for piece in (a @ p, a @ (one - p)):
                piece = (piece + piece.conj().T) / 2
                if max_norm(piece) > eps:
                    nxt.append(piece)
        atoms = nxt
    return [_frozen(a) for a in atoms]


def projection_leq(p: np.ndarray, q: np.ndarray, eps: float = EPS_NUM) -> bool:
    """Range inclusion ``P <= Q``, tested as ``QP == P``."""
    if p.shape != q.shape:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    return max_norm(q @ p - p) <= eps


def projections_equal(p: np.ndarray, q: np.ndarray, eps: float = EPS_NUM) -> bool:
    if p.shape != q.shape:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    return max_norm(p - q) <= eps


def projection_join(
    projections: Iterable[np.ndarray], eps: float = EPS_NUM, eps_cluster: float = EPS_CLUSTER
) -> np.ndarray:
    """Range projection of ``sum(projections)``; the lattice join in P(H)."""
    projections = list(projections)
    if not projections:
        raise ValueError("join of an empty family needs an explicit dimension")
    total = as_observable(sum(projections), eps)
    vals, vecs = np.linalg.eigh(total)
    keep = vecs[:, vals > eps_cluster]
    return _frozen(keep @ keep.conj().T)


def projection_meet(
    projections: Iterable[np.ndarray], eps: float = EPS_NUM, eps_cluster: float = EPS_CLUSTER
) -> np.ndarray:
    """Range intersection, via ``1 - join(1 - P_i)``."""
    projections = list(projections)
    one = np.eye(projections[0].shape[0], dtype=complex)
    return _frozen(one - projection_join([one - p for p in projections], eps, eps_cluster))


def born_probability(psi, p, eps: float = EPS_NUM) -> float:
    """``<psi|P|psi>``, clamped into [0, 1] when within ``eps`` outside it."""
    psi = np.asarray(psi, dtype=complex)
    p = np.asarray(p, dtype=complex)
    if p.shape != (psi.shape[0], psi.shape[0]):
        raise DimensionMismatch(f"state of length {psi.shape[0]} vs operator {p.shape}")
    val = float(np.vdot(psi, p @ psi).real)
    if -eps <= val < 0.0:
        return 0.0
    if 1.0 < val <= 1.0 + eps:
        return 1.0
    return val


def expectation(rho, p) -> float:
    """``tr(rho P)`` as a real number."""
    rho = np.asarray(rho, dtype=complex)
    p = np.asarray(p, dtype=complex)
    if rho.shape != p.shape:
        raise DimensionMismatch(f"shapes {rho.shape} and {p.shape} differ")
    return float(np.einsum("ij,ji->", rho, p).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_projection(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(dim, rng)[:, :rank]
    return _frozen(u @ u.conj().T)


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return _frozen(v / np.linalg.norm(v))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or given-rank) density matrix, Ginibre-style."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return _frozen(rho / np.trace(rho).real)

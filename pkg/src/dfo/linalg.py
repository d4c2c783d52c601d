"""Regularized least-squares solvers and nullspace-complement projectors.

All routines operate on dense real matrices in double precision. The
truncated solvers return, besides the minimal-norm solution, the retained
right-singular basis, which downstream code uses to project vectors onto
the orthogonal complement of the resolved directions.

Randomness (the Gaussian sketch of :func:`solve_min_norm_randomized`) comes
from ``numpy.random.Generator`` seeded with PCG64 via ``default_rng``, whose
output stream is stable across platforms for a fixed numpy version; for a
fixed seed the solver output is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "LsqResult",
    "SketchConfig",
    "solve_min_norm",
    "solve_min_norm_randomized",
    "solve_tikhonov",
    "project_complement",
]


@dataclass(frozen=True)
class SketchConfig:
    """Configuration of the Gaussian sketch used by the randomized solver.

    ``sketch_size + oversampling`` columns are drawn; the total is clamped
    to ``min(N, p)`` since a wider sketch cannot enlarge the range.
    """

    sketch_size: int
    oversampling: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.sketch_size < 1:
            raise InputError("sketch_size must be >= 1")
        if self.oversampling < 0:
            raise InputError("oversampling must be >= 0")


@dataclass(frozen=True)
class LsqResult:
    """Output of one regularized least-squares solve.

    Attributes
    ----------
    eta_bar : ndarray, shape (p,)
        Minimal-norm solution restricted to the retained directions.
    basis : ndarray, shape (p, r)
        Orthonormal retained right-singular vectors.
    singulars : ndarray, shape (r,)
        Retained singular values, nonincreasing.
    sigma_max : float
        Largest singular value of the input matrix (0 for the zero matrix),
        recorded even when everything is truncated.
    retained_rank : int
        r, the number of retained singular directions.
    """

    eta_bar: np.ndarray
    basis: np.ndarray
    singulars: np.ndarray
    sigma_max: float
    retained_rank: int


def _check_system(J, f):
    J = np.asarray(J, dtype=float)
    f = np.asarray(f, dtype=float)
    if J.ndim != 2:
        raise InputError(f"matrix must be 2-d, got shape {J.shape}")
    if f.ndim != 1 or f.shape[0] != J.shape[0]:
        raise InputError(
            f"right-hand side shape {f.shape} incompatible with matrix {J.shape}"
        )
    if J.shape[0] < 1 or J.shape[1] < 1:
        raise InputError(f"matrix must be at least 1x1, got {J.shape}")
    if not np.all(np.isfinite(J)):
        raise InputError("matrix contains non-finite entries")
    if not np.all(np.isfinite(f)):
        raise InputError("right-hand side contains non-finite entries")
    return J, f


def _thin_svd(J):
    """Thin QR of J followed by an SVD of the triangular factor.

    For N <= p the triangular factor is N x p, i.e. the QR step does not
    shrink the problem; the SVD is then taken of J directly, which is the
    same factorization without the no-op detour.
    """
    n, p = J.shape
    if n > p:
        q, r = np.linalg.qr(J, mode="reduced")
        u_r, s, vt = np.linalg.svd(r, full_matrices=False)
        u = q @ u_r
    else:
        u, s, vt = np.linalg.svd(J, full_matrices=False)
    return u, s, vt


def _retained_count(s, eps_rel, abs_tol):
    # s is nonincreasing; retention uses the closed inequality s >= cut.
    # Exactly zero singular values are never retained.
    if s.size == 0 or s[0] <= 0.0:
        return 0
    cut = max(abs_tol, eps_rel * float(s[0]))
    return int(np.count_nonzero((s >= cut) & (s > 0.0)))


def _result_from_factors(u, s, vt, f, eps_rel, abs_tol):
    p = vt.shape[1]
    sigma_max = float(s[0]) if s.size else 0.0
    r = _retained_count(s, eps_rel, abs_tol)
    if r == 0:
        return LsqResult(
            eta_bar=np.zeros(p),
            basis=np.zeros((p, 0)),
            singulars=np.zeros(0),
            sigma_max=sigma_max,
            retained_rank=0,
        )
    basis = vt[:r].T.copy()
    coeffs = (u[:, :r].T @ f) / s[:r]
    return LsqResult(
        eta_bar=basis @ coeffs,
        basis=basis,
        singulars=s[:r].copy(),
        sigma_max=sigma_max,
        retained_rank=r,
    )


def _check_truncation(eps_rel, abs_tol):
    if not 0.0 <= eps_rel < 1.0:
        raise InputError(f"eps_rel must be in [0, 1), got {eps_rel}")
    if abs_tol < 0.0:
        raise InputError(f"abs_tol must be >= 0, got {abs_tol}")


def solve_min_norm(J, f, eps_rel, abs_tol=0.0):
    """Minimal-norm solution of ``min ||J eta - f||`` with spectral truncation.

    Singular directions with sigma below ``max(abs_tol, eps_rel*sigma_max)``
    are discarded. When everything is truncated (or J = 0) the solution is
    the zero vector and the retained basis is empty.

    Parameters
    ----------
    J : ndarray, shape (N, p)
    f : ndarray, shape (N,)
    eps_rel : float
        Relative truncation threshold in [0, 1).
    abs_tol : float, optional
        Absolute truncation floor; 0 recovers the purely relative rule.

    Returns
    -------
    LsqResult
    """
    J, f = _check_system(J, f)
    _check_truncation(eps_rel, abs_tol)
    u, s, vt = _thin_svd(J)
    return _result_from_factors(u, s, vt, f, eps_rel, abs_tol)


def solve_tikhonov(J, f, gamma):
    """Ridge-regularized solution ``(J^T J + gamma I)^-1 J^T f``.

    Computed through the same QR+SVD path as :func:`solve_min_norm`, with
    the filter factor ``sigma/(sigma^2 + gamma)`` applied per singular
    direction instead of hard truncation.
    """
    J, f = _check_system(J, f)
    if not gamma > 0.0:
        raise InputError(f"gamma must be > 0, got {gamma}")
    u, s, vt = _thin_svd(J)
    coeffs = (s / (s * s + gamma)) * (u.T @ f)
    return vt.T @ coeffs


def project_complement(basis, z):
    """Project ``z`` onto the orthogonal complement of ``span(basis)``.

    ``basis`` must have orthonormal columns (the retained right-singular
    vectors of a solve); with zero columns the projector is the identity.
    """
    basis = np.asarray(basis, dtype=float)
    z = np.asarray(z, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != z.shape[0]:
        raise InputError(
            f"basis shape {basis.shape} incompatible with vector of length {z.shape}"
        )
    if basis.shape[1] == 0:
        return z.copy()
    return z - basis @ (basis.T @ z)


def solve_min_norm_randomized(J, f, eps_rel, sketch, abs_tol=0.0):
    """Randomized-SVD variant of :func:`solve_min_norm`.

    Sketches the range of J with a seeded Gaussian test matrix, computes
    the SVD of the compressed matrix ``Q^T J``, and truncates relative to
    the largest computed singular value. Output shape and truncation
    semantics match :func:`solve_min_norm`; accuracy depends on the sketch
    capturing the retained subspace (exact for matrices whose rank does not
    exceed the sketch width).

    Parameters
    ----------
    sketch : SketchConfig
        Sketch width, oversampling, and generator seed.
    """
    J, f = _check_system(J, f)
    _check_truncation(eps_rel, abs_tol)
    n, p = J.shape
    width = min(sketch.sketch_size + sketch.oversampling, min(n, p))
    rng = np.random.default_rng(sketch.seed)
    gamma = rng.standard_normal((p, width))
    y = J @ gamma
    q, _ = np.linalg.qr(y, mode="reduced")
    b = q.T @ J
    u_b, s, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ u_b
    return _result_from_factors(u, s, vt, f, eps_rel, abs_tol)

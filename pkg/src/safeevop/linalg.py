"""Dense solves used once per cycle: local linear regression and the multiplier fit.

Two operations only. ``least_squares_fit`` fits an affine model through the
cycle's measured points (the design matrix is a handful of rows, so a dense
SVD solve is exact and cheap). ``solve_lagrange`` finds the nonnegative
multipliers that best cancel the cost gradient against the nearly active
constraint gradients, via a Lawson-Hanson style active-set iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NonFiniteError
from .space import _frozen

# Singular values below this fraction of the largest are treated as zero,
# so degenerate designs (boundary-skipped perturbations) fall back to the
# minimal-norm solution instead of blowing up.
RANK_TOLERANCE = 1e-10

# Active-set termination: largest admissible KKT violation, and the
# iteration cap as a multiple of the number of multipliers.
KKT_TOLERANCE = 1e-10
MAX_ITER_FACTOR = 100


@dataclass(frozen=True)
class LinearModelFit:
    """Affine model ``intercept + gradient . u`` fitted by least squares."""

    gradient: np.ndarray
    intercept: float
    residual_norm: float

    def __post_init__(self):
        object.__setattr__(self, "gradient", _frozen(np.asarray(self.gradient, dtype=float)))


@dataclass(frozen=True)
class LagrangeSolution:
    """Nonnegative multipliers and the norm of the resulting Lagrangian gradient."""

    lam: np.ndarray
    stationarity_norm: float

    def __post_init__(self):
        object.__setattr__(self, "lam", _frozen(np.asarray(self.lam, dtype=float)))


def least_squares_fit(points, values) -> LinearModelFit:
    """Fit ``intercept + gradient . u`` to observed values at the given points.

    ``points`` is an m x n matrix of (scaled) rows; a constant column is
    appended internally. Returns the minimal-norm least-squares solution,
    which for a full-rank overdetermined design is the unique one.
    """
    A = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.atleast_1d(np.asarray(values, dtype=float))
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatchError(f"need an m x n design with m,n >= 1, got {A.shape}")
    if y.shape != (A.shape[0],):
        raise DimensionMismatchError("values length differs from row count")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
        raise NonFiniteError("least-squares inputs must be finite")
    m, n = A.shape
    design = np.hstack([A, np.ones((m, 1))])
    beta, _, _, _ = np.linalg.lstsq(design, y, rcond=RANK_TOLERANCE)
    residual = float(np.linalg.norm(design @ beta - y))
    return LinearModelFit(gradient=beta[:n], intercept=float(beta[n]), residual_norm=residual)


def solve_lagrange(grad_phi, grad_g, active) -> LagrangeSolution:
    """Best nonnegative multipliers over the active set.

    Minimizes ``||grad_phi + sum_j lam_j * grad_g[j]||_2`` subject to
    ``lam >= 0`` and ``lam_j = 0`` for every j outside ``active``. The
    program is convex; the active-set iteration terminates at its global
    minimum (KKT violations below ``KKT_TOLERANCE``).
    """
    grad_phi = np.asarray(grad_phi, dtype=float)
    grads = [np.asarray(g, dtype=float) for g in grad_g]
    n_g = len(grads)
    for g in grads:
        if g.shape != grad_phi.shape:
            raise DimensionMismatchError("constraint gradient length differs from cost gradient")
    active = sorted(set(int(j) for j in active))
    if any(j < 0 or j >= n_g for j in active):
        raise DimensionMismatchError("active index outside the constraint range")

    lam = np.zeros(n_g)
    if active:
        A = np.column_stack([grads[j] for j in active])
        lam_active = _nnls(A, -grad_phi)
        lam[active] = lam_active
    residual = grad_phi + sum(lam[j] * grads[j] for j in range(n_g))
    return LagrangeSolution(lam=lam, stationarity_norm=float(np.linalg.norm(residual)))


def _nnls(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lawson-Hanson active-set solve of ``min ||A x - y||`` s.t. ``x >= 0``.

    Deterministic: the entering variable is the one with the largest
    positive dual (ties to the lowest index, which is what argmax gives),
    so degenerate problems always resolve the same way.
    """
    m, k = A.shape
    x = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    budget = MAX_ITER_FACTOR * max(k, 1)

    while budget > 0:
        w = A.T @ (y - A @ x)
        candidates = ~passive & (w > KKT_TOLERANCE)
        if not candidates.any():
            break
        enter = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[enter] = True

        while budget > 0:
            budget -= 1
            cols = np.flatnonzero(passive)
            z_passive, _, _, _ = np.linalg.lstsq(A[:, cols], y, rcond=None)
            if np.all(z_passive > 0.0):
                x = np.zeros(k)
                x[cols] = z_passive
                break
            z = np.zeros(k)
            z[cols] = z_passive
            shrink = np.flatnonzero(passive & (z <= 0.0))
            ratios = x[shrink] / (x[shrink] - z[shrink])
            leave = shrink[int(np.argmin(ratios))]
            x = x + ratios.min() * (z - x)
            # force the blocking index out; rounding can leave it at ~1e-17
            # and stall the iteration otherwise
            x[leave] = 0.0
            passive &= x > 0.0
            x[~passive] = 0.0
            if not passive.any():
                break
    return x

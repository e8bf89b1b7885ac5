"""Lipschitz constraint back-offs and safe-excitation certificates.

The central guarantee: if a constraint value at a reference point sits below
zero by at least ``delta_e * ||kappa||_2``, where ``kappa`` bounds the
constraint's partial derivatives over the excitation ball of radius
``delta_e``, then every point of that ball satisfies the constraint. The
functions here compute the bound, the back-off, robust (noise-inflated)
constraint values, the resulting safe/unsafe verdicts, and the supporting
pieces: Lipschitz upper bounds and polytopes, data-driven Lipschitz
estimates, and radius shrinking for when the back-off cannot be met.

Everything operates in scaled coordinates and is pure; values are immutable
after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    InfeasibleAtCenterError,
    NotReachedError,
)
from .space import ScaledPoint, _as_float_vector, _frozen


@dataclass(frozen=True)
class ExcitationBall:
    """Euclidean ball (in scaled coordinates) within which perturbation is intended.

    The radius is capped at 0.5: the scaled space is the unit cube, so a
    larger ball cannot fit regardless of where it is centered.
    """

    center: ScaledPoint
    radius: float

    def __post_init__(self):
        if not (0.0 < self.radius <= 0.5):
            raise ValueError(f"radius must be in (0, 0.5], got {self.radius!r}")


@dataclass(frozen=True)
class LipschitzVector:
    """Per-axis bounds on the magnitude of one constraint's partial derivatives."""

    kappa: np.ndarray

    def __post_init__(self):
        kappa = _as_float_vector(self.kappa, "kappa")
        if np.any(kappa < 0.0):
            raise ValueError("Lipschitz constants must be nonnegative")
        object.__setattr__(self, "kappa", _frozen(kappa))

    def norm(self) -> float:
        """Euclidean norm ``||kappa||_2``, the back-off per unit radius."""
        return float(np.linalg.norm(self.kappa))

    @property
    def n_u(self) -> int:
        return self.kappa.size


@dataclass(frozen=True)
class LipschitzPolytope:
    """Region certified feasible for one constraint by its Lipschitz bound.

    Contains every point whose worst-case constraint value, anchored at the
    center value ``g_star``, remains nonpositive. Nonempty whenever
    ``g_star <= 0`` (it then contains its own center), and it grows
    monotonically as ``g_star`` decreases.
    """

    center: ScaledPoint
    g_star: float
    kappa: LipschitzVector

    def __post_init__(self):
        if self.kappa.n_u != self.center.n_u:
            raise DimensionMismatchError("kappa and center lengths differ")


@dataclass(frozen=True)
class GaussianThreeSigma:
    """Robust bound policy: inflate a measurement by three standard deviations."""


@dataclass(frozen=True)
class Chebyshev:
    """Distribution-free robust bound policy at the given confidence level.

    Uses the multiplier ``1 / sqrt(1 - confidence)``; conservative one-sided
    use of the two-sided tail bound.
    """

    confidence: float

    def __post_init__(self):
        if not (0.0 < self.confidence < 1.0):
            raise ValueError("confidence must lie strictly in (0, 1)")


BoundPolicy = Union[GaussianThreeSigma, Chebyshev]


@dataclass(frozen=True)
class NoiseModel:
    """Additive zero-mean measurement noise: one std dev for the cost, one per constraint."""

    sigma_phi: float
    sigma_g: np.ndarray
    bound_policy: BoundPolicy = GaussianThreeSigma()

    def __post_init__(self):
        if self.sigma_phi < 0.0:
            raise ValueError("sigma_phi must be nonnegative")
        sigma_g = np.atleast_1d(np.asarray(self.sigma_g, dtype=float))
        if sigma_g.ndim != 1:
            raise DimensionMismatchError("sigma_g must be a vector")
        if np.any(sigma_g < 0.0) or not np.all(np.isfinite(sigma_g)):
            raise ValueError("sigma_g entries must be finite and nonnegative")
        object.__setattr__(self, "sigma_g", _frozen(sigma_g))

    @property
    def n_g(self) -> int:
        return self.sigma_g.size


def robust_multiplier(policy: BoundPolicy) -> float:
    """Number of standard deviations added to upper-bound a noisy measurement."""
    if isinstance(policy, GaussianThreeSigma):
        return 3.0
    if isinstance(policy, Chebyshev):
        return 1.0 / math.sqrt(1.0 - policy.confidence)
    raise TypeError(f"unknown bound policy: {policy!r}")


def robust_upper_bound(g_hat: float, sigma: float, policy: BoundPolicy) -> float:
    """High-probability upper bound on a true constraint value given a noisy measurement."""
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    return g_hat + robust_multiplier(policy) * sigma


def lipschitz_upper_bound(
    g_a: float, kappa: LipschitzVector, a: ScaledPoint, b: ScaledPoint
) -> float:
    """Worst-case constraint value at ``b`` given its value at ``a``.

    Valid whenever both points lie in the region over which ``kappa`` bounds
    the partial derivatives (the caller's responsibility).
    """
    if not (kappa.n_u == a.n_u == b.n_u):
        raise DimensionMismatchError("kappa, a, b lengths differ")
    return g_a + float(np.dot(kappa.kappa, np.abs(b.coords - a.coords)))


def polytope_contains(poly: LipschitzPolytope, p: ScaledPoint) -> bool:
    """Whether the Lipschitz bound anchored at the polytope's center certifies ``p``."""
    return lipschitz_upper_bound(poly.g_star, poly.kappa, poly.center, p) <= 0.0


def required_backoff(kappa: LipschitzVector, delta_e: float) -> float:
    """Back-off that makes a ball of radius ``delta_e`` provably feasible.

    Equals ``delta_e * ||kappa||_2``; by Cauchy-Schwarz the ball of radius
    ``delta_e`` then fits inside the Lipschitz polytope of any constraint
    whose center value is at or below minus this amount.
    """
    if delta_e <= 0.0:
        raise ValueError("delta_e must be positive")
    return delta_e * kappa.norm()


@dataclass(frozen=True)
class ConstraintBackoff:
    """Per-constraint entry of a certificate: back-off, robust value, slack."""

    kappa: LipschitzVector
    backoff: float
    robust_value: float
    margin: float


@dataclass(frozen=True)
class SafetyCertificate:
    """Safe/unsafe verdict for perturbing anywhere in an excitation ball.

    ``safe`` is true exactly when every constraint's robust value sits at or
    below minus its back-off, i.e. every margin is nonnegative. Comparisons
    are exact floating-point; margins are stored so callers can impose
    stricter policies of their own.
    """

    ball: ExcitationBall
    per_constraint: tuple[ConstraintBackoff, ...]
    safe: bool


def certify_ball(
    ball: ExcitationBall,
    robust_values,
    kappas: list[LipschitzVector],
) -> SafetyCertificate:
    """Build the safety certificate for an excitation ball.

    ``robust_values[j]`` is the (already noise-inflated) constraint value at
    the ball center and ``kappas[j]`` its Lipschitz vector over the ball.
    """
    robust_values = _as_float_vector(robust_values, "robust_values")
    if len(kappas) != robust_values.size:
        raise DimensionMismatchError("one Lipschitz vector per constraint required")
    entries = []
    for g_bar, kappa in zip(robust_values, kappas):
        if kappa.n_u != ball.center.n_u:
            raise DimensionMismatchError("kappa length differs from ball dimension")
        b = required_backoff(kappa, ball.radius)
        entries.append(
            ConstraintBackoff(
                kappa=kappa,
                backoff=b,
                robust_value=float(g_bar),
                margin=-b - float(g_bar),
            )
        )
    safe = all(e.margin >= 0.0 for e in entries)
    return SafetyCertificate(ball=ball, per_constraint=tuple(entries), safe=safe)


def shrink_delta(
    g_star: float,
    kappa_at_initial: LipschitzVector,
    delta_initial: float,
    max_halvings: int,
) -> float:
    """First radius in the halving sequence whose back-off the center value meets.

    Tries ``delta_initial / 2**n`` for ``n = 0, 1, ..., max_halvings`` and
    returns the first radius with ``g_star <= -radius * ||kappa||_2``. The
    Lipschitz vector supplied for the initial ball is reused throughout:
    each halved ball is a subset of the initial one, so the constants stay
    valid.
    """
    if delta_initial <= 0.0:
        raise ValueError("delta_initial must be positive")
    if g_star >= 0.0:
        raise InfeasibleAtCenterError(
            f"center value {g_star!r} is not strictly feasible"
        )
    norm = kappa_at_initial.norm()
    delta = float(delta_initial)
    for _ in range(max_halvings + 1):
        if g_star <= -delta * norm:
            return delta
        delta /= 2.0
    raise NotReachedError(
        f"back-off not met after {max_halvings} halvings (g_star={g_star!r})"
    )


def estimate_lipschitz(
    grad_estimate, sigma: float, s, delta_e: float
) -> LipschitzVector:
    """Lipschitz constants from a regressed gradient plus a noise/lag inflation.

    Per axis: ``|gradient| + 6 * sigma * sqrt(2) / (s_i * delta_e)``, where
    ``s_i`` (1 or 2) is how many perturbations were tested on that axis. The
    inflation is six times the standard deviation of the difference-quotient
    gradient estimate: half guards against noise in the estimate, half
    against the constants growing by the time they are used one cycle later.
    """
    grad = _as_float_vector(grad_estimate, "grad_estimate")
    s = np.asarray(s, dtype=int)
    if s.shape != grad.shape:
        raise DimensionMismatchError("s and grad_estimate lengths differ")
    if not np.all((s == 1) | (s == 2)):
        raise ValueError("each s entry must be 1 or 2")
    if delta_e <= 0.0:
        raise ValueError("delta_e must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    inflation = 6.0 * sigma * math.sqrt(2.0) / (s * delta_e)
    return LipschitzVector(np.abs(grad) + inflation)


def affine_ball_max(coeffs, offset: float, ball: ExcitationBall) -> float:
    """Exact maximum of an affine constraint ``coeffs . u + offset`` over a ball.

    Closed form for the special case where the constraint is a known affine
    numerical function: the maximum over a Euclidean ball of radius ``r`` is
    the center value plus ``r * ||coeffs||_2``.
    """
    coeffs = _as_float_vector(coeffs, "coeffs")
    if coeffs.size != ball.center.n_u:
        raise DimensionMismatchError("coeffs length differs from ball dimension")
    center_value = float(np.dot(coeffs, ball.center.coords)) + offset
    return center_value + ball.radius * float(np.linalg.norm(coeffs))

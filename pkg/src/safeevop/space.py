"""Decision space and the unit-cube scaling between raw and scaled coordinates.

All optimizer mathematics runs in scaled coordinates, where every decision
variable lives in [0, 1] and a Euclidean ball is a sensible excitation
region. Raw (engineering-unit) vectors appear only at the boundary of the
system: plant evaluation, operator-facing suggestions, and exports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NonFiniteError, OutOfBoundsError

# Absolute slack tolerated when checking raw coordinates against bounds.
BOUNDS_SLACK = 1e-12


def _as_float_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return v


def _frozen(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class DecisionSpace:
    """Box of admissible raw decision vectors, ``lower[i] <= u[i] <= upper[i]``.

    Bounds must be strictly ordered per axis so the affine map onto the unit
    cube is well defined.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _as_float_vector(self.lower, "lower")
        upper = _as_float_vector(self.upper, "upper")
        if lower.shape != upper.shape:
            raise DimensionMismatchError("lower and upper must have the same length")
        if lower.size < 1:
            raise DimensionMismatchError("decision space needs at least one variable")
        if not np.all(lower < upper):
            bad = int(np.argmin(upper - lower))
            raise OutOfBoundsError(bad, lower[bad], -np.inf, upper[bad])
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))

    @property
    def n_u(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, u, slack: float = BOUNDS_SLACK) -> bool:
        u = np.asarray(u, dtype=float)
        return bool(
            np.all(u >= self.lower - slack) and np.all(u <= self.upper + slack)
        )


@dataclass(frozen=True)
class ScaledPoint:
    """A point of the unit cube, i.e. a scaled decision vector.

    Construction rejects coordinates outside [0, 1]; scaled points are the
    only coordinates the optimizer core operates on.
    """

    coords: np.ndarray

    def __post_init__(self):
        coords = _as_float_vector(self.coords, "coords")
        for i, c in enumerate(coords):
            if c < 0.0 or c > 1.0:
                raise OutOfBoundsError(i, c, 0.0, 1.0)
        object.__setattr__(self, "coords", _frozen(coords))

    @property
    def n_u(self) -> int:
        return self.coords.size

    def __len__(self) -> int:
        return self.coords.size


def scale_point(space: DecisionSpace, u) -> ScaledPoint:
    """Map a raw vector into the unit cube.

    Raw coordinates may stray past the bounds by at most ``BOUNDS_SLACK``
    (absolute); anything further raises :class:`OutOfBoundsError`. Values
    within the slack are clipped so the result is a valid scaled point.
    """
    u = _as_float_vector(u, "u")
    if u.shape != space.lower.shape:
        raise DimensionMismatchError("u has wrong length for this space")
    for i in range(space.n_u):
        if u[i] < space.lower[i] - BOUNDS_SLACK or u[i] > space.upper[i] + BOUNDS_SLACK:
            raise OutOfBoundsError(i, u[i], space.lower[i], space.upper[i])
    coords = (u - space.lower) / space.span
    return ScaledPoint(np.clip(coords, 0.0, 1.0))


def unscale_point(space: DecisionSpace, p: ScaledPoint) -> np.ndarray:
    """Map a scaled point back to raw units (inverse of :func:`scale_point`)."""
    if p.n_u != space.n_u:
        raise DimensionMismatchError("point has wrong length for this space")
    return space.lower + p.coords * space.span

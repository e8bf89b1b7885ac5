"""Simulated experimental plants with additive Gaussian noise, plus a grid oracle.

The built-in catalog replaces real case-study process models with small
polynomial analogs that keep the geometry that matters for a safe optimizer:
an active constraint at the optimum (``quad-linear``), an enclosed
infeasible region the iterate must skirt (``quad-circle``), and a pair of
constraints meeting near the optimum (``two-constraint``). All three live on
the unit box, so raw and scaled coordinates coincide, and all functions are
dense polynomials so the exhaustive grid oracle can certify their optima.

Noise draws come from a caller-supplied ``numpy.random.Generator`` (PCG64 in
practice), one standard-normal vector per evaluation, cost first and then
the constraints in index order; a fixed seed therefore replays a trajectory
exactly. True (noiseless) values are carried on the reading for the audit
layer only; the optimizer is meant to see just ``phi_hat``/``g_hat``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .backoff import NoiseModel
from .errors import (
    DimensionMismatchError,
    GridTooLargeError,
    OutOfBoundsError,
    SafeEvopError,
)
from .space import BOUNDS_SLACK, DecisionSpace, _frozen

GRID_POINT_BUDGET = 10**7


@dataclass(frozen=True)
class Polynomial:
    """Dense monomial table; term t is ``coeffs[t] * prod_i u_i**powers[t, i]``."""

    coeffs: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        powers = np.asarray(self.powers, dtype=np.int64)
        if coeffs.ndim != 1 or powers.ndim != 2 or powers.shape[0] != coeffs.size:
            raise ValueError("coeffs must be (T,), powers (T, n_u)")
        if np.any(powers < 0):
            raise ValueError("powers must be nonnegative")
        object.__setattr__(self, "coeffs", _frozen(coeffs))
        object.__setattr__(self, "powers", _frozen(powers))

    @property
    def n_u(self) -> int:
        return self.powers.shape[1]

    def __call__(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(kernels.poly_eval(self.coeffs, self.powers, u[None, :])[0])

    def batch(self, points) -> np.ndarray:
        return kernels.poly_eval(self.coeffs, self.powers, points)

    def packed(self):
        return self.coeffs, self.powers


@dataclass(frozen=True)
class Plant:
    """An evaluable experimental system: true functions plus a noise model.

    ``start`` is the default initial reference for optimization runs --
    chosen well inside the feasible region, mirroring how a campaign begins
    from a known safe operating point. ``noise_scale`` multiplies every
    standard deviation at evaluation time (the annealed runs attenuate real
    noise with it).
    """

    name: str
    space: DecisionSpace
    cost: Polynomial
    constraints: tuple[Polynomial, ...]
    noise: NoiseModel
    start: np.ndarray
    noise_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "start", _frozen(np.asarray(self.start, dtype=float)))
        if self.noise.n_g != len(self.constraints):
            raise ValueError("noise model must carry one sigma per constraint")

    @property
    def n_g(self) -> int:
        return len(self.constraints)

    def true_values(self, u) -> tuple[float, np.ndarray]:
        phi = self.cost(u)
        g = np.array([c(u) for c in self.constraints])
        return phi, g

    def with_noise_scale(self, scale: float) -> "Plant":
        return replace(self, noise_scale=float(scale))


@dataclass(frozen=True)
class PlantReading:
    """One evaluation: noisy values for the optimizer, true values for the audit."""

    u: np.ndarray
    phi_hat: float
    g_hat: np.ndarray
    phi_true: float
    g_true: np.ndarray


@dataclass(frozen=True)
class OracleResult:
    """Best feasible grid point under the true functions."""

    u_opt: np.ndarray
    phi_opt: float
    grid_resolution: float
    feasible_count: int


def evaluate(
    plant: Plant, u, rng: np.random.Generator, noise_scale: float | None = None
) -> PlantReading:
    """Apply ``u`` to the plant and read back noise-corrupted measurements.

    One standard-normal draw per measured quantity, cost first; the scale of
    the added noise is ``noise_scale`` (defaulting to the plant's own) times
    the model standard deviations.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != plant.space.lower.shape:
        raise DimensionMismatchError("u has wrong length for this plant")
    for i in range(plant.space.n_u):
        if (
            u[i] < plant.space.lower[i] - BOUNDS_SLACK
            or u[i] > plant.space.upper[i] + BOUNDS_SLACK
        ):
            raise OutOfBoundsError(i, u[i], plant.space.lower[i], plant.space.upper[i])
    scale = plant.noise_scale if noise_scale is None else float(noise_scale)
    phi_true, g_true = plant.true_values(u)
    z = rng.standard_normal(1 + plant.n_g)
    phi_hat = phi_true + scale * plant.noise.sigma_phi * z[0]
    g_hat = g_true + scale * plant.noise.sigma_g * z[1:]
    return PlantReading(u=u, phi_hat=float(phi_hat), g_hat=g_hat, phi_true=phi_true, g_true=g_true)


def grid_oracle(plant: Plant, resolution: float) -> OracleResult:
    """Certify the plant's constrained optimum by exhaustive grid evaluation.

    Scans the scaled lattice with spacing ``resolution`` (so ``1/resolution``
    cells per axis), unscaled to raw units, keeping the best point whose true
    constraint values are all <= 0 exactly.
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    n_cells = int(round(1.0 / resolution))
    total = (n_cells + 1) ** plant.space.n_u
    if total > GRID_POINT_BUDGET:
        raise GridTooLargeError(f"grid of {total} points exceeds {GRID_POINT_BUDGET}")
    point, phi, feasible = kernels.grid_scan(
        n_cells,
        plant.space.lower,
        plant.space.upper,
        plant.cost.packed(),
        [c.packed() for c in plant.constraints],
    )
    if point is None:
        raise SafeEvopError(f"no feasible grid point for plant {plant.name!r}")
    return OracleResult(
        u_opt=point, phi_opt=phi, grid_resolution=resolution, feasible_count=feasible
    )


# ---------------------------------------------------------------------------
# Catalog


def _poly(terms: list[tuple[float, tuple[int, ...]]]) -> Polynomial:
    coeffs = np.array([t[0] for t in terms])
    powers = np.array([t[1] for t in terms], dtype=np.int64)
    return Polynomial(coeffs, powers)


def _unit_space() -> DecisionSpace:
    return DecisionSpace(np.array([0.0, 0.0]), np.array([1.0, 1.0]))


def _quad_linear() -> Plant:
    # cost (u1-0.7)^2 + (u2-0.7)^2, one linear constraint active at the optimum
    cost = _poly(
        [(1.0, (2, 0)), (-1.4, (1, 0)), (1.0, (0, 2)), (-1.4, (0, 1)), (0.98, (0, 0))]
    )
    g1 = _poly([(1.0, (1, 0)), (1.0, (0, 1)), (-1.2, (0, 0))])
    # start off the 0.05 lattice of the constraint line so a fixed-radius
    # march cannot tiptoe onto the boundary exactly
    return Plant(
        name="quad-linear",
        space=_unit_space(),
        cost=cost,
        constraints=(g1,),
        noise=NoiseModel(sigma_phi=0.01, sigma_g=np.array([0.005])),
        start=np.array([0.3, 0.32]),
    )


def _quad_circle() -> Plant:
    # cost (u1-0.55)^2 + (u2-0.5)^2; feasible region is the outside of a
    # disk enclosing the cost minimum, so the iterate has to go around
    cost = _poly(
        [(1.0, (2, 0)), (-1.1, (1, 0)), (1.0, (0, 2)), (-1.0, (0, 1)), (0.5525, (0, 0))]
    )
    g1 = _poly(
        [
            (-1.0, (2, 0)),
            (1.0, (1, 0)),
            (-1.0, (0, 2)),
            (1.0, (0, 1)),
            (0.09 - 0.5, (0, 0)),
        ]
    )
    return Plant(
        name="quad-circle",
        space=_unit_space(),
        cost=cost,
        constraints=(g1,),
        noise=NoiseModel(sigma_phi=0.01, sigma_g=np.array([0.005])),
        start=np.array([0.1, 0.1]),
    )


def _two_constraint() -> Plant:
    # linear cost pushed into the corner formed by a disk and a half-plane
    cost = _poly([(-1.0, (1, 0)), (-1.0, (0, 1))])
    g1 = _poly([(1.0, (2, 0)), (1.0, (0, 2)), (-0.8, (0, 0))])
    g2 = _poly([(1.0, (1, 0)), (2.0, (0, 1)), (-1.5, (0, 0))])
    return Plant(
        name="two-constraint",
        space=_unit_space(),
        cost=cost,
        constraints=(g1, g2),
        noise=NoiseModel(sigma_phi=0.01, sigma_g=np.array([0.005, 0.005])),
        start=np.array([0.2, 0.2]),
    )


CATALOG = {
    "quad-linear": _quad_linear,
    "quad-circle": _quad_circle,
    "two-constraint": _two_constraint,
}


def get_plant(name: str) -> Plant:
    """Catalog plant by name, or a custom plant loaded from a JSON file path."""
    if name in CATALOG:
        return CATALOG[name]()
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        return load_plant_file(path)
    raise KeyError(f"unknown plant {name!r}; catalog: {sorted(CATALOG)}")


def load_plant_file(path) -> Plant:
    """Build a plant from a JSON description.

    Expected keys: ``name``, ``lower``, ``upper``, ``start``, ``sigma_phi``,
    ``sigma_g`` (scalar or list), ``cost`` and ``constraints`` as monomial
    tables ``{"coeffs": [...], "powers": [[...], ...]}``. Polynomials are
    functions of the raw coordinates.
    """
    spec = json.loads(Path(path).read_text())

    def poly(entry):
        return Polynomial(np.asarray(entry["coeffs"], dtype=float),
                          np.asarray(entry["powers"], dtype=np.int64))

    constraints = tuple(poly(e) for e in spec.get("constraints", []))
    sigma_g = np.atleast_1d(np.asarray(spec.get("sigma_g", []), dtype=float))
    if sigma_g.size == 1 and len(constraints) > 1:
        sigma_g = np.full(len(constraints), float(sigma_g[0]))
    return Plant(
        name=str(spec["name"]),
        space=DecisionSpace(np.asarray(spec["lower"], float), np.asarray(spec["upper"], float)),
        cost=poly(spec["cost"]),
        constraints=constraints,
        noise=NoiseModel(sigma_phi=float(spec.get("sigma_phi", 0.0)), sigma_g=sigma_g),
        start=np.asarray(spec["start"], dtype=float),
    )

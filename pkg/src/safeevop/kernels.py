"""Hot numeric kernels: batch polynomial evaluation, grid scans, ball sampling.

Every kernel has two interchangeable implementations: a numba ``@njit``
version (default when numba imports) and a pure-numpy version. Selection is
by the ``SAFEEVOP_BACKEND`` environment variable (``numba``, ``numpy`` or
``auto``) read at import, overridable at runtime with :func:`set_backend`.
Both paths perform floating-point operations in the same order, so results
are bit-identical; ``benchmarks/bench_kernels.py`` compares their speed.

Polynomials are dense monomial tables: ``coeffs`` of shape (T,) and integer
``powers`` of shape (T, n_u); term t contributes
``coeffs[t] * prod_i u_i ** powers[t, i]``. Powers are expanded as repeated
multiplication (never ``**``) to keep the two backends' arithmetic
identical.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_ENV_VAR = "SAFEEVOP_BACKEND"
_CHUNK = 1 << 18  # grid points decoded per numpy-fallback block

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _resolve_backend(choice: str) -> str:
    choice = choice.lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"backend must be auto, numba or numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    if choice == "numba" and not _HAVE_NUMBA:
        warnings.warn("numba requested but not importable; using numpy")
        return "numpy"
    return "numba" if _HAVE_NUMBA else "numpy"


_active = _resolve_backend(os.environ.get(_ENV_VAR, "auto"))


def active_backend() -> str:
    """Name of the backend kernels currently dispatch to."""
    return _active


def set_backend(choice: str) -> None:
    """Force ``numba`` or ``numpy`` (or ``auto``) for subsequent kernel calls."""
    global _active
    _active = _resolve_backend(choice)


def _check_poly(coeffs, powers):
    coeffs = np.ascontiguousarray(coeffs, dtype=float)
    powers = np.ascontiguousarray(powers, dtype=np.int64)
    if coeffs.ndim != 1 or powers.ndim != 2 or powers.shape[0] != coeffs.size:
        raise ValueError("coeffs must be (T,), powers (T, n_u)")
    if np.any(powers < 0):
        raise ValueError("powers must be nonnegative")
    return coeffs, powers


# ---------------------------------------------------------------------------
# Batch polynomial evaluation


def _poly_eval_numpy(coeffs, powers, points):
    out = np.zeros(points.shape[0])
    for t in range(coeffs.size):
        term = np.full(points.shape[0], coeffs[t])
        for i in range(points.shape[1]):
            for _ in range(powers[t, i]):
                term *= points[:, i]
        out += term
    return out


if _HAVE_NUMBA:

    @njit(cache=True)
    def _poly_eval_point(coeffs, powers, lo, hi, u):
        acc = 0.0
        for t in range(lo, hi):
            m = coeffs[t]
            for i in range(u.shape[0]):
                for _ in range(powers[t, i]):
                    m *= u[i]
            acc += m
        return acc

    @njit(cache=True)
    def _poly_eval_numba(coeffs, powers, points):
        out = np.empty(points.shape[0])
        for r in range(points.shape[0]):
            out[r] = _poly_eval_point(coeffs, powers, 0, coeffs.shape[0], points[r])
        return out


def poly_eval(coeffs, powers, points) -> np.ndarray:
    """Evaluate one polynomial at a batch of points (m x n_u) -> (m,)."""
    coeffs, powers = _check_poly(coeffs, powers)
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    if points.shape[1] != powers.shape[1]:
        raise ValueError("points dimension differs from polynomial arity")
    if _active == "numba":
        return _poly_eval_numba(coeffs, powers, points)
    return _poly_eval_numpy(coeffs, powers, points)


# ---------------------------------------------------------------------------
# Exhaustive grid scan: best feasible point of a polynomial program


def pack_polynomials(polys) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concatenate (coeffs, powers) pairs into flat arrays plus offsets."""
    if not polys:
        n_u = 0
        return np.zeros(0), np.zeros((0, n_u), dtype=np.int64), np.zeros(1, dtype=np.int64)
    coeffs_list, powers_list, offsets = [], [], [0]
    for c, p in polys:
        c, p = _check_poly(c, p)
        coeffs_list.append(c)
        powers_list.append(p)
        offsets.append(offsets[-1] + c.size)
    return (
        np.concatenate(coeffs_list),
        np.vstack(powers_list),
        np.asarray(offsets, dtype=np.int64),
    )


def _decode_axis(flat, n_cells, lower, upper, i, n_u):
    # axis n_u-1 varies fastest (C order); x = t / n_cells keeps grid
    # coordinates like 0.6 exact
    base = n_cells + 1
    divisor = base ** (n_u - 1 - i)
    t = (flat // divisor) % base
    return lower[i] + (t / n_cells) * (upper[i] - lower[i])


def _grid_scan_numpy(n_cells, lower, upper, c_cost, p_cost, c_con, p_con, off_con):
    n_u = lower.size
    base = n_cells + 1
    total = base**n_u
    n_g = off_con.size - 1
    best_phi = np.inf
    best_idx = -1
    feasible = 0
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        pts = np.empty((flat.size, n_u))
        for i in range(n_u):
            pts[:, i] = _decode_axis(flat, n_cells, lower, upper, i, n_u)
        ok = np.ones(flat.size, dtype=bool)
        for j in range(n_g):
            g = _poly_eval_numpy(
                c_con[off_con[j] : off_con[j + 1]],
                p_con[off_con[j] : off_con[j + 1]],
                pts,
            )
            ok &= g <= 0.0
        n_ok = int(np.count_nonzero(ok))
        feasible += n_ok
        if n_ok:
            phi = _poly_eval_numpy(c_cost, p_cost, pts[ok])
            local = int(np.argmin(phi))
            if phi[local] < best_phi:
                best_phi = float(phi[local])
                best_idx = int(flat[ok][local])
    return best_idx, best_phi, feasible


if _HAVE_NUMBA:

    @njit(cache=True)
    def _grid_scan_numba(n_cells, lower, upper, c_cost, p_cost, c_con, p_con, off_con):
        n_u = lower.shape[0]
        base = n_cells + 1
        total = 1
        for _ in range(n_u):
            total *= base
        n_g = off_con.shape[0] - 1
        best_phi = np.inf
        best_idx = -1
        feasible = 0
        u = np.empty(n_u)
        for flat in range(total):
            rem = flat
            for i in range(n_u - 1, -1, -1):
                t = rem % base
                rem //= base
                u[i] = lower[i] + (t / n_cells) * (upper[i] - lower[i])
            ok = True
            for j in range(n_g):
                if _poly_eval_point(c_con, p_con, off_con[j], off_con[j + 1], u) > 0.0:
                    ok = False
                    break
            if ok:
                feasible += 1
                phi = _poly_eval_point(c_cost, p_cost, 0, c_cost.shape[0], u)
                if phi < best_phi:
                    best_phi = phi
                    best_idx = flat
        return best_idx, best_phi, feasible


def grid_scan(n_cells: int, lower, upper, cost, constraints):
    """Scan the (n_cells + 1)^n_u lattice of the box for the best feasible point.

    ``cost`` is a (coeffs, powers) pair; ``constraints`` a list of such
    pairs, feasible meaning every value <= 0 exactly. Returns
    ``(best_point, best_value, feasible_count)``; ``best_point`` is None if
    nothing is feasible. Ties go to the lowest flat grid index on either
    backend.
    """
    lower = np.ascontiguousarray(lower, dtype=float)
    upper = np.ascontiguousarray(upper, dtype=float)
    c_cost, p_cost = _check_poly(*cost)
    c_con, p_con, off_con = pack_polynomials(constraints)
    if constraints and p_con.shape[1] != lower.size:
        raise ValueError("constraint arity differs from box dimension")
    if p_con.shape[0] == 0:
        p_con = np.zeros((0, lower.size), dtype=np.int64)
    args = (int(n_cells), lower, upper, c_cost, p_cost, c_con, p_con, off_con)
    if _active == "numba":
        idx, phi, feasible = _grid_scan_numba(*args)
    else:
        idx, phi, feasible = _grid_scan_numpy(*args)
    if idx < 0:
        return None, float("nan"), 0
    n_u = lower.size
    point = np.array(
        [_decode_axis(np.int64(idx), int(n_cells), lower, upper, i, n_u) for i in range(n_u)]
    )
    return point, float(phi), int(feasible)


# ---------------------------------------------------------------------------
# Ball sampling and affine violation counting


def sample_ball(center, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points uniformly from the Euclidean ball around ``center``."""
    center = np.asarray(center, dtype=float)
    d = center.size
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return center + z * r[:, None]


def _affine_violations_numpy(a, c, points):
    # accumulate axis by axis so the additions happen in the same order as
    # the numba row loop
    v = np.full(points.shape[0], c)
    for i in range(points.shape[1]):
        v += a[i] * points[:, i]
    return int(np.count_nonzero(v > 0.0))


if _HAVE_NUMBA:

    @njit(cache=True)
    def _affine_violations_numba(a, c, points):
        count = 0
        for r in range(points.shape[0]):
            v = c
            for i in range(points.shape[1]):
                v += a[i] * points[r, i]
            if v > 0.0:
                count += 1
        return count


def affine_violations(a, c: float, points) -> int:
    """Count points with ``a . p + c > 0`` (violations of an affine constraint)."""
    a = np.ascontiguousarray(a, dtype=float)
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    if points.shape[1] != a.size:
        raise ValueError("points dimension differs from coefficient length")
    if _active == "numba":
        return int(_affine_violations_numba(a, float(c), points))
    return _affine_violations_numpy(a, float(c), points)

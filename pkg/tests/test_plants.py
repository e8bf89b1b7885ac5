import json

import numpy as np
import pytest

from safeevop import CATALOG, Polynomial, evaluate, get_plant, grid_oracle, load_plant_file
from safeevop.errors import GridTooLargeError, OutOfBoundsError
from safeevop.plants import OracleResult

# analytic constrained optima, scaled coordinates
QUAD_LINEAR_OPT = (np.array([0.6, 0.6]), 0.02)
QUAD_CIRCLE_OPT = (np.array([0.8, 0.5]), 0.0625)
# two-constraint: both constraints active; v = (6 - sqrt(7)) / 10 on the line
_V = (6.0 - np.sqrt(7.0)) / 10.0
TWO_CONSTRAINT_OPT = (np.array([1.5 - 2 * _V, _V]), -(1.5 - _V))


class TestCatalog:
    def test_names(self):
        assert set(CATALOG) == {"quad-linear", "quad-circle", "two-constraint"}

    def test_quad_linear_hand_values(self):
        p = get_plant("quad-linear")
        phi, g = p.true_values(np.array([0.7, 0.7]))
        assert phi == pytest.approx(0.0, abs=1e-12)
        assert g[0] == pytest.approx(0.2, abs=1e-12)

    def test_quad_circle_geometry(self):
        p = get_plant("quad-circle")
        # inside the disk is infeasible, outside feasible
        assert p.constraints[0](np.array([0.5, 0.5])) > 0
        assert p.constraints[0](np.array([0.9, 0.9])) < 0

    def test_starts_are_safely_feasible(self):
        for name in CATALOG:
            p = get_plant(name)
            _, g = p.true_values(p.start)
            assert np.all(g < -0.05)

    def test_smoothness_spot_checks(self):
        # finite-difference gradients vary continuously: nearby points give
        # nearby gradient estimates (C^1 catalog functions)
        rng = np.random.default_rng(12)
        h = 1e-5
        for name in CATALOG:
            p = get_plant(name)
            funcs = [p.cost, *p.constraints]
            for _ in range(100 // len(CATALOG) + 1):
                u = rng.uniform(0.1, 0.9, 2)
                shift = rng.uniform(-1e-3, 1e-3, 2)
                for f in funcs:
                    g1 = _fd_gradient(f, u, h)
                    g2 = _fd_gradient(f, u + shift, h)
                    assert np.linalg.norm(g2 - g1) <= 10 * np.linalg.norm(shift) + 1e-8


def _fd_gradient(f, u, h):
    grad = np.zeros(u.size)
    for i in range(u.size):
        e = np.zeros(u.size)
        e[i] = h
        grad[i] = (f(u + e) - f(u - e)) / (2 * h)
    return grad


class TestEvaluate:
    def test_noiseless_at_zero_scale(self):
        p = get_plant("quad-linear")
        r = evaluate(p, np.array([0.4, 0.4]), np.random.default_rng(0), noise_scale=0.0)
        assert r.phi_hat == r.phi_true
        np.testing.assert_array_equal(r.g_hat, r.g_true)

    def test_fixed_seed_replays(self):
        p = get_plant("two-constraint")
        a = evaluate(p, np.array([0.3, 0.3]), np.random.default_rng(17))
        b = evaluate(p, np.array([0.3, 0.3]), np.random.default_rng(17))
        assert a.phi_hat == b.phi_hat
        np.testing.assert_array_equal(a.g_hat, b.g_hat)

    def test_out_of_bounds(self):
        p = get_plant("quad-linear")
        with pytest.raises(OutOfBoundsError):
            evaluate(p, np.array([1.2, 0.5]), np.random.default_rng(0))

    def test_noise_statistics(self):
        p = get_plant("quad-linear")
        rng = np.random.default_rng(99)
        u = np.array([0.5, 0.5])
        n = 10**5
        phi_err = np.empty(n)
        g_err = np.empty(n)
        for i in range(n):
            r = evaluate(p, u, rng)
            phi_err[i] = r.phi_hat - r.phi_true
            g_err[i] = r.g_hat[0] - r.g_true[0]
        sigma_phi = p.noise.sigma_phi
        assert abs(phi_err.mean()) <= 4 * sigma_phi / np.sqrt(n)
        assert phi_err.std() == pytest.approx(sigma_phi, rel=0.02)
        assert g_err.std() == pytest.approx(p.noise.sigma_g[0], rel=0.02)

    def test_noise_scale_attenuates(self):
        p = get_plant("quad-linear").with_noise_scale(0.5)
        rng = np.random.default_rng(7)
        errs = np.array(
            [evaluate(p, np.array([0.5, 0.5]), rng).phi_hat - 0.08 for _ in range(20000)]
        )
        assert errs.std() == pytest.approx(0.5 * p.noise.sigma_phi, rel=0.05)


class TestGridOracle:
    def test_quad_linear_matches_analytic(self):
        res = grid_oracle(get_plant("quad-linear"), 1e-3)
        np.testing.assert_allclose(res.u_opt, QUAD_LINEAR_OPT[0], atol=1e-3 + 1e-12)
        assert res.phi_opt == pytest.approx(QUAD_LINEAR_OPT[1], abs=1e-3)

    def test_quad_circle_matches_analytic(self):
        res = grid_oracle(get_plant("quad-circle"), 1e-3)
        np.testing.assert_allclose(res.u_opt, QUAD_CIRCLE_OPT[0], atol=1e-3 + 1e-12)
        assert res.phi_opt == pytest.approx(QUAD_CIRCLE_OPT[1], abs=1e-3)

    def test_two_constraint_matches_analytic(self):
        res = grid_oracle(get_plant("two-constraint"), 1e-3)
        np.testing.assert_allclose(res.u_opt, TWO_CONSTRAINT_OPT[0], atol=2e-3)
        assert res.phi_opt == pytest.approx(TWO_CONSTRAINT_OPT[1], abs=5e-3)

    def test_optimum_is_feasible_exactly(self):
        for name in CATALOG:
            p = get_plant(name)
            res = grid_oracle(p, 2e-3)
            _, g = p.true_values(res.u_opt)
            assert np.all(g <= 0.0)

    def test_no_feasible_grid_point_below_optimum(self):
        # spot check on a coarse grid the oracle's own scan can enumerate
        p = get_plant("quad-linear")
        res = grid_oracle(p, 0.05)
        grid = np.arange(21) / 20
        uu, vv = np.meshgrid(grid, grid, indexing="ij")
        pts = np.column_stack([uu.ravel(), vv.ravel()])
        phi = p.cost.batch(pts)
        g = p.constraints[0].batch(pts)
        assert res.phi_opt == pytest.approx(float(np.min(phi[g <= 0])), abs=1e-15)

    def test_unconstrained_variant_returns_cost_minimum(self):
        p = get_plant("quad-circle")
        from dataclasses import replace

        from safeevop.backoff import NoiseModel

        free = replace(p, constraints=(), noise=NoiseModel(0.01, np.zeros(0)))
        res = grid_oracle(free, 1e-2)
        np.testing.assert_allclose(res.u_opt, [0.55, 0.5], atol=1e-2 + 1e-12)

    def test_grid_too_large(self):
        with pytest.raises(GridTooLargeError):
            grid_oracle(get_plant("quad-linear"), 1e-4)

    def test_result_fields(self):
        res = grid_oracle(get_plant("quad-linear"), 0.01)
        assert isinstance(res, OracleResult)
        assert res.grid_resolution == 0.01
        assert 0 < res.feasible_count <= 101**2


class TestCustomPlants:
    def test_load_round_trip(self, tmp_path):
        spec = {
            "name": "custom-slope",
            "lower": [0.0, 0.0],
            "upper": [2.0, 2.0],
            "start": [0.5, 0.5],
            "sigma_phi": 0.02,
            "sigma_g": [0.01],
            "cost": {"coeffs": [1.0, 1.0], "powers": [[2, 0], [0, 2]]},
            "constraints": [{"coeffs": [1.0, -3.0], "powers": [[1, 0], [0, 0]]}],
        }
        path = tmp_path / "plant.json"
        path.write_text(json.dumps(spec))
        p = load_plant_file(path)
        assert p.name == "custom-slope"
        assert p.n_g == 1
        assert p.cost(np.array([1.0, 1.0])) == pytest.approx(2.0)
        assert p.constraints[0](np.array([1.0, 0.0])) == pytest.approx(-2.0)
        assert get_plant(str(path)).name == "custom-slope"

    def test_scalar_sigma_broadcasts(self, tmp_path):
        spec = {
            "name": "two-g",
            "lower": [0.0],
            "upper": [1.0],
            "start": [0.2],
            "sigma_phi": 0.0,
            "sigma_g": [0.01],
            "cost": {"coeffs": [1.0], "powers": [[1]]},
            "constraints": [
                {"coeffs": [1.0, -0.9], "powers": [[1], [0]]},
                {"coeffs": [-1.0], "powers": [[1]]},
            ],
        }
        path = tmp_path / "two.json"
        path.write_text(json.dumps(spec))
        p = load_plant_file(path)
        np.testing.assert_array_equal(p.noise.sigma_g, [0.01, 0.01])

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            get_plant("does-not-exist")


class TestPolynomial:
    def test_rejects_negative_powers(self):
        with pytest.raises(ValueError):
            Polynomial(np.array([1.0]), np.array([[-1]]))

    def test_single_point_matches_batch(self):
        p = get_plant("quad-circle").cost
        u = np.array([0.3, 0.8])
        assert p(u) == p.batch(u[None, :])[0]

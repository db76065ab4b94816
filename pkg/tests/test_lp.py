"""Simplex kernel and branch-and-bound checks.

The random families are cross-checked against scipy.optimize.linprog, which
plays no part in the shipped solve path; here it is only the reference.
"""

import numpy as np
import pytest
import scipy.optimize

from gridplan.lp import (
    SolverTolerances,
    duality_report,
    farkas_violation,
    make_lp,
    solve_lp,
    solve_milp,
)


def _scipy_solve(lp):
    ub = np.where(np.isfinite(lp.ub), lp.ub, None)
    lb = np.where(np.isfinite(lp.lb), lp.lb, None)
    bounds = list(zip(lb, ub))
    a_ub = -lp.a_ge.toarray() if lp.a_ge.shape[0] else None
    b_ub = -lp.b_ge if lp.a_ge.shape[0] else None
    a_eq = lp.a_eq.toarray() if lp.a_eq.shape[0] else None
    b_eq = lp.b_eq if lp.a_eq.shape[0] else None
    return scipy.optimize.linprog(lp.c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq,
                                  b_eq=b_eq, bounds=bounds, method="highs")


class TestSolveLp:
    def test_single_bound_row(self):
        lp = make_lp([1.0], a_ge=[[1.0]], b_ge=[1.0])
        out = solve_lp(lp)
        assert out.status == "optimal"
        assert out.objective == pytest.approx(1.0, abs=1e-9)
        assert out.x[0] == pytest.approx(1.0, abs=1e-9)
        assert out.duals_ge[0] == pytest.approx(1.0, abs=1e-9)

    def test_infeasible_pair_has_farkas_certificate(self):
        # x >= 1 together with -x >= 0 is void; a positive combination of
        # the two rows proves 1 <= 0
        lp = make_lp([0.0], a_ge=[[1.0], [-1.0]], b_ge=[1.0, 0.0])
        out = solve_lp(lp)
        assert out.status == "infeasible"
        assert out.farkas_ge is not None
        assert np.all(out.farkas_ge >= -1e-9)
        assert farkas_violation(lp, out.farkas_eq, out.farkas_ge) > 0.0

    def test_simplex_face(self):
        # max x + y over the unit simplex; in >= form the row is -x-y >= -1
        lp = make_lp([-1.0, -1.0], a_ge=[[-1.0, -1.0]], b_ge=[-1.0],
                     lb=[0.0, 0.0])
        out = solve_lp(lp)
        assert out.status == "optimal"
        assert out.objective == pytest.approx(-1.0, abs=1e-9)
        assert out.x[0] + out.x[1] == pytest.approx(1.0, abs=1e-9)
        # >= rows carry nonnegative multipliers; this binding row prices at 1
        assert out.duals_ge[0] == pytest.approx(1.0, abs=1e-9)

    def test_unbounded_gives_improving_ray(self):
        lp = make_lp([-1.0, 0.0], a_ge=[[0.0, 1.0]], b_ge=[0.0],
                     lb=[0.0, 0.0])
        out = solve_lp(lp)
        assert out.status == "unbounded"
        assert out.ray is not None
        assert float(lp.c @ out.ray) < -1e-9
        # the ray must stay feasible for the homogeneous system
        assert np.all(lp.a_ge @ out.ray >= -1e-9)

    def test_equality_system(self):
        # x + y = 3, x - y = 1 has the unique solution (2, 1)
        lp = make_lp([1.0, 2.0], a_eq=[[1.0, 1.0], [1.0, -1.0]],
                     b_eq=[3.0, 1.0])
        out = solve_lp(lp)
        assert out.status == "optimal"
        assert np.allclose(out.x, [2.0, 1.0], atol=1e-9)
        assert out.objective == pytest.approx(4.0, abs=1e-9)

    def test_fixed_column(self):
        lp = make_lp([1.0, 1.0], a_ge=[[1.0, 1.0]], b_ge=[4.0],
                     lb=[2.5, 0.0], ub=[2.5, np.inf])
        out = solve_lp(lp)
        assert out.status == "optimal"
        assert out.x[0] == pytest.approx(2.5, abs=1e-12)
        assert out.x[1] == pytest.approx(1.5, abs=1e-9)

    def test_free_variable(self):
        # y is sign-free and the optimum pushes it negative
        lp = make_lp([0.0, 1.0], a_eq=[[1.0, 1.0]], b_eq=[1.0],
                     lb=[0.0, -np.inf], ub=[0.5, np.inf])
        out = solve_lp(lp)
        assert out.status == "optimal"
        assert out.x[1] == pytest.approx(0.5, abs=1e-9)

    def test_objective_offset_carried(self):
        lp = make_lp([1.0], a_ge=[[1.0]], b_ge=[2.0], objective_offset=10.0)
        out = solve_lp(lp)
        assert out.objective == pytest.approx(12.0, abs=1e-9)

    def test_deterministic_repeat(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(6, 9))
        b = a @ rng.uniform(0.2, 1.0, size=9)
        lp = make_lp(rng.normal(size=9), a_ge=a, b_ge=b,
                     lb=np.zeros(9), ub=np.full(9, 4.0))
        first = solve_lp(lp)
        second = solve_lp(lp)
        assert first.status == second.status == "optimal"
        assert first.objective == second.objective
        assert np.array_equal(first.x, second.x)


class TestMakeLp:
    def test_column_mismatch(self):
        with pytest.raises(ValueError, match="columns"):
            make_lp([1.0, 2.0], a_ge=[[1.0]], b_ge=[1.0])

    def test_rhs_length_mismatch(self):
        with pytest.raises(ValueError, match="rhs"):
            make_lp([1.0], a_ge=[[1.0]], b_ge=[1.0, 2.0])

    def test_crossed_bounds(self):
        with pytest.raises(ValueError, match="bound"):
            make_lp([1.0], lb=[2.0], ub=[1.0])


class TestSolveMilp:
    def test_binary_rounds_up(self):
        lp = make_lp([1.0], a_ge=[[1.0]], b_ge=[0.3],
                     lb=[0.0], ub=[1.0], binary_cols=[0])
        out = solve_milp(lp)
        assert out.status == "optimal"
        assert out.x[0] == pytest.approx(1.0, abs=1e-9)

    def test_tiny_knapsack(self):
        # max 3a + 2b subject to 2a + 2b <= 3 picks the heavier item alone
        lp = make_lp([-3.0, -2.0], a_ge=[[-2.0, -2.0]], b_ge=[-3.0],
                     lb=[0.0, 0.0], ub=[1.0, 1.0], binary_cols=[0, 1])
        out = solve_milp(lp)
        assert out.status == "optimal"
        assert out.objective == pytest.approx(-3.0, abs=1e-9)
        assert np.allclose(out.x, [1.0, 0.0], atol=1e-9)

    def test_integral_flow_solved_at_root(self):
        # two-node shipment with unimodular rows: the relaxation lands integral
        # so no branching should happen
        lp = make_lp([2.0, 3.0],
                     a_eq=[[1.0, 1.0]], b_eq=[1.0],
                     lb=[0.0, 0.0], ub=[1.0, 1.0], binary_cols=[0, 1])
        out = solve_milp(lp)
        assert out.status == "optimal"
        assert out.node_count == 1
        assert np.allclose(out.x, [1.0, 0.0], atol=1e-9)

    def test_bound_matches_objective(self):
        lp = make_lp([-3.0, -2.0, 0.5],
                     a_ge=[[-2.0, -2.0, -1.0]], b_ge=[-3.0],
                     lb=[0.0, 0.0, 0.0], ub=[1.0, 1.0, 2.0],
                     binary_cols=[0, 1])
        out = solve_milp(lp)
        assert out.status == "optimal"
        assert abs(out.objective - out.bound) <= 1e-6

    def test_infeasible_binary_system(self):
        # a + b >= 3 cannot hold for two binaries capped at 1 each... the
        # relaxation already fails
        lp = make_lp([1.0, 1.0], a_ge=[[1.0, 1.0]], b_ge=[3.0],
                     lb=[0.0, 0.0], ub=[1.0, 1.0], binary_cols=[0, 1])
        assert solve_milp(lp).status == "infeasible"

    def test_node_limit_reports_bound(self):
        rng = np.random.default_rng(3)
        n = 10
        w = rng.uniform(1.0, 5.0, size=n)
        v = rng.uniform(1.0, 5.0, size=n)
        lp = make_lp(-v, a_ge=[-w], b_ge=[-0.5 * w.sum()],
                     lb=np.zeros(n), ub=np.ones(n),
                     binary_cols=range(n))
        out = solve_milp(lp, node_limit=2)
        assert out.status == "node_limit"
        assert np.isfinite(out.bound)

    def test_matches_exhaustive_enumeration(self):
        # fix every binary pattern, price the continuous tail by LP, and keep
        # the best; branch-and-bound has to agree
        rng = np.random.default_rng(11)
        for _ in range(8):
            n_bin, n_cont = 5, 3
            n = n_bin + n_cont
            c = rng.normal(size=n)
            a = rng.normal(size=(4, n))
            x0 = np.concatenate([rng.integers(0, 2, n_bin), rng.uniform(0, 2, n_cont)])
            b = a @ x0 - rng.uniform(0.0, 0.5, size=4)
            lb = np.zeros(n)
            ub = np.concatenate([np.ones(n_bin), np.full(n_cont, 2.0)])
            lp = make_lp(c, a_ge=a, b_ge=b, lb=lb, ub=ub,
                         binary_cols=range(n_bin))
            best = np.inf
            for mask in range(2 ** n_bin):
                bits = [(mask >> k) & 1 for k in range(n_bin)]
                flb, fub = lb.copy(), ub.copy()
                flb[:n_bin] = bits
                fub[:n_bin] = bits
                sub = solve_lp(lp.with_bounds(flb, fub))
                if sub.status == "optimal":
                    best = min(best, sub.objective)
            out = solve_milp(lp)
            assert out.status == "optimal"
            assert out.objective == pytest.approx(best, abs=1e-6)


class TestDualityReport:
    def test_optimal_gap_small(self):
        lp = make_lp([-1.0, -1.0], a_ge=[[-1.0, -2.0], [-3.0, -1.0]],
                     b_ge=[-4.0, -6.0], lb=[0.0, 0.0])
        out = solve_lp(lp)
        rep = duality_report(lp, out)
        assert rep["relative_gap"] <= 1e-8
        assert rep["max_complementarity_violation"] <= 1e-7

    def test_perturbed_duals_flagged(self):
        lp = make_lp([-1.0, -1.0], a_ge=[[-1.0, -2.0], [-3.0, -1.0]],
                     b_ge=[-4.0, -6.0], lb=[0.0, 0.0])
        out = solve_lp(lp)
        out.duals_ge = out.duals_ge.copy()
        out.duals_ge[0] += 1e-3
        rep = duality_report(lp, out)
        assert rep["gap"] > 1e-6 or rep["max_complementarity_violation"] > 1e-6

    def test_degenerate_duplicate_rows(self):
        # same facet stated twice: duals are non-unique but the gap must hold
        lp = make_lp([-1.0, -1.0],
                     a_ge=[[-1.0, -1.0], [-1.0, -1.0]], b_ge=[-1.0, -1.0],
                     lb=[0.0, 0.0])
        out = solve_lp(lp)
        assert out.status == "optimal"
        rep = duality_report(lp, out)
        assert rep["relative_gap"] <= 1e-8

    def test_requires_optimal(self):
        lp = make_lp([0.0], a_ge=[[1.0], [-1.0]], b_ge=[1.0, 0.0])
        out = solve_lp(lp)
        with pytest.raises(ValueError):
            duality_report(lp, out)


def _random_feasible(rng, n, m):
    """A >= instance with a planted interior point, so always feasible."""
    a = rng.normal(size=(m, n))
    x0 = rng.uniform(0.5, 1.5, size=n)
    b = a @ x0 - rng.uniform(0.1, 1.0, size=m)
    c = rng.normal(size=n)
    return make_lp(c, a_ge=a, b_ge=b, lb=np.zeros(n), ub=np.full(n, 3.0))


class TestRandomFamilies:
    def test_agrees_with_reference(self):
        rng = np.random.default_rng(2024)
        for trial in range(40):
            n = int(rng.integers(3, 12))
            m = int(rng.integers(2, 10))
            lp = _random_feasible(rng, n, m)
            out = solve_lp(lp)
            ref = _scipy_solve(lp)
            assert out.status == "optimal", f"trial {trial}"
            assert ref.status == 0
            assert out.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)
            rep = duality_report(lp, out)
            assert rep["relative_gap"] <= 1e-8

    def test_infeasible_certificates(self):
        rng = np.random.default_rng(515)
        found = 0
        for _ in range(60):
            n = int(rng.integers(2, 8))
            a = rng.normal(size=(4, n))
            row = rng.normal(size=n)
            # append the negation of one row with an incompatible rhs
            a = np.vstack([a, row, -row])
            b = np.concatenate([rng.normal(size=4), [1.0, 0.5]])
            lp = make_lp(rng.normal(size=n), a_ge=a, b_ge=b,
                         lb=np.zeros(n), ub=np.full(n, 2.0))
            out = solve_lp(lp)
            ref = _scipy_solve(lp)
            if ref.status == 2:
                assert out.status == "infeasible"
                assert farkas_violation(lp, out.farkas_eq, out.farkas_ge) > 0.0
                found += 1
            elif ref.status == 0:
                assert out.status == "optimal"
                assert out.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)
        assert found >= 20

    def test_equality_mix(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            n = int(rng.integers(4, 10))
            x0 = rng.uniform(0.3, 1.7, size=n)
            a_eq = rng.normal(size=(2, n))
            a_ge = rng.normal(size=(3, n))
            lp = make_lp(rng.normal(size=n),
                         a_eq=a_eq, b_eq=a_eq @ x0,
                         a_ge=a_ge, b_ge=a_ge @ x0 - 0.2,
                         lb=np.zeros(n), ub=np.full(n, 4.0))
            out = solve_lp(lp)
            ref = _scipy_solve(lp)
            assert out.status == "optimal"
            assert ref.status == 0
            assert out.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)

    def test_tight_tolerances_accepted(self):
        tol = SolverTolerances(feasibility=1e-9, duality_gap=1e-9)
        lp = make_lp([1.0, 2.0], a_ge=[[1.0, 1.0]], b_ge=[1.0],
                     lb=[0.0, 0.0])
        out = solve_lp(lp, tol)
        assert out.status == "optimal"
        assert out.objective == pytest.approx(1.0, abs=1e-9)

"""Decomposition loop: master, dual pricing, feasibility rays, Pareto cuts."""

import itertools

import numpy as np
import pytest

from conftest import FOUR_HOURS, one_bus_doc, wire_doc
from gridplan.benders import (
    BendersOptions,
    advance_core,
    run_benders,
    solve_dsp,
    solve_mdsp,
    solve_sdsp,
)
from gridplan.corpus import load_instance
from gridplan.formulation import build_milp
from gridplan.lp import solve_lp, solve_milp
from gridplan.system import build_system


def _shortfall_doc(candidate_cap=60.0, slots=2):
    """One bus, 100 MW peak, 50 MW existing; builds must close the gap."""
    doc = one_bus_doc()
    doc["buses"][0]["peak_load_mw"] = 100.0
    doc["thermal_units"] = [
        {"bus": 1, "type_id": "old", "tech": "steam",
         "unit_capacity_mw": 50.0, "existing_count": 1,
         "frsr_up_max_mw": 20.0, "frsr_dn_max_mw": 20.0,
         "segments": [{"fuel_price": 2.0, "heat_rate": 10.0}]},
        {"bus": 1, "type_id": "addon", "tech": "gas",
         "unit_capacity_mw": candidate_cap, "existing_count": 0,
         "candidate_slots": slots, "invest_cost": 0.3,
         "frsr_up_max_mw": 20.0, "frsr_dn_max_mw": 20.0,
         "segments": [{"fuel_price": 3.0, "heat_rate": 9.0}]},
    ]
    return doc


def _feasible_builds(compact):
    """Enumerate binary assignments operable through the subproblem."""
    ok, bad = [], []
    for bits in itertools.product((0.0, 1.0), repeat=compact.n_y):
        y = np.array(bits)
        out = solve_lp(compact.subproblem(y))
        if out.status == "optimal":
            ok.append((y, out.objective))
        else:
            bad.append(y)
    return ok, bad


class TestMaster:
    def test_first_iteration_builds_nothing(self):
        # positive build prices and no forcing rows: the empty plan with a
        # zero epigraph is the first master optimum
        compact = build_milp(build_system(wire_doc()))
        assert compact.objective_offset == 0.0
        assert np.all(compact.invest_y > 0)
        res = run_benders(compact, BendersOptions(mode="plain"))
        assert res.status == "optimal"
        assert res.iterations[0].lower_bound == pytest.approx(0.0, abs=1e-9)

    def test_infeasible_for_every_build(self):
        # 50 existing + 20 candidate can never reach the 100 MW peak
        doc = _shortfall_doc(candidate_cap=20.0, slots=1)
        compact = build_milp(build_system(doc))
        res = run_benders(compact)
        assert res.status == "infeasible"
        assert res.values is None
        assert res.n_feasibility_cuts >= 1

    def test_unknown_mode_rejected(self):
        compact = build_milp(build_system(wire_doc()))
        with pytest.raises(ValueError, match="mode"):
            run_benders(compact, BendersOptions(mode="fast"))


class TestDualPricing:
    def test_strong_duality_at_feasible_build(self):
        compact = build_milp(build_system(wire_doc()))
        y0 = np.zeros(compact.n_y)
        primal = solve_lp(compact.subproblem(y0))
        assert primal.status == "optimal"
        dsp = solve_dsp(compact, y0)
        assert dsp.status == "optimal"
        assert dsp.point.objective == pytest.approx(primal.objective, rel=1e-8)
        assert np.all(dsp.point.mu >= -1e-9)

    def test_inoperable_build_is_unbounded(self):
        compact = build_milp(build_system(_shortfall_doc()))
        dsp = solve_dsp(compact, np.zeros(compact.n_y))
        assert dsp.status == "unbounded"
        assert dsp.ray is not None

    def test_ray_cut_excludes_exactly_the_inoperable_builds(self):
        compact = build_milp(build_system(_shortfall_doc()))
        n_y = compact.n_y
        assert n_y == 2
        ybar = np.zeros(n_y)
        ray = solve_mdsp(compact, ybar)
        # feas cut in master form: -pi'Y >= constant
        const = float(ray.lam @ compact.h_eq + ray.mu @ compact.h_ge
                      + ray.sig @ compact.h_bal)
        ok, bad = _feasible_builds(compact)
        assert [tuple(y) for y in bad] == [(0.0, 0.0)]
        scale = max(1.0, abs(const))
        for y, _ in ok:
            assert const + float(ray.pi @ y) <= 1e-6 * scale
        assert const + float(ray.pi @ ybar) > 1e-7

    def test_upper_bound_dominates_optimum(self):
        system = load_instance("wire")
        compact = build_milp(system)
        mono = solve_milp(compact.to_milp())
        res = run_benders(compact)
        finite = [r.upper_bound for r in res.iterations
                  if np.isfinite(r.upper_bound)]
        assert finite
        assert min(finite) >= mono.objective - 1e-6 * abs(mono.objective)
        assert res.objective == pytest.approx(mono.objective, rel=1e-6)


class TestParetoSelection:
    def test_core_point_update(self):
        nxt = advance_core(np.array([0.5, 0.5]), np.array([1.0, 0.0]))
        assert np.allclose(nxt, [0.75, 0.25])
        again = advance_core(nxt, np.array([1.0, 0.0]))
        assert np.allclose(again, [0.875, 0.125])

    def test_degenerate_core_reproduces_plain_value(self):
        compact = build_milp(build_system(wire_doc()))
        ybar = np.zeros(compact.n_y)
        dsp = solve_dsp(compact, ybar)
        assert dsp.status == "optimal"
        pt = solve_sdsp(compact, ybar, ybar.copy(), dsp.point.objective)
        assert pt is not None
        assert pt.objective == pytest.approx(dsp.point.objective, rel=1e-7)
        # both cuts support the value function at ybar itself
        def cut_at(point, y):
            const = float(point.lam @ compact.h_eq + point.mu @ compact.h_ge
                          + point.sig @ compact.h_bal)
            return const + float(point.pi @ y)
        assert cut_at(pt, ybar) == pytest.approx(cut_at(dsp.point, ybar), rel=1e-7)

    def test_no_more_iterations_than_plain(self):
        for name in ("threebus", "storagegrow"):
            compact = build_milp(load_instance(name))
            plain = run_benders(compact, BendersOptions(mode="plain"))
            pareto = run_benders(compact, BendersOptions(mode="pareto"))
            assert plain.status == pareto.status == "optimal"
            assert pareto.objective == pytest.approx(plain.objective, rel=1e-6)
            assert len(pareto.iterations) <= len(plain.iterations)


class TestConvergence:
    def test_single_operable_build_converges_in_two(self):
        # bus 2 has load but no generator; only the candidate circuit works,
        # and free fuel keeps the operating cost at zero so the first
        # optimality gap already closes
        doc = wire_doc()
        doc["buses"] = [{"id": 1, "peak_load_mw": 0.0},
                        {"id": 2, "peak_load_mw": 60.0}]
        doc["lines"] = [dict(doc["lines"][1])]
        doc["lines"][0]["capacity_mw"] = 80.0
        doc["thermal_units"] = [{
            "bus": 1, "type_id": "hydro", "tech": "hydro",
            "unit_capacity_mw": 90.0, "existing_count": 1,
            "frsr_up_max_mw": 10.0, "frsr_dn_max_mw": 10.0,
            "segments": [{"fuel_price": 0.0, "heat_rate": 0.0}],
        }]
        compact = build_milp(build_system(doc))
        assert compact.n_y == 1
        ok, bad = _feasible_builds(compact)
        assert len(ok) == 1 and len(bad) == 1
        res = run_benders(compact)
        assert res.status == "optimal"
        assert len(res.iterations) <= 2
        mono = solve_milp(compact.to_milp())
        assert res.objective == pytest.approx(mono.objective, rel=1e-6)

    def test_loose_tolerance_stops_no_later(self):
        compact = build_milp(load_instance("threebus"))
        tight = run_benders(compact, BendersOptions(tau=1e-6))
        loose = run_benders(compact, BendersOptions(tau=0.5))
        assert loose.status == "optimal"
        assert len(loose.iterations) <= len(tight.iterations)
        assert (loose.objective - loose.bound) <= 0.5 * abs(loose.objective) + 1e-9

    def test_two_stage_oracle_equivalence(self):
        compact = build_milp(load_instance("threebus"))
        mono = solve_milp(compact.to_milp())
        for mode in ("plain", "pareto"):
            res = run_benders(compact, BendersOptions(mode=mode))
            assert res.status == "optimal"
            assert res.objective == pytest.approx(mono.objective, rel=1e-6)
            assert res.gap <= 1e-6

    def test_trace_bounds_are_monotone(self):
        compact = build_milp(load_instance("threebus"))
        res = run_benders(compact, BendersOptions(mode="pareto"))
        lbs = [r.lower_bound for r in res.iterations]
        ubs = [r.upper_bound for r in res.iterations]
        assert all(b >= a - 1e-9 for a, b in zip(lbs, lbs[1:]))
        finite = [u for u in ubs if np.isfinite(u)]
        assert all(b <= a + 1e-9 for a, b in zip(finite, finite[1:]))
        for rec in res.iterations:
            if np.isfinite(rec.upper_bound):
                assert rec.upper_bound >= rec.lower_bound - 1e-6

    def test_iteration_limit_reported(self):
        compact = build_milp(load_instance("sixbus"))
        res = run_benders(compact, BendersOptions(max_iterations=2))
        assert res.status == "iteration_limit"
        assert len(res.iterations) == 2

    def test_cut_pool_matches_counters(self):
        compact = build_milp(load_instance("threebus"))
        res = run_benders(compact)
        names = [name for _, _, name in res.cut_pool]
        assert len(names) == res.n_optimality_cuts + res.n_feasibility_cuts
        assert sum(n.startswith("opt_cut_") for n in names) == res.n_optimality_cuts
        assert sum(n.startswith("feas_cut_") for n in names) == res.n_feasibility_cuts

    def test_recovered_point_passes_checker(self):
        from gridplan.formulation import check_solution

        system = load_instance("threebus")
        compact = build_milp(system)
        res = run_benders(compact, BendersOptions(mode="pareto"))
        assert res.status == "optimal"
        assert check_solution(system, res.values) == []

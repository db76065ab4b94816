"""Benders decomposition of the expansion-planning MILP.

The binary build decisions stay in a master program; operations for a fixed
build are a pure LP whose duals price the build back into the master as
cuts. The master minimizes a single epigraph variable ``eta`` bounding total
discounted cost (kept above the bare investment cost from the start), and
each optimality cut reads

    eta >= invest'Y + (lam'h_eq + mu'h_ge + sig'h_bal) + pi'Y

with ``pi`` the multipliers of the rows fixing the build copy inside the
subproblem. The cut is tight at the probed build: its value there equals the
dual objective plus the investment cost, which is also the upper bound of
the iteration. When a trial build cannot be operated at all, a ray of the
homogeneous dual cone yields a feasibility cut

    lam'h_eq + mu'h_ge + sig'h_bal + pi'Y <= 0.

Rays come from a dedicated ray-search program (the dual with zeroed cost
sides and the balance multipliers capped at one); optimality cuts can be
strengthened to Pareto-optimal ones by re-optimizing the duals against an
interior core point while pinned to the subproblem optimum (mode
"pareto").
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .formulation import CompactMilp, extract_solution
from .lp import LinearProgram, make_lp, solve_lp, solve_milp


class BendersError(RuntimeError):
    """Internal inconsistency between primal and dual subproblem routes."""


@dataclass(frozen=True)
class BendersOptions:
    mode: str = "plain"              # "plain" | "pareto"
    tau: float = 1e-6                # relative optimality gap target
    max_iterations: int = 300
    ray_tolerance: float = 1e-7      # min violation to accept a ray


@dataclass(frozen=True)
class DualPoint:
    """Multipliers of the operating subproblem, split by row block."""

    lam: np.ndarray                  # coupling equalities
    mu: np.ndarray                   # coupling inequalities, >= 0
    sig: np.ndarray                  # nodal balances
    pi: np.ndarray                   # build-fixing rows
    objective: float                 # dual objective at the probed build


@dataclass(frozen=True)
class DspResult:
    """Outcome of pricing a build: bounded multipliers or an improving ray.

    ``status`` is "optimal" when the build can be operated (``point`` holds
    the multipliers and ``primal_x`` the operating point) and "unbounded"
    when it cannot, in the sense that the dual objective grows without limit
    along ``ray``.
    """

    status: str
    point: DualPoint | None = None
    ray: DualPoint | None = None
    primal_x: np.ndarray | None = None


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    lower_bound: float
    upper_bound: float
    gap: float
    cut_type: str                    # "optimality" | "feasibility" | "none"
    master_nodes: int
    subproblem_status: str
    pareto_applied: bool = False


@dataclass
class BendersResult:
    status: str                      # optimal | infeasible | iteration_limit
    objective: float
    bound: float
    y: np.ndarray | None
    values: dict | None
    iterations: list
    n_optimality_cuts: int
    n_feasibility_cuts: int
    wall_seconds: float
    notes: list = field(default_factory=list)
    # accumulated master rows (coef over [Y, eta], rhs, name), kept so a
    # caller can audit every cut against an enumeration of feasible builds
    cut_pool: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        if not np.isfinite(self.objective) or self.objective == 0.0:
            return float("inf")
        return (self.objective - self.bound) / abs(self.objective)


def _dual_program(compact: CompactMilp, objective_y: np.ndarray,
                  homogeneous: bool = False,
                  pin: tuple | None = None) -> LinearProgram:
    """Dual of the operating subproblem, written explicitly.

    Columns: lam (free, one per coupling equality), mu (>= 0, one per
    inequality), sig (free, one per balance row), pi (free, one per build
    column). Rows: one per primal column; lower-bounded primal columns give
    "<= cost" rows (stored negated as >=), free primal columns give
    equalities. The objective maximizes rhs'duals with ``objective_y`` in
    the build slot. ``homogeneous`` zeroes the cost sides and caps sig at
    one, turning unbounded directions with positive balance content into
    finite maximizers. ``pin=(ybar, value)`` appends the equality holding
    the plain objective at ``ybar`` to ``value``.
    """
    n_y = compact.n_y
    n_eq = len(compact.h_eq)
    n_ge = len(compact.h_ge)
    n_bal = len(compact.h_bal)
    n_cols = compact.n_cols
    pi_block = sp.vstack([sp.identity(n_y, format="csr"),
                          sp.csr_matrix((n_cols - n_y, n_y))], format="csr")
    # row j of `at` lists the dual coefficients seen by primal column j
    at = sp.hstack([compact.a_eq.T, compact.a_ge.T, compact.a_bal.T, pi_block],
                   format="csr")
    cost = np.zeros(n_cols) if homogeneous else compact.operating_cost()
    f_start = n_y + compact.n_r + compact.n_p
    lo_rows = np.arange(f_start)                  # primal columns with lb = 0
    fr_rows = np.arange(f_start, n_cols)          # free primal columns
    a_ge = -at[lo_rows]
    b_ge = -cost[lo_rows]
    a_eq = at[fr_rows]
    b_eq = cost[fr_rows]
    eq_names = [f"dual_{compact.col_names[j]}" for j in fr_rows]
    ge_names = [f"dual_{compact.col_names[j]}" for j in lo_rows]
    rhs = np.concatenate([compact.h_eq, compact.h_ge, compact.h_bal,
                          np.asarray(objective_y, dtype=float)])
    if pin is not None:
        ybar, value = pin
        pin_coef = np.concatenate([compact.h_eq, compact.h_ge, compact.h_bal,
                                   np.asarray(ybar, dtype=float)])
        a_eq = sp.vstack([a_eq, sp.csr_matrix(pin_coef)], format="csr")
        b_eq = np.concatenate([b_eq, [value]])
        eq_names = eq_names + ["pin_optimum"]
    n_dual = n_eq + n_ge + n_bal + n_y
    lb = np.full(n_dual, -np.inf)
    ub = np.full(n_dual, np.inf)
    lb[n_eq:n_eq + n_ge] = 0.0                    # mu >= 0
    if homogeneous:
        ub[n_eq + n_ge:n_eq + n_ge + n_bal] = 1.0
    names = ([f"lam_{r}" for r in compact.eq_names]
             + [f"mu_{r}" for r in compact.ge_names]
             + [f"sig_{r}" for r in compact.bal_names]
             + [f"pi_{compact.col_names[j]}" for j in range(n_y)])
    return make_lp(c=-rhs, a_eq=a_eq, b_eq=b_eq, a_ge=a_ge, b_ge=b_ge,
                   lb=lb, ub=ub, col_names=names,
                   eq_names=eq_names, ge_names=ge_names)


def _split_dual_vector(compact: CompactMilp, vec: np.ndarray):
    n_eq = len(compact.h_eq)
    n_ge = len(compact.h_ge)
    n_bal = len(compact.h_bal)
    lam = vec[:n_eq]
    mu = vec[n_eq:n_eq + n_ge]
    sig = vec[n_eq + n_ge:n_eq + n_ge + n_bal]
    pi = vec[n_eq + n_ge + n_bal:]
    return lam, mu, sig, pi


def _dual_objective(compact: CompactMilp, pt: "DualPoint",
                    ybar: np.ndarray) -> float:
    return float(pt.lam @ compact.h_eq + pt.mu @ compact.h_ge
                 + pt.sig @ compact.h_bal + pt.pi @ ybar)


def _make_point(compact: CompactMilp, lam, mu, sig, pi,
                ybar: np.ndarray) -> "DualPoint":
    """Assemble a DualPoint, flushing numerical dust out of the multipliers.

    Entries negligible against the largest multiplier are exact zeros in the
    underlying basis; keeping the roundoff would poison the scaling of every
    master problem the resulting cut enters.
    """
    scale = max((float(np.max(np.abs(v))) if len(v) else 0.0)
                for v in (lam, mu, sig, pi))
    parts = []
    for v in (lam, mu, sig, pi):
        v = np.asarray(v, dtype=float).copy()
        v[np.abs(v) <= 1e-12 * scale] = 0.0
        parts.append(v)
    pt = DualPoint(lam=parts[0], mu=parts[1], sig=parts[2], pi=parts[3],
                   objective=0.0)
    return replace_objective(compact, pt, ybar)


def replace_objective(compact: CompactMilp, pt: "DualPoint",
                      ybar: np.ndarray) -> "DualPoint":
    return DualPoint(lam=pt.lam, mu=pt.mu, sig=pt.sig, pi=pt.pi,
                     objective=_dual_objective(compact, pt, ybar))


def solve_dsp(compact: CompactMilp, ybar: np.ndarray) -> DspResult:
    """Price a trial build through the operating subproblem's duals.

    Solved in primal form with the build pinned by fixing rows, which makes
    the fixing-row multipliers the build prices pi; by strong duality the
    multipliers are an optimizer of the dual program whenever operations are
    feasible. An inoperable build surfaces as an unbounded dual, reported
    here with the improving ray taken from the infeasibility certificate.
    """
    out = solve_lp(compact.subproblem(ybar))
    if out.status == "optimal":
        lam, mu, sig, pi = compact.split_subproblem_duals(out.duals_eq, out.duals_ge)
        pt = _make_point(compact, lam, mu, sig, pi, ybar)
        return DspResult(status="optimal", point=pt, primal_x=out.x)
    if out.status == "infeasible":
        lam, mu, sig, pi = compact.split_subproblem_duals(out.farkas_eq, out.farkas_ge)
        return DspResult(status="unbounded",
                         ray=_make_point(compact, lam, mu, sig, pi, ybar))
    return DspResult(status=out.status)


def solve_mdsp(compact: CompactMilp, ybar: np.ndarray) -> DualPoint:
    """Extract a normalized ray of the dual cone for a feasibility cut.

    Maximizes the dual objective over the cone (cost sides zeroed) with the
    balance multipliers capped at one. A bounded solve must come back
    strictly positive, otherwise the earlier unbounded verdict was wrong; if
    the cap fails to bound the program, the improving ray itself serves.
    """
    out = solve_lp(_dual_program(compact, ybar, homogeneous=True))
    if out.status == "optimal":
        violation = -out.objective
        if violation <= 0.0:
            raise BendersError(
                "ray search found no positive direction although operations "
                "were reported infeasible")
        vec = out.x
    elif out.status == "unbounded":
        vec = out.ray
    else:
        raise BendersError(f"ray search failed: {out.status}")
    lam, mu, sig, pi = _split_dual_vector(compact, vec)
    return _make_point(compact, lam, mu, sig, pi, ybar)


def advance_core(core: np.ndarray, ybar: np.ndarray) -> np.ndarray:
    """Drag the interior point halfway toward the latest accepted build."""
    return 0.5 * (np.asarray(core, dtype=float) + np.asarray(ybar, dtype=float))


def solve_sdsp(compact: CompactMilp, ybar: np.ndarray, core: np.ndarray,
               dsp_value: float) -> DualPoint | None:
    """Pareto cut selection: re-optimize the duals toward a core point.

    Among the dual solutions keeping the plain dual objective at ``ybar``
    equal to ``dsp_value``, pick one maximizing the objective rewritten at
    the interior point ``core``. Returns None when the pinned program cannot
    be solved, in which case the caller keeps the plain cut.
    """
    out = solve_lp(_dual_program(compact, core, pin=(ybar, dsp_value)))
    if out.status != "optimal":
        return None
    lam, mu, sig, pi = _split_dual_vector(compact, out.x)
    return _make_point(compact, lam, mu, sig, pi, ybar)


class _Master:
    """Build-selection MILP: binaries plus the epigraph variable eta.

    Permanent rows are the build rules and the floor keeping eta above the
    bare investment cost; cuts accumulate below them.
    """

    def __init__(self, compact: CompactMilp):
        self.compact = compact
        n_y = compact.n_y
        self.rows: list[tuple[np.ndarray, float, str]] = []
        self.n_opt = 0
        self.n_feas = 0
        pad = sp.csr_matrix((compact.a_bin.shape[0], 1))
        floor = sp.csr_matrix(np.concatenate([-compact.invest_y, [1.0]]))
        self._base = sp.vstack([sp.hstack([compact.a_bin, pad]), floor],
                               format="csr")
        self._base_rhs = np.concatenate([compact.b_bin, [0.0]])
        self._base_names = list(compact.bin_names) + ["e64"]
        self._c = np.zeros(n_y + 1)
        self._c[n_y] = 1.0
        self._lb = np.concatenate([np.zeros(n_y), [-np.inf]])
        self._ub = np.concatenate([np.ones(n_y), [np.inf]])
        self._names = list(compact.col_names[:n_y]) + ["eta"]

    def add_optimality(self, pt: DualPoint):
        constant = float(pt.lam @ self.compact.h_eq + pt.mu @ self.compact.h_ge
                         + pt.sig @ self.compact.h_bal)
        coef = np.concatenate([-(self.compact.invest_y + pt.pi), [1.0]])
        self.n_opt += 1
        self.rows.append((coef, constant, f"opt_cut_{self.n_opt}"))

    def add_feasibility(self, pt: DualPoint):
        constant = float(pt.lam @ self.compact.h_eq + pt.mu @ self.compact.h_ge
                         + pt.sig @ self.compact.h_bal)
        # constant + pi'Y <= 0  ->  -pi'Y >= constant
        coef = np.concatenate([-pt.pi, [0.0]])
        self.n_feas += 1
        self.rows.append((coef, constant, f"feas_cut_{self.n_feas}"))

    def cut_rows(self):
        return list(self.rows)

    def solve(self):
        if self.rows:
            cut_mat = sp.csr_matrix(np.array([r[0] for r in self.rows]))
            a_ge = sp.vstack([self._base, cut_mat], format="csr")
            b_ge = np.concatenate([self._base_rhs, [r[1] for r in self.rows]])
            names = self._base_names + [r[2] for r in self.rows]
        else:
            a_ge = self._base
            b_ge = self._base_rhs
            names = list(self._base_names)
        lp = make_lp(c=self._c, a_ge=a_ge, b_ge=b_ge, lb=self._lb, ub=self._ub,
                     binary_cols=range(self.compact.n_y),
                     col_names=self._names, ge_names=names)
        return solve_milp(lp)


def run_benders(compact: CompactMilp,
                options: BendersOptions | None = None) -> BendersResult:
    """Iterate master and subproblem until the relative gap closes.

    Reported bounds include the constant objective offset, so they compare
    directly with the monolithic solve. The lower bound never decreases
    because cuts only accumulate; the upper bound tracks the best operable
    build found so far, and the loop stops once (UB - LB) / UB falls within
    tolerance.
    """
    opt = options or BendersOptions()
    if opt.mode not in ("plain", "pareto"):
        raise ValueError(f"unknown decomposition mode: {opt.mode!r}")
    t0 = time.perf_counter()
    offset = compact.objective_offset
    invest = compact.invest_y
    master = _Master(compact)
    n_y = compact.n_y
    core = np.full(n_y, 0.5)
    trace: list[IterationRecord] = []
    notes: list[str] = []
    ub_best = np.inf
    x_best = None
    y_best = None
    lb = -np.inf

    def rel_gap(ub: float, low: float) -> float:
        if not np.isfinite(ub):
            return np.inf
        return (ub - low) / max(abs(ub), 1e-12)

    status = "iteration_limit"
    for it in range(1, opt.max_iterations + 1):
        mout = master.solve()
        if mout.status == "infeasible":
            # no build satisfies the build rules plus accumulated cuts
            trace.append(IterationRecord(it, lb, ub_best, rel_gap(ub_best, lb),
                                         "none", mout.node_count,
                                         "master_infeasible"))
            if ub_best == np.inf:
                return BendersResult("infeasible", np.inf, np.inf, None, None,
                                     trace, master.n_opt, master.n_feas,
                                     time.perf_counter() - t0, notes,
                                     master.cut_rows())
            status = "optimal"
            lb = ub_best
            break
        if mout.status != "optimal":
            raise BendersError(f"master solve failed: {mout.status}")
        lb = max(lb, mout.objective + offset)
        ybar = np.round(mout.x[:n_y])
        dsp = solve_dsp(compact, ybar)
        if dsp.status == "optimal":
            ub_cand = dsp.point.objective + float(invest @ ybar) + offset
            if ub_cand < ub_best - 1e-12:
                ub_best = ub_cand
                x_best = dsp.primal_x.copy()
                y_best = ybar.copy()
            gap = rel_gap(ub_best, lb)
            if gap <= opt.tau:
                trace.append(IterationRecord(it, lb, ub_best, gap, "none",
                                             mout.node_count, "optimal"))
                status = "optimal"
                break
            cut_pt = dsp.point
            pareto_used = False
            if opt.mode == "pareto":
                core = advance_core(core, ybar)
                better = solve_sdsp(compact, ybar, core, dsp.point.objective)
                if better is not None:
                    cut_pt = better
                    pareto_used = True
                else:
                    notes.append(f"iteration {it}: pareto reselection "
                                 "unavailable, plain cut kept")
            master.add_optimality(cut_pt)
            trace.append(IterationRecord(it, lb, ub_best, gap, "optimality",
                                         mout.node_count, "optimal",
                                         pareto_used))
        elif dsp.status == "unbounded":
            ray = solve_mdsp(compact, ybar)
            if ray.objective <= opt.ray_tolerance:
                raise BendersError("feasibility cut does not cut off the "
                                   "current build")
            master.add_feasibility(ray)
            trace.append(IterationRecord(it, lb, ub_best, rel_gap(ub_best, lb),
                                         "feasibility", mout.node_count,
                                         "unbounded"))
        else:
            raise BendersError(f"subproblem solve failed: {dsp.status}")

    if status == "iteration_limit" and ub_best < np.inf \
            and rel_gap(ub_best, lb) <= opt.tau:
        status = "optimal"
    values = None if x_best is None else extract_solution(compact, x_best)
    return BendersResult(status, ub_best, lb, y_best, values, trace,
                         master.n_opt, master.n_feas,
                         time.perf_counter() - t0, notes, master.cut_rows())

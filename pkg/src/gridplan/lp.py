"""Self-contained linear and mixed-binary programming kernel.

Bounded-variable two-phase revised simplex with dense basis management,
periodic refactorization and a Bland's-rule fallback against cycling, plus a
deterministic best-first branch-and-bound over binary variables. The solver
reports exact basic duals at optimality, a Farkas row combination on
infeasibility and an improving ray on unboundedness; the decomposition layer
consumes these certificates directly, which is why no third-party solver sits
underneath.

Conventions: minimize c'x subject to A_eq x = b_eq, A_ge x >= b_ge and
l <= x <= u (entries may be infinite). Duals y satisfy y >= 0 on the
inequality rows; reduced costs are c - A'y.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import dger

# nonbasic / basic status codes
_AT_LO, _AT_UP, _FREE, _BASIC = 0, 1, 2, 3


@dataclass(frozen=True)
class SolverTolerances:
    feasibility: float = 1e-7       # row residual and phase-1 acceptance
    optimality: float = 1e-9        # reduced-cost threshold, scaled by |c|
    integrality: float = 1e-6      # binary acceptance in branch-and-bound
    duality_gap: float = 1e-8       # relative gap reported as healthy
    pivot: float = 1e-9             # minimum acceptable pivot magnitude
    refactor_every: int = 100       # pivots between basis refactorizations
    stall_pivots: int = 200         # degenerate pivots before Bland's rule


@dataclass
class LinearProgram:
    """min c'x  s.t.  A_eq x = b_eq,  A_ge x >= b_ge,  l <= x <= u."""

    c: np.ndarray
    a_eq: sp.csr_matrix
    b_eq: np.ndarray
    a_ge: sp.csr_matrix
    b_ge: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary_cols: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    objective_offset: float = 0.0
    col_names: list = field(default_factory=list)
    eq_names: list = field(default_factory=list)
    ge_names: list = field(default_factory=list)

    @property
    def n_cols(self) -> int:
        return len(self.c)

    def with_bounds(self, lb, ub) -> "LinearProgram":
        return replace(self, lb=lb, ub=ub)


def make_lp(c, a_eq=None, b_eq=None, a_ge=None, b_ge=None, lb=None, ub=None,
            binary_cols=(), objective_offset=0.0,
            col_names=None, eq_names=None, ge_names=None) -> LinearProgram:
    """Normalize assorted inputs (lists, dense, sparse) into a LinearProgram."""
    c = np.asarray(c, dtype=float)
    n = len(c)

    def _mat(a, b):
        if a is None:
            return sp.csr_matrix((0, n)), np.zeros(0)
        mat = sp.csr_matrix(a, dtype=float)
        if mat.shape[0] and mat.shape[1] != n:
            raise ValueError(f"matrix has {mat.shape[1]} columns, expected {n}")
        rhs = np.asarray(b, dtype=float)
        if mat.shape[0] != len(rhs):
            raise ValueError("row count and rhs length differ")
        return mat, rhs

    a_eq, b_eq = _mat(a_eq, b_eq)
    a_ge, b_ge = _mat(a_ge, b_ge)
    lb = np.full(n, -np.inf) if lb is None else np.asarray(lb, dtype=float).copy()
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float).copy()
    if np.any(lb > ub + 1e-12):
        raise ValueError("lower bound exceeds upper bound")
    return LinearProgram(c=c, a_eq=a_eq, b_eq=b_eq, a_ge=a_ge, b_ge=b_ge,
                         lb=lb, ub=ub,
                         binary_cols=np.asarray(sorted(binary_cols), dtype=int),
                         objective_offset=float(objective_offset),
                         col_names=list(col_names or []),
                         eq_names=list(eq_names or []),
                         ge_names=list(ge_names or []))


@dataclass
class LpOutcome:
    status: str                     # optimal | infeasible | unbounded |
                                    # iteration_limit | numerical
    objective: float = float("nan")
    x: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    duals_ge: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    farkas_eq: np.ndarray | None = None
    farkas_ge: np.ndarray | None = None
    ray: np.ndarray | None = None
    iterations: int = 0


def _equilibration(w: np.ndarray, factor_cap: float = 2.0 ** 16):
    """Row/column scale factors flattening the coefficient magnitudes.

    Geometric-mean scaling rounded to powers of two (so the products stay
    exact in floating point), two sweeps, finished by capping each row's
    largest entry near one. Entries negligible next to the largest in their
    row or column are treated as zero so stray numerical dust cannot drag
    the geometric mean; factors are clipped to ``factor_cap`` for the same
    reason. Zero rows/columns keep factor one.
    """
    m, n = w.shape
    r = np.ones(m)
    c = np.ones(n)
    if m == 0 or n == 0:
        return r, c
    a = np.abs(w)

    def gm_factor(smax, smin):
        f = np.ones(len(smax))
        ok = smax > 0
        f[ok] = np.exp2(-np.round(0.5 * (np.log2(smax[ok]) + np.log2(smin[ok]))))
        return np.clip(f, 1.0 / factor_cap, factor_cap)

    def significant_min(s, smax, axis):
        floor = smax * 1e-14
        masked = np.where(s > np.expand_dims(floor, axis), s, np.inf)
        smin = masked.min(axis=axis)
        return np.where(np.isfinite(smin), smin, 1.0)

    for _ in range(2):
        s = a * r[:, None] * c[None, :]
        rmax = s.max(axis=1)
        r *= gm_factor(rmax, significant_min(s, rmax, 1))
        s = a * r[:, None] * c[None, :]
        cmax = s.max(axis=0)
        c *= gm_factor(cmax, significant_min(s, cmax, 0))
    s = a * r[:, None] * c[None, :]
    rmax = s.max(axis=1)
    ok = rmax > 0
    r[ok] *= np.exp2(-np.ceil(np.log2(rmax[ok])))
    return r, c


class _Work:
    """Dense working form shared across repeated solves with varying bounds.

    The matrix is equilibrated once at construction; right-hand sides, costs
    and bounds live in scaled units internally and every certificate is
    mapped back to the original units before leaving the solver.
    """

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n = lp.n_cols
        self.me = lp.a_eq.shape[0]
        self.mi = lp.a_ge.shape[0]
        self.m = self.me + self.mi
        self.n = n
        self.n_tot = n + self.mi
        # columns: originals, then one surplus per inequality row
        w = np.zeros((self.m, self.n_tot))
        if self.me:
            w[:self.me, :n] = lp.a_eq.toarray()
        if self.mi:
            w[self.me:, :n] = lp.a_ge.toarray()
            w[np.arange(self.me, self.m), n + np.arange(self.mi)] = -1.0
        self.row_scale, self.col_scale = _equilibration(w)
        w *= self.row_scale[:, None]
        w *= self.col_scale[None, :]
        self.w = w
        self.b = np.concatenate([lp.b_eq, lp.b_ge]) * self.row_scale
        c = np.concatenate([lp.c, np.zeros(self.mi)]) * self.col_scale
        self.cost_norm = max(1.0, float(np.max(np.abs(c))) if self.n_tot else 1.0)
        self.c = c / self.cost_norm
        self.c_scale = 1.0 + (np.max(np.abs(self.c)) if self.n_tot else 0.0)
        self.b_scale = 1.0 + (np.max(np.abs(self.b)) if self.m else 0.0)
        # static column norms for normalized pricing
        self.col_norm = np.sqrt(1.0 + np.einsum("ij,ij->j", w, w))

    def bounds(self, lb=None, ub=None):
        lp = self.lp
        cs = self.col_scale[:self.n]
        lo = np.concatenate([(lp.lb if lb is None else lb) / cs, np.zeros(self.mi)])
        hi = np.concatenate([(lp.ub if ub is None else ub) / cs,
                             np.full(self.mi, np.inf)])
        return lo, hi

    # -- mapping solver quantities back to original units ----------------
    def unscale_x(self, x):
        return x[:self.n] * self.col_scale[:self.n]

    def unscale_duals(self, y):
        # phase-2 duals carry the cost normalization; Farkas rows do not
        return y * self.row_scale * self.cost_norm

    def unscale_farkas(self, y):
        return y * self.row_scale

    def unscale_rc(self, d):
        return d[:self.n] * self.cost_norm / self.col_scale[:self.n]

    def unscale_ray(self, ray):
        return ray[:self.n] * self.col_scale[:self.n]


def _initial_point(lo, hi):
    x = np.zeros(len(lo))
    finite_lo = np.isfinite(lo)
    x[finite_lo] = lo[finite_lo]
    only_hi = ~finite_lo & np.isfinite(hi)
    x[only_hi] = hi[only_hi]
    return x


class _Simplex:
    def __init__(self, work: _Work, lo, hi, tol: SolverTolerances, iteration_limit):
        self.wk = work
        self.tol = tol
        self.iteration_limit = iteration_limit
        m, n_tot = work.m, work.n_tot
        self.lo = np.concatenate([lo, np.zeros(m)])   # artificials appended
        self.hi = np.concatenate([hi, np.full(m, np.inf)])
        self.x = np.zeros(n_tot + m)
        self.x[:n_tot] = _initial_point(lo, hi)
        self.status = np.full(n_tot, _AT_LO, dtype=np.int8)
        self.status[~np.isfinite(lo) & np.isfinite(hi)] = _AT_UP
        self.status[~np.isfinite(lo) & ~np.isfinite(hi)] = _FREE
        resid = work.b - work.w @ self.x[:n_tot]
        self.art_sign = np.where(resid >= 0, 1.0, -1.0)
        self.x[n_tot:] = np.abs(resid)
        self.basis = np.arange(n_tot, n_tot + m)
        self.binv = np.asfortranarray(np.diag(self.art_sign))
        self.iterations = 0
        self.pivots_since_refactor = 0
        self.degenerate_run = 0
        self.failed = False

    # -- column access -------------------------------------------------
    def col(self, j):
        wk = self.wk
        if j < wk.n_tot:
            return wk.w[:, j]
        e = np.zeros(wk.m)
        e[j - wk.n_tot] = self.art_sign[j - wk.n_tot]
        return e

    def cost_vector(self, phase):
        wk = self.wk
        if phase == 1:
            return np.concatenate([np.zeros(wk.n_tot), np.ones(wk.m)])
        return np.concatenate([wk.c, np.zeros(wk.m)])

    def refactor(self) -> bool:
        wk = self.wk
        bmat = np.zeros((wk.m, wk.m))
        struct = self.basis < wk.n_tot
        bmat[:, struct] = wk.w[:, self.basis[struct]]
        for pos in np.flatnonzero(~struct):
            i = self.basis[pos] - wk.n_tot
            bmat[i, pos] = self.art_sign[i]
        try:
            self.binv = np.asfortranarray(np.linalg.inv(bmat))
        except np.linalg.LinAlgError:
            self.failed = True
            return False
        # recompute basic values from the nonbasic point to purge drift
        nb_mask = np.ones(wk.n_tot + wk.m, dtype=bool)
        nb_mask[self.basis] = False
        xnb = self.x.copy()
        xnb[self.basis] = 0.0
        rhs = wk.b.copy()
        rhs -= wk.w @ xnb[:wk.n_tot]
        art = xnb[wk.n_tot:]
        if np.any(art):
            rhs -= self.art_sign * art
        self.x[self.basis] = self.binv @ rhs
        self.pivots_since_refactor = 0
        return True

    # -- main loop -------------------------------------------------------
    def run(self, phase) -> str:
        wk, tol = self.wk, self.tol
        c_full = self.cost_vector(phase)
        d_tol = tol.optimality * (1.0 if phase == 1 else wk.c_scale)
        d_tol = max(d_tol, 1e-11)
        fixed = self.lo[:wk.n_tot] >= self.hi[:wk.n_tot] - 1e-15
        objval = float(c_full @ self.x)
        while True:
            if self.iterations >= self.iteration_limit:
                return "iteration_limit"
            self.iterations += 1
            c_b = c_full[self.basis]
            y = c_b @ self.binv
            d = c_full[:wk.n_tot] - y @ wk.w
            stat = self.status
            cand_lo = (stat == _AT_LO) & (d < -d_tol) & ~fixed
            cand_up = (stat == _AT_UP) & (d > d_tol) & ~fixed
            cand_fr = (stat == _FREE) & (np.abs(d) > d_tol)
            cand = cand_lo | cand_up | cand_fr
            if not np.any(cand):
                return "optimal"
            idx = np.flatnonzero(cand)
            if self.degenerate_run >= tol.stall_pivots:
                j = int(idx[0])                      # Bland's rule
            else:
                # Dantzig pricing normalized by static column norms
                j = int(idx[np.argmax(np.abs(d[idx]) / wk.col_norm[idx])])
            t = 1.0 if (stat[j] == _AT_LO or (stat[j] == _FREE and d[j] < 0)) else -1.0

            alpha = self.binv @ self.col(j)
            step, leave_pos = self.ratio_test(j, t, alpha)
            if step is None:
                # direction with no blocking bound
                ray = np.zeros(wk.n_tot + wk.m)
                ray[j] = t
                ray[self.basis] = -t * alpha
                self.unbounded_ray = ray[:wk.n]
                return "unbounded"
            # a pivot counts as stalled when it moves the objective by a
            # negligible relative amount; absolute step size is meaningless
            # once variable magnitudes differ by orders of magnitude
            if abs(d[j]) * step <= 1e-10 * (1.0 + abs(objval)):
                self.degenerate_run += 1
            else:
                self.degenerate_run = 0
            objval += d[j] * t * step

            self.x[j] += t * step
            self.x[self.basis] -= t * step * alpha
            if leave_pos == -1:
                # bound-to-bound flip, basis unchanged
                self.status[j] = _AT_UP if t > 0 else _AT_LO
                continue
            leaving = self.basis[leave_pos]
            if leaving < wk.n_tot:
                at_up = t * alpha[leave_pos] < 0
                self.status[leaving] = _AT_UP if at_up else _AT_LO
                self.x[leaving] = self.hi[leaving] if at_up else self.lo[leaving]
            else:
                # artificial leaves and is barred from returning
                self.hi[leaving] = 0.0
                self.x[leaving] = 0.0
            self.basis[leave_pos] = j
            if j < wk.n_tot:
                self.status[j] = _BASIC
            piv = alpha[leave_pos]
            row = self.binv[leave_pos] / piv
            self.binv = dger(-1.0, alpha, row, a=self.binv, overwrite_a=1)
            self.binv[leave_pos] = row
            self.pivots_since_refactor += 1
            if self.pivots_since_refactor >= tol.refactor_every:
                if not self.refactor():
                    return "numerical"

    def ratio_test(self, j, t, alpha):
        """Largest step for entering column j moving in direction t.

        Returns (step, leaving_position); position -1 flags a bound flip of
        the entering column itself, (None, None) signals no blocking bound.
        """
        tol = self.tol
        xb = self.x[self.basis]
        lob = self.lo[self.basis]
        hib = self.hi[self.basis]
        ta = t * alpha
        limits = np.full(len(alpha), np.inf)
        dn = ta > tol.pivot
        up = ta < -tol.pivot
        limits[dn] = (xb[dn] - lob[dn]) / ta[dn]
        limits[up] = (xb[up] - hib[up]) / ta[up]
        limits = np.maximum(limits, 0.0)
        own = self.hi[j] - self.lo[j]

        best = limits.min() if len(limits) else np.inf
        if own < best - 1e-12:
            return own, -1
        if not np.isfinite(best):
            if np.isfinite(own):
                return own, -1
            return None, None
        ties = np.flatnonzero(limits <= best + 1e-12)
        pick = ties[np.argmax(np.abs(alpha[ties]))]
        if self.degenerate_run >= tol.stall_pivots:
            pick = ties[np.argmin(self.basis[ties])]    # Bland on the way out
        return best, int(pick)

    def drive_out_artificials(self):
        """Pivot zero-valued basic artificials onto structural columns.

        Columns fixed by equal bounds stay out: once basic they could drift
        off the pinned value, which branch-and-bound relies on exactly.
        """
        wk, tol = self.wk, self.tol
        fixed = self.lo[:wk.n_tot] >= self.hi[:wk.n_tot] - 1e-15
        for pos in range(wk.m):
            if self.basis[pos] < wk.n_tot:
                continue
            row = self.binv[pos] @ wk.w
            nb = np.flatnonzero((self.status != _BASIC) & ~fixed
                                & (np.abs(row) > 1e-7))
            if len(nb) == 0:
                continue                        # redundant row, artificial stays
            j = int(nb[np.argmax(np.abs(row[nb]))])
            leaving = self.basis[pos]
            self.hi[leaving] = 0.0
            self.x[leaving] = 0.0
            self.basis[pos] = j
            self.status[j] = _BASIC
            alpha = self.binv @ self.col(j)
            piv = alpha[pos]
            brow = self.binv[pos] / piv
            self.binv = dger(-1.0, alpha, brow, a=self.binv, overwrite_a=1)
            self.binv[pos] = brow
            self.pivots_since_refactor += 1
        self.refactor()


def _solve_prepared(work: _Work, lo, hi, tol: SolverTolerances,
                    iteration_limit=None) -> LpOutcome:
    m, n = work.m, work.n
    limit = iteration_limit or (20000 + 40 * (m + n))
    sx = _Simplex(work, lo, hi, tol, limit)

    if m == 0:
        # pure box problem: each variable sits at its cheapest finite bound
        lo0, hi0 = work.unscale_x(lo), work.unscale_x(hi)
        x = _initial_point(lo0, hi0)
        c = work.lp.c
        for j in range(n):
            if c[j] < 0:
                if np.isfinite(hi0[j]):
                    x[j] = hi0[j]
                else:
                    return LpOutcome(status="unbounded", ray=_unit_ray(n, j, 1.0))
            elif c[j] > 0:
                if np.isfinite(lo0[j]):
                    x[j] = lo0[j]
                else:
                    return LpOutcome(status="unbounded", ray=_unit_ray(n, j, -1.0))
        return LpOutcome(status="optimal", objective=float(c @ x), x=x,
                         duals_eq=np.zeros(0), duals_ge=np.zeros(0),
                         reduced_costs=c.copy())

    status = sx.run(phase=1)
    if status == "numerical" or sx.failed:
        return LpOutcome(status="numerical", iterations=sx.iterations)
    if status == "iteration_limit":
        return LpOutcome(status="iteration_limit", iterations=sx.iterations)
    sx.refactor()
    phase1_obj = float(np.sum(sx.x[work.n_tot:]))
    if phase1_obj > tol.feasibility * work.b_scale:
        c1 = sx.cost_vector(1)[sx.basis]
        y = work.unscale_farkas(sx.binv.T @ c1)
        return LpOutcome(status="infeasible",
                         farkas_eq=y[:work.me].copy(),
                         farkas_ge=y[work.me:].copy(),
                         iterations=sx.iterations)

    sx.drive_out_artificials()
    if sx.failed:
        return LpOutcome(status="numerical", iterations=sx.iterations)
    sx.hi[work.n_tot:] = 0.0
    sx.x[work.n_tot:][sx.x[work.n_tot:] < 0] = 0.0

    status = sx.run(phase=2)
    if status == "numerical" or sx.failed:
        return LpOutcome(status="numerical", iterations=sx.iterations)
    if status == "iteration_limit":
        return LpOutcome(status="iteration_limit", iterations=sx.iterations)
    if status == "unbounded":
        return LpOutcome(status="unbounded", ray=work.unscale_ray(sx.unbounded_ray),
                         iterations=sx.iterations)

    sx.refactor()
    c_full = sx.cost_vector(2)
    ys = sx.binv.T @ c_full[sx.basis]
    d = work.unscale_rc(work.c - ys @ work.w)
    y = work.unscale_duals(ys)
    x = work.unscale_x(sx.x)
    obj = float(work.lp.c @ x)
    return LpOutcome(status="optimal", objective=obj, x=x,
                     duals_eq=y[:work.me].copy(), duals_ge=y[work.me:].copy(),
                     reduced_costs=d.copy(),
                     iterations=sx.iterations)


def _unit_ray(n, j, sign):
    ray = np.zeros(n)
    ray[j] = sign
    return ray


def solve_lp(lp: LinearProgram, tolerances: SolverTolerances | None = None,
             iteration_limit: int | None = None) -> LpOutcome:
    """Solve an LP; deterministic for a fixed input."""
    tol = tolerances or SolverTolerances()
    work = _Work(lp)
    lo, hi = work.bounds()
    out = _solve_prepared(work, lo, hi, tol, iteration_limit)
    if out.status == "optimal":
        out.objective += lp.objective_offset
    return out


def farkas_violation(lp: LinearProgram, farkas_eq, farkas_ge) -> float:
    """Certified infeasibility margin y'b - max_{l<=x<=u} y'Ax; positive is valid.

    Returns -inf if the combination leans on an infinite bound it cannot.
    """
    y_eq = np.asarray(farkas_eq, dtype=float)
    y_ge = np.asarray(farkas_ge, dtype=float)
    if len(y_ge) and y_ge.min() < -1e-7:
        return -np.inf
    v = lp.a_eq.T @ y_eq + lp.a_ge.T @ y_ge
    total = float(lp.b_eq @ y_eq + lp.b_ge @ y_ge)
    for j in range(lp.n_cols):
        if v[j] > 1e-9:
            if not np.isfinite(lp.ub[j]):
                return -np.inf
            total -= v[j] * lp.ub[j]
        elif v[j] < -1e-9:
            if not np.isfinite(lp.lb[j]):
                return -np.inf
            total -= v[j] * lp.lb[j]
    return total


def duality_report(lp: LinearProgram, outcome: LpOutcome) -> dict:
    """Primal/dual agreement diagnostics for an optimal outcome."""
    if outcome.status != "optimal":
        raise ValueError("duality_report needs an optimal outcome")
    x = outcome.x
    y_eq, y_ge = outcome.duals_eq, outcome.duals_ge
    rc = outcome.reduced_costs
    primal = float(lp.c @ x)
    dual = float(lp.b_eq @ y_eq + lp.b_ge @ y_ge)
    comp = 0.0
    for j in range(lp.n_cols):
        # bound multipliers: rc+ presses on the lower bound, rc- on the upper
        if rc[j] > 0 and np.isfinite(lp.lb[j]):
            dual += rc[j] * lp.lb[j]
            comp = max(comp, rc[j] * abs(x[j] - lp.lb[j]))
        elif rc[j] < 0 and np.isfinite(lp.ub[j]):
            dual += rc[j] * lp.ub[j]
            comp = max(comp, -rc[j] * abs(lp.ub[j] - x[j]))
    if lp.a_ge.shape[0]:
        slack = lp.a_ge @ x - lp.b_ge
        comp = max(comp, float(np.max(np.abs(y_ge * slack))) if len(slack) else 0.0)
    gap = abs(primal - dual)
    return {
        "primal_objective": primal,
        "dual_objective": dual,
        "gap": gap,
        "relative_gap": gap / (1.0 + abs(primal)),
        "max_complementarity_violation": comp,
    }


# ---------------------------------------------------------------------------
# branch and bound


@dataclass
class MilpOutcome:
    status: str                   # optimal | infeasible | unbounded | node_limit
    objective: float = float("nan")
    x: np.ndarray | None = None
    bound: float = float("nan")   # proven lower bound (sans offset handling: included)
    node_count: int = 0
    iterations: int = 0


def solve_milp(lp: LinearProgram, tolerances: SolverTolerances | None = None,
               gap_abs: float = 1e-6, node_limit: int | None = None) -> MilpOutcome:
    """Best-first branch-and-bound over the binary columns of ``lp``.

    Node order is by bound, ties resolved first-created; branching picks the
    lowest-index fractional binary and explores the zero branch first, so runs
    are bit-for-bit reproducible.
    """
    tol = tolerances or SolverTolerances()
    work = _Work(lp)
    bins = lp.binary_cols
    lb0 = lp.lb.copy()
    ub0 = lp.ub.copy()
    if len(bins):
        lb0[bins] = np.maximum(lb0[bins], 0.0)
        ub0[bins] = np.minimum(ub0[bins], 1.0)

    def node_solve(lb, ub):
        lo, hi = work.bounds(lb, ub)
        return _solve_prepared(work, lo, hi, tol)

    root = node_solve(lb0, ub0)
    nodes = 1
    total_iter = root.iterations
    if root.status == "infeasible":
        return MilpOutcome(status="infeasible", node_count=nodes, iterations=total_iter)
    if root.status == "unbounded":
        return MilpOutcome(status="unbounded", node_count=nodes, iterations=total_iter)
    if root.status != "optimal":
        return MilpOutcome(status=root.status, node_count=nodes, iterations=total_iter)

    incumbent = None
    incumbent_val = np.inf
    heap = []
    seq = 0

    def fractional(x, lb, ub):
        # only columns the node can still branch on; a fixed column showing
        # fractional would loop the search forever
        if not len(bins):
            return None
        vals = x[bins]
        off = np.abs(vals - np.round(vals))
        open_cols = ub[bins] - lb[bins] > 0.5
        bad = np.flatnonzero((off > tol.integrality) & open_cols)
        return None if len(bad) == 0 else int(bins[bad[0]])

    def consider(out, lb, ub):
        nonlocal incumbent, incumbent_val, seq
        j = fractional(out.x, lb, ub)
        if j is None:
            val = out.objective
            if val < incumbent_val - 1e-12:
                incumbent_val = val
                x = out.x.copy()
                if len(bins):
                    x[bins] = np.clip(np.round(x[bins]), lb[bins], ub[bins])
                incumbent = x
            return
        heapq.heappush(heap, (out.objective, seq, j, lb, ub))
        seq += 1

    consider(root, lb0, ub0)
    proven_floor = None           # best open bound at early termination

    while heap:
        bound, _, j, lb, ub = heapq.heappop(heap)
        if bound >= incumbent_val - gap_abs:
            proven_floor = bound
            heap.clear()
            break
        if node_limit is not None and nodes >= node_limit:
            return MilpOutcome(status="node_limit",
                               objective=(incumbent_val + lp.objective_offset
                                          if incumbent is not None else float("nan")),
                               x=incumbent, bound=bound + lp.objective_offset,
                               node_count=nodes, iterations=total_iter)
        for branch_val in (0.0, 1.0):          # down branch first
            lb2, ub2 = lb.copy(), ub.copy()
            if branch_val == 0.0:
                ub2[j] = 0.0
            else:
                lb2[j] = 1.0
            out = node_solve(lb2, ub2)
            nodes += 1
            total_iter += out.iterations
            if out.status == "infeasible":
                continue
            if out.status != "optimal":
                return MilpOutcome(status=out.status, node_count=nodes,
                                   iterations=total_iter)
            if out.objective < incumbent_val - gap_abs:
                consider(out, lb2, ub2)

    if incumbent is None:
        return MilpOutcome(status="infeasible", node_count=nodes, iterations=total_iter)
    proven = incumbent_val if proven_floor is None else min(incumbent_val, proven_floor)
    return MilpOutcome(status="optimal",
                       objective=incumbent_val + lp.objective_offset,
                       x=incumbent,
                       bound=proven + lp.objective_offset,
                       node_count=nodes, iterations=total_iter)

"""Stage-coupled expansion-planning MILP assembled in block form.

Columns fall into four partitions:

* ``Y`` binaries: candidate line circuits, thermal build slots, storage
  installs and hourly storage charge-state selectors;
* ``R`` nonnegative renewable installed capacity (cumulative per stage);
* ``P`` nonnegative operating quantities: unit and segment output, unit
  counts, up/down flex reserve, storage discharge/charge/level, wind
  curtailment and load shedding;
* ``F`` free network quantities: line flows and bus voltage angles.

Rows fall into four blocks: pure-binary build rules (``A Y >= B``), coupling
equalities, coupling inequalities (all normalized to ``>=``) and the nodal
power balances kept as their own equality block so the decomposition can
read their duals apart. Row names carry a short constraint-family tag plus
subscripts so exported models stay traceable; the legend lives in
``ROW_FAMILIES``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .lp import LinearProgram, make_lp
from .rephours import RepresentativeSet
from .system import SystemData, annuity_factor

ROW_FAMILIES = {
    "e16": "segment output within prorated segment capacity",
    "e17": "unit output equals sum of segment outputs",
    "e18": "output plus up-reserve within installed capacity",
    "e19": "down-reserve within scheduled output",
    "e20": "unit count equals accepted build slots",
    "e21": "thermal build slots persist across stages",
    "e22": "per-stage thermal build tunnel limit",
    "e23u": "hourly ramp-up limit including up-reserve",
    "e23d": "hourly ramp-down limit including down-reserve",
    "e24": "planning reserve adequacy on grown peak load",
    "e25": "technology share cap in installed capacity",
    "e26": "technology share floor in installed capacity",
    "e27": "up-reserve ceiling per unit cluster",
    "e28": "down-reserve ceiling per unit cluster",
    "e29": "system up-flex floor from renewables and load",
    "e30": "system down-flex floor from renewables and load",
    "e31": "up-reserve deliverable within the ramp window",
    "e32": "down-reserve deliverable within the ramp window",
    "e33": "ramp-window output plus up-reserve within capacity",
    "e34": "down-reserve within ramp-window output",
    "e35": "wind build within site potential",
    "e36": "pv build within site potential",
    "e37": "renewable energy share floor",
    "e38": "wind capacity persists across stages",
    "e39": "pv capacity persists across stages",
    "e40": "curtailment within available wind",
    "e41": "stage curtailment cap as share of wind energy",
    "e42": "per-bus-hour load shedding cap",
    "e43": "per-stage shed energy cap",
    "e44": "charging within installed power rating",
    "e45": "discharging within installed power rating",
    "e46": "charging only in charge state",
    "e47": "discharging only in discharge state",
    "e48": "storage level balance, cyclic over the representatives",
    "e49": "storage level within installed energy rating",
    "e50": "storage install persists across stages",
    "e51": "existing line flow within rating",
    "e52": "existing line flow tracks angle difference",
    "e53": "candidate circuit flow within rating when built",
    "e54": "candidate circuit flow tracks angles when built (big-M)",
    "e55": "candidate circuits persist across stages",
    "e56": "nodal power balance",
    "sym": "identical parallel circuits build in slot order",
    "ref": "reference bus angle pinned to zero",
}


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class BuildOptions:
    """Model toggles; shed caps of None fall back to the instance policy."""

    with_bes: bool = True
    with_lcp: bool = True
    shed_gamma: float | None = None
    shed_phi: float | None = None
    big_m_angle: float = 0.6          # max credible angle spread, radians
    rps_constant: bool = False        # True: flat share target every stage

    def resolved_gamma(self, system: SystemData) -> float:
        g = system.policy.shed_gamma if self.shed_gamma is None else self.shed_gamma
        return float(g)

    def resolved_phi(self, system: SystemData) -> float:
        p = system.policy.shed_phi if self.shed_phi is None else self.shed_phi
        return float(p)


def big_m_value(line, base_power_mva: float, big_m_angle: float) -> float:
    """Disjunctive constant for an unbuilt circuit: flow at the angle spread cap."""
    return base_power_mva * line.susceptance_pu * big_m_angle


def _clean(token) -> str:
    return re.sub(r"[^A-Za-z0-9]", "", str(token))


@dataclass
class CompactMilp:
    """Block-form model with column partitions Y | R | P | F."""

    system: SystemData
    options: BuildOptions
    n_y: int
    n_r: int
    n_p: int
    n_f: int
    col_names: list
    col_keys: list                      # tuple key per column
    col_index: dict                     # key -> column
    invest_y: np.ndarray                # build cost on Y
    cost_r: np.ndarray
    cost_p: np.ndarray
    a_bin: sp.csr_matrix                # over Y columns only
    b_bin: np.ndarray
    bin_names: list
    a_eq: sp.csr_matrix                 # full width
    h_eq: np.ndarray
    eq_names: list
    a_ge: sp.csr_matrix
    h_ge: np.ndarray
    ge_names: list
    a_bal: sp.csr_matrix
    h_bal: np.ndarray
    bal_names: list
    objective_offset: float

    # -- derived shapes ----------------------------------------------------
    @property
    def n_cols(self) -> int:
        return self.n_y + self.n_r + self.n_p + self.n_f

    def y_slice(self) -> slice:
        return slice(0, self.n_y)

    def f_slice(self) -> slice:
        start = self.n_y + self.n_r + self.n_p
        return slice(start, start + self.n_f)

    def full_cost(self) -> np.ndarray:
        c = np.zeros(self.n_cols)
        c[:self.n_y] = self.invest_y
        c[self.n_y:self.n_y + self.n_r] = self.cost_r
        c[self.n_y + self.n_r:self.n_y + self.n_r + self.n_p] = self.cost_p
        return c

    def operating_cost(self) -> np.ndarray:
        c = self.full_cost()
        c[:self.n_y] = 0.0
        return c

    def column_bounds(self, binary_y: bool):
        lb = np.zeros(self.n_cols)
        ub = np.full(self.n_cols, np.inf)
        lb[self.f_slice()] = -np.inf
        if binary_y:
            ub[:self.n_y] = 1.0
        return lb, ub

    def to_milp(self) -> LinearProgram:
        """Monolithic mixed-binary program over all blocks."""
        pad = sp.csr_matrix((self.a_bin.shape[0], self.n_cols - self.n_y))
        a_ge = sp.vstack([sp.hstack([self.a_bin, pad]), self.a_ge], format="csr")
        b_ge = np.concatenate([self.b_bin, self.h_ge])
        a_eq = sp.vstack([self.a_eq, self.a_bal], format="csr")
        b_eq = np.concatenate([self.h_eq, self.h_bal])
        lb, ub = self.column_bounds(binary_y=True)
        return make_lp(c=self.full_cost(), a_eq=a_eq, b_eq=b_eq, a_ge=a_ge, b_ge=b_ge,
                       lb=lb, ub=ub, binary_cols=range(self.n_y),
                       objective_offset=self.objective_offset,
                       col_names=self.col_names,
                       eq_names=self.eq_names + self.bal_names,
                       ge_names=self.bin_names + self.ge_names)

    def subproblem(self, y_fixed: np.ndarray) -> LinearProgram:
        """Operating subproblem with build decisions pinned by fixing rows.

        Row order in the equality block is: coupling equalities, nodal
        balances, then one fixing row per Y column, so duals unpack as
        (lambda, sigma, pi); inequality duals are mu.
        """
        fix = sp.hstack([sp.identity(self.n_y, format="csr"),
                         sp.csr_matrix((self.n_y, self.n_cols - self.n_y))],
                        format="csr")
        a_eq = sp.vstack([self.a_eq, self.a_bal, fix], format="csr")
        b_eq = np.concatenate([self.h_eq, self.h_bal, np.asarray(y_fixed, dtype=float)])
        lb, ub = self.column_bounds(binary_y=False)
        return make_lp(c=self.operating_cost(), a_eq=a_eq, b_eq=b_eq,
                       a_ge=self.a_ge, b_ge=self.h_ge, lb=lb, ub=ub,
                       col_names=self.col_names,
                       eq_names=(self.eq_names + self.bal_names
                                 + [f"fix_{self.col_names[j]}" for j in range(self.n_y)]),
                       ge_names=self.ge_names)

    def split_subproblem_duals(self, duals_eq: np.ndarray, duals_ge: np.ndarray):
        """Unpack subproblem equality duals into (lambda, sigma, pi) plus mu."""
        neq = len(self.h_eq)
        nbal = len(self.h_bal)
        lam = duals_eq[:neq]
        sig = duals_eq[neq:neq + nbal]
        pi = duals_eq[neq + nbal:]
        return lam, duals_ge, sig, pi

    def validate_dimensions(self) -> None:
        n = self.n_cols
        assert self.a_bin.shape == (len(self.b_bin), self.n_y)
        assert self.a_eq.shape == (len(self.h_eq), n)
        assert self.a_ge.shape == (len(self.h_ge), n)
        assert self.a_bal.shape == (len(self.h_bal), n)
        assert len(self.invest_y) == self.n_y
        assert len(self.cost_r) == self.n_r
        assert len(self.cost_p) == self.n_p
        assert len(self.col_names) == n == len(self.col_keys)
        assert len(self.bin_names) == len(self.b_bin)
        assert len(self.eq_names) == len(self.h_eq)
        assert len(self.ge_names) == len(self.h_ge)
        assert len(self.bal_names) == len(self.h_bal)
        # balance rows never touch build columns
        if self.a_bal.shape[0]:
            assert abs(self.a_bal[:, :self.n_y]).sum() == 0.0


class _Rows:
    def __init__(self):
        self.data = []      # (name, {col: coef}, rhs)

    def add(self, name: str, coeffs: dict, rhs: float):
        self.data.append((name, coeffs, rhs))

    def matrix(self, n_cols: int, col_offset: int = 0):
        rows, cols, vals = [], [], []
        rhs = np.zeros(len(self.data))
        names = []
        for i, (name, coeffs, b) in enumerate(self.data):
            names.append(name)
            rhs[i] = b
            for c, v in coeffs.items():
                if v != 0.0:
                    rows.append(i)
                    cols.append(c - col_offset)
                    vals.append(v)
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.data), n_cols))
        return mat, rhs, names


def build_milp(system: SystemData, options: BuildOptions | None = None) -> CompactMilp:
    """Assemble the block-form MILP for one instance.

    Requires a representative-hour timeseries. Hour-linking terms (ramps,
    storage levels) treat the representatives as a cycle: the predecessor of
    the first hour is the last one.
    """
    opt = options or BuildOptions()
    reps = system.timeseries
    if not isinstance(reps, RepresentativeSet):
        raise BuildError("build_milp needs representative hours; reduce the "
                         "hourly series first")
    if not system.thermal_units and sum(b.peak_load_mw for b in system.buses) > 0:
        raise BuildError("thermal catalog is empty but the system carries load; "
                         "the planning reserve floor cannot be met")
    eco = system.economics
    pol = system.policy
    stages = range(1, eco.stage_count + 1)
    n_stage = eco.stage_count
    hrs = list(range(1, reps.n_hours + 1))
    lf_h = {h.index: h.load_factor for h in reps.hours}
    wf_h = {h.index: h.wind_factor for h in reps.hours}
    pf_h = {h.index: h.pv_factor for h in reps.hours}
    w_op = {h.index: 8760.0 * h.weight for h in reps.hours}
    prev_h = {h: (hrs[-1] if h == hrs[0] else h - 1) for h in hrs}

    psi = eco.base_power_mva
    gamma = opt.resolved_gamma(system)
    phi = opt.resolved_phi(system)
    units = list(system.thermal_units)
    new_units = [u for u in units if u.candidate_slots > 0]
    wind = system.wind_sites()
    pv = system.pv_sites()
    stores = list(system.storage_types) if opt.with_bes else []
    lines_e = system.existing_lines()
    lines_c = system.candidate_lines()
    ref_bus = min(system.bus_ids())

    # ------------------------------------------------------------------ cols
    col_names: list = []
    col_keys: list = []
    col_index: dict = {}
    costs: list = []

    def add_col(key: tuple, name: str, cost: float = 0.0) -> int:
        col = len(col_names)
        col_names.append(name)
        col_keys.append(key)
        col_index[key] = col
        costs.append(cost)
        return col

    disc_i = {s: eco.discount(s, "investment") for s in stages}
    disc_o = {s: eco.discount(s, "operation") for s in stages}
    glf = {s: eco.load_factor(s) for s in stages}

    # Y partition: line circuits, thermal slots, storage installs, charge states
    for s in stages:
        for ln in lines_c:
            crf = annuity_factor(eco.interest_rate, system.line_lifetime(ln))
            base = 1e6 * crf * (ln.invest_cost_per_km + ln.row_cost_per_km) * ln.length_km
            for c in range(1, ln.corridor_slots + 1):
                cost = disc_i[s] * base
                if ln.is_new_corridor and c == 1:
                    cost += disc_i[s] * 1e6 * crf * ln.substation_cost
                add_col(("Y", s, ln.id, c), f"Y_s{s}_l{ln.id}_c{c}", cost)
    for s in stages:
        for u in new_units:
            for d in range(1, u.candidate_slots + 1):
                add_col(("X", s, u.bus, u.type_id, d),
                        f"X_s{s}_j{u.bus}_g{_clean(u.type_id)}_d{d}", 0.0)
    for s in stages:
        for st in stores:
            crf = annuity_factor(eco.interest_rate, system.storage_lifetime(st))
            cost = disc_i[s] * crf * (st.energy_cost * st.energy_capacity_mwh
                                      + st.power_cost * st.power_capacity_mw)
            add_col(("I", s, st.bus, st.type_id),
                    f"I_s{s}_j{st.bus}_t{_clean(st.type_id)}", cost)
    for s in stages:
        for st in stores:
            for h in hrs:
                add_col(("U", s, st.bus, st.type_id, h),
                        f"U_s{s}_j{st.bus}_t{_clean(st.type_id)}_h{h}", 0.0)
    n_y = len(col_names)

    # R partition: cumulative renewable capacity
    for s in stages:
        for site in wind:
            crf = annuity_factor(eco.interest_rate, system.site_lifetime(site))
            cost = disc_i[s] * 1e6 * crf * site.invest_cost + disc_o[s] * site.maint_cost
            add_col(("PW", s, site.bus), f"PW_s{s}_j{site.bus}", cost)
    for s in stages:
        for site in pv:
            crf = annuity_factor(eco.interest_rate, system.site_lifetime(site))
            cost = disc_i[s] * 1e6 * crf * site.invest_cost + disc_o[s] * site.maint_cost
            add_col(("PV", s, site.bus), f"PV_s{s}_j{site.bus}", cost)
    n_r = len(col_names) - n_y

    # P partition
    for s in stages:
        for u in units:
            for h in hrs:
                add_col(("P", s, u.bus, u.type_id, h),
                        f"P_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}", 0.0)
    for s in stages:
        for u in units:
            for h in hrs:
                for p in range(1, u.n_segments + 1):
                    seg = u.segments[p - 1]
                    cost = disc_o[s] * w_op[h] * seg.energy_cost
                    if opt.with_lcp:
                        cost += disc_o[s] * w_op[h] * u.emission_rate * seg.emission_price
                    add_col(("PS", s, u.bus, u.type_id, h, p),
                            f"PS_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}_p{p}", cost)
    for s in stages:
        for u in new_units:
            crf = annuity_factor(eco.interest_rate, system.unit_lifetime(u))
            cost = (disc_i[s] * 1e6 * crf * u.invest_cost * u.unit_capacity_mw
                    + disc_o[s] * u.maint_cost * u.unit_capacity_mw)
            add_col(("N", s, u.bus, u.type_id),
                    f"N_s{s}_j{u.bus}_g{_clean(u.type_id)}", cost)
    for s in stages:
        for u in units:
            for h in hrs:
                rc = disc_o[s] * w_op[h] * u.reserve_cost
                add_col(("RU", s, u.bus, u.type_id, h),
                        f"RU_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}", rc)
    for s in stages:
        for u in units:
            for h in hrs:
                rc = disc_o[s] * w_op[h] * u.reserve_cost
                add_col(("RD", s, u.bus, u.type_id, h),
                        f"RD_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}", rc)
    for s in stages:
        for st in stores:
            for h in hrs:
                add_col(("PD", s, st.bus, st.type_id, h),
                        f"PD_s{s}_j{st.bus}_t{_clean(st.type_id)}_h{h}",
                        disc_o[s] * w_op[h] * st.degradation_cost)
    for s in stages:
        for st in stores:
            for h in hrs:
                add_col(("PCH", s, st.bus, st.type_id, h),
                        f"PCH_s{s}_j{st.bus}_t{_clean(st.type_id)}_h{h}", 0.0)
    for s in stages:
        for st in stores:
            for h in hrs:
                add_col(("E", s, st.bus, st.type_id, h),
                        f"E_s{s}_j{st.bus}_t{_clean(st.type_id)}_h{h}", 0.0)
    for s in stages:
        for site in wind:
            for h in hrs:
                add_col(("PC", s, site.bus, h), f"PC_s{s}_j{site.bus}_h{h}",
                        disc_o[s] * w_op[h] * pol.curtail_price(site.bus))
    if gamma > 0:
        for s in stages:
            for b in system.buses:
                for h in hrs:
                    add_col(("LS", s, b.id, h), f"LS_s{s}_j{b.id}_h{h}",
                            disc_o[s] * w_op[h] * pol.shed_price(b.id))
    n_p = len(col_names) - n_y - n_r

    # F partition: flows and angles
    for s in stages:
        for ln in lines_e:
            for h in hrs:
                add_col(("FE", s, ln.id, h), f"FE_s{s}_l{ln.id}_h{h}", 0.0)
    for s in stages:
        for ln in lines_c:
            for c in range(1, ln.corridor_slots + 1):
                for h in hrs:
                    add_col(("FC", s, ln.id, c, h), f"FC_s{s}_l{ln.id}_c{c}_h{h}", 0.0)
    for s in stages:
        for b in system.buses:
            for h in hrs:
                add_col(("TH", s, b.id, h), f"TH_s{s}_j{b.id}_h{h}", 0.0)
    n_f = len(col_names) - n_y - n_r - n_p

    ix = col_index
    offset = 0.0
    for s in stages:
        for u in units:
            offset += disc_o[s] * u.maint_cost * u.unit_capacity_mw * u.existing_count

    # ------------------------------------------------------------------ rows
    rows_bin = _Rows()
    rows_eq = _Rows()
    rows_ge = _Rows()
    rows_bal = _Rows()

    # build rules over binaries only
    for s in stages:
        for u in new_units:
            for d in range(1, u.candidate_slots + 1):
                coeffs = {ix[("X", s, u.bus, u.type_id, d)]: 1.0}
                if s > 1:
                    coeffs[ix[("X", s - 1, u.bus, u.type_id, d)]] = -1.0
                rows_bin.add(f"e21_s{s}_j{u.bus}_g{_clean(u.type_id)}_d{d}", coeffs, 0.0)
    for s in stages:
        for st in stores:
            coeffs = {ix[("I", s, st.bus, st.type_id)]: 1.0}
            if s > 1:
                coeffs[ix[("I", s - 1, st.bus, st.type_id)]] = -1.0
            rows_bin.add(f"e50_s{s}_j{st.bus}_t{_clean(st.type_id)}", coeffs, 0.0)
    for s in stages:
        for ln in lines_c:
            for c in range(1, ln.corridor_slots + 1):
                coeffs = {ix[("Y", s, ln.id, c)]: 1.0}
                if s > 1:
                    coeffs[ix[("Y", s - 1, ln.id, c)]] = -1.0
                rows_bin.add(f"e55_s{s}_l{ln.id}_c{c}", coeffs, 0.0)
    for s in stages:
        for ln in lines_c:
            for c in range(1, ln.corridor_slots):
                rows_bin.add(f"sym_s{s}_l{ln.id}_c{c}",
                             {ix[("Y", s, ln.id, c)]: 1.0,
                              ix[("Y", s, ln.id, c + 1)]: -1.0}, 0.0)

    # coupling equalities
    for s in stages:
        for u in units:
            for h in hrs:
                coeffs = {ix[("P", s, u.bus, u.type_id, h)]: 1.0}
                for p in range(1, u.n_segments + 1):
                    coeffs[ix[("PS", s, u.bus, u.type_id, h, p)]] = -1.0
                rows_eq.add(f"e17_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}", coeffs, 0.0)
    for s in stages:
        for u in new_units:
            coeffs = {ix[("N", s, u.bus, u.type_id)]: 1.0}
            for d in range(1, u.candidate_slots + 1):
                coeffs[ix[("X", s, u.bus, u.type_id, d)]] = -1.0
            rows_eq.add(f"e20_s{s}_j{u.bus}_g{_clean(u.type_id)}", coeffs, 0.0)
    for s in stages:
        for st in stores:
            for h in hrs:
                hp = prev_h[h]
                rows_eq.add(
                    f"e48_s{s}_j{st.bus}_t{_clean(st.type_id)}_h{h}",
                    {ix[("E", s, st.bus, st.type_id, h)]: 1.0,
                     ix[("E", s, st.bus, st.type_id, hp)]: -1.0,
                     ix[("PCH", s, st.bus, st.type_id, h)]: -st.eta_charge,
                     ix[("PD", s, st.bus, st.type_id, h)]: 1.0 / st.eta_discharge},
                    0.0)
    for s in stages:
        for ln in lines_e:
            for h in hrs:
                k = psi * ln.susceptance_pu
                rows_eq.add(f"e52_s{s}_l{ln.id}_h{h}",
                            {ix[("FE", s, ln.id, h)]: 1.0,
                             ix[("TH", s, ln.from_bus, h)]: -k,
                             ix[("TH", s, ln.to_bus, h)]: k}, 0.0)
    for s in stages:
        for h in hrs:
            rows_eq.add(f"ref_s{s}_h{h}", {ix[("TH", s, ref_bus, h)]: 1.0}, 0.0)

    # coupling inequalities, all written as >=
    def n_term(coeffs, u, s, mult):
        if u.candidate_slots > 0:
            col = ix[("N", s, u.bus, u.type_id)]
            coeffs[col] = coeffs.get(col, 0.0) + mult

    for s in stages:
        for u in units:
            seg_cap = u.unit_capacity_mw / u.n_segments
            for h in hrs:
                for p in range(1, u.n_segments + 1):
                    coeffs = {ix[("PS", s, u.bus, u.type_id, h, p)]: -1.0}
                    n_term(coeffs, u, s, seg_cap)
                    rows_ge.add(f"e16_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}_p{p}",
                                coeffs, -u.existing_count * seg_cap)
    for s in stages:
        for u in units:
            for h in hrs:
                coeffs = {ix[("P", s, u.bus, u.type_id, h)]: -1.0,
                          ix[("RU", s, u.bus, u.type_id, h)]: -1.0}
                n_term(coeffs, u, s, u.unit_capacity_mw)
                rows_ge.add(f"e18_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            coeffs, -u.existing_count * u.unit_capacity_mw)
    for s in stages:
        for u in units:
            for h in hrs:
                rows_ge.add(f"e19_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            {ix[("P", s, u.bus, u.type_id, h)]: 1.0,
                             ix[("RD", s, u.bus, u.type_id, h)]: -1.0}, 0.0)
    for s in stages:
        for u in new_units:
            coeffs = {ix[("N", s, u.bus, u.type_id)]: -1.0}
            if s > 1:
                coeffs[ix[("N", s - 1, u.bus, u.type_id)]] = 1.0
            rows_ge.add(f"e22_s{s}_j{u.bus}_g{_clean(u.type_id)}", coeffs,
                        -float(u.build_limit))
    for s in stages:
        for u in units:
            for h in hrs:
                hp = prev_h[h]
                pcol = ix[("P", s, u.bus, u.type_id, h)]
                ppre = ix[("P", s, u.bus, u.type_id, hp)]
                coeffs = {pcol: -1.0, ix[("RU", s, u.bus, u.type_id, h)]: -1.0}
                coeffs[ppre] = coeffs.get(ppre, 0.0) + 1.0
                rows_ge.add(f"e23u_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            coeffs, -u.ramp_up_mw)
                coeffs = {pcol: 1.0, ix[("RD", s, u.bus, u.type_id, h)]: -1.0}
                coeffs[ppre] = coeffs.get(ppre, 0.0) - 1.0
                rows_ge.add(f"e23d_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            coeffs, -u.ramp_down_mw)
    peak_total = sum(b.peak_load_mw for b in system.buses)
    for s in stages:
        coeffs = {}
        rhs = (1.0 + pol.reserve_margin) * glf[s] * peak_total
        for u in units:
            n_term(coeffs, u, s, u.unit_capacity_mw)
            rhs -= u.existing_count * u.unit_capacity_mw
        for site in wind:
            coeffs[ix[("PW", s, site.bus)]] = 1.0
        for site in pv:
            coeffs[ix[("PV", s, site.bus)]] = 1.0
        rows_ge.add(f"e24_s{s}", coeffs, rhs)
    techs = system.tech_classes()
    for s in stages:
        for v in techs:
            hi = pol.mix_max.get(v, tuple(1.0 for _ in stages))[s - 1]
            lo = pol.mix_min.get(v, tuple(0.0 for _ in stages))[s - 1]
            coeffs_hi, coeffs_lo = {}, {}
            rhs_hi = rhs_lo = 0.0
            for u in units:
                mx = 1.0 if (u.tech or u.type_id) == v else 0.0
                cap = u.unit_capacity_mw
                n_term(coeffs_hi, u, s, (hi - mx) * cap)
                n_term(coeffs_lo, u, s, (mx - lo) * cap)
                rhs_hi -= (hi - mx) * cap * u.existing_count
                rhs_lo -= (mx - lo) * cap * u.existing_count
            rows_ge.add(f"e25_s{s}_v{_clean(v)}", coeffs_hi, rhs_hi)
            rows_ge.add(f"e26_s{s}_v{_clean(v)}", coeffs_lo, rhs_lo)
    for s in stages:
        for u in units:
            for h in hrs:
                rows_ge.add(f"e27_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            {ix[("RU", s, u.bus, u.type_id, h)]: -1.0},
                            -u.frsr_up_max_mw)
                rows_ge.add(f"e28_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            {ix[("RD", s, u.bus, u.type_id, h)]: -1.0},
                            -u.frsr_dn_max_mw)
    for s in stages:
        for h in hrs:
            base = {}
            for site in wind:
                base[ix[("PW", s, site.bus)]] = -pol.frsr_res_frac * wf_h[h]
            for site in pv:
                base[ix[("PV", s, site.bus)]] = -pol.frsr_res_frac * pf_h[h]
            rhs = pol.frsr_load_frac * glf[s] * lf_h[h] * peak_total
            up = dict(base)
            dn = dict(base)
            for u in units:
                up[ix[("RU", s, u.bus, u.type_id, h)]] = 1.0
                dn[ix[("RD", s, u.bus, u.type_id, h)]] = 1.0
            rows_ge.add(f"e29_s{s}_h{h}", up, rhs)
            rows_ge.add(f"e30_s{s}_h{h}", dn, rhs)
    tau = pol.ramp_window_min / 60.0
    for s in stages:
        for u in units:
            for h in hrs:
                hp = prev_h[h]
                pcol = ix[("P", s, u.bus, u.type_id, h)]
                ppre = ix[("P", s, u.bus, u.type_id, hp)]
                coeffs = {pcol: -tau, ix[("RU", s, u.bus, u.type_id, h)]: -1.0}
                coeffs[ppre] = coeffs.get(ppre, 0.0) + tau
                rows_ge.add(f"e31_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            coeffs, -u.frsr_up_max_mw)
                coeffs = {pcol: tau, ix[("RD", s, u.bus, u.type_id, h)]: -1.0}
                coeffs[ppre] = coeffs.get(ppre, 0.0) - tau
                rows_ge.add(f"e32_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            coeffs, -u.frsr_dn_max_mw)
                coeffs = {pcol: -tau, ix[("RU", s, u.bus, u.type_id, h)]: -1.0}
                coeffs[ppre] = coeffs.get(ppre, 0.0) - (1.0 - tau)
                n_term(coeffs, u, s, u.unit_capacity_mw)
                rows_ge.add(f"e33_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            coeffs, -u.existing_count * u.unit_capacity_mw)
                coeffs = {pcol: tau, ix[("RD", s, u.bus, u.type_id, h)]: -1.0}
                coeffs[ppre] = coeffs.get(ppre, 0.0) + (1.0 - tau)
                rows_ge.add(f"e34_s{s}_j{u.bus}_g{_clean(u.type_id)}_h{h}",
                            coeffs, 0.0)
    for s in stages:
        for site in wind:
            rows_ge.add(f"e35_s{s}_j{site.bus}",
                        {ix[("PW", s, site.bus)]: -1.0}, -site.cap_max_mw)
        for site in pv:
            rows_ge.add(f"e36_s{s}_j{site.bus}",
                        {ix[("PV", s, site.bus)]: -1.0}, -site.cap_max_mw)
    for s in stages:
        share = pol.rps_fraction if opt.rps_constant else pol.rps_fraction * s / n_stage
        coeffs = {}
        for site in wind:
            coeffs[ix[("PW", s, site.bus)]] = sum(wf_h[h] for h in hrs)
            for h in hrs:
                coeffs[ix[("PC", s, site.bus, h)]] = -1.0
        for site in pv:
            coeffs[ix[("PV", s, site.bus)]] = sum(pf_h[h] for h in hrs)
        rhs = share * glf[s] * sum(lf_h[h] for h in hrs) * peak_total
        rows_ge.add(f"e37_s{s}", coeffs, rhs)
    for s in stages:
        for site in wind:
            coeffs = {ix[("PW", s, site.bus)]: 1.0}
            if s > 1:
                coeffs[ix[("PW", s - 1, site.bus)]] = -1.0
            rows_ge.add(f"e38_s{s}_j{site.bus}", coeffs, 0.0)
        for site in pv:
            coeffs = {ix[("PV", s, site.bus)]: 1.0}
            if s > 1:
                coeffs[ix[("PV", s - 1, site.bus)]] = -1.0
            rows_ge.add(f"e39_s{s}_j{site.bus}", coeffs, 0.0)
    for s in stages:
        for site in wind:
            for h in hrs:
                rows_ge.add(f"e40_s{s}_j{site.bus}_h{h}",
                            {ix[("PW", s, site.bus)]: wf_h[h],
                             ix[("PC", s, site.bus, h)]: -1.0}, 0.0)
            coeffs = {ix[("PW", s, site.bus)]:
                      pol.wind_curtail_frac * sum(wf_h[h] for h in hrs)}
            for h in hrs:
                coeffs[ix[("PC", s, site.bus, h)]] = -1.0
            rows_ge.add(f"e41_s{s}_j{site.bus}", coeffs, 0.0)
    if gamma > 0:
        for s in stages:
            for b in system.buses:
                for h in hrs:
                    rows_ge.add(f"e42_s{s}_j{b.id}_h{h}",
                                {ix[("LS", s, b.id, h)]: -1.0},
                                -gamma * glf[s] * lf_h[h] * b.peak_load_mw)
        for s in stages:
            coeffs = {ix[("LS", s, b.id, h)]: -1.0
                      for b in system.buses for h in hrs}
            rhs = -phi * glf[s] * sum(lf_h[h] for h in hrs) * peak_total
            rows_ge.add(f"e43_s{s}", coeffs, rhs)
    for s in stages:
        for st in stores:
            cm = st.power_capacity_mw
            for h in hrs:
                tag = f"s{s}_j{st.bus}_t{_clean(st.type_id)}_h{h}"
                rows_ge.add(f"e44_{tag}",
                            {ix[("I", s, st.bus, st.type_id)]: cm,
                             ix[("PCH", s, st.bus, st.type_id, h)]: -st.eta_charge},
                            0.0)
                rows_ge.add(f"e45_{tag}",
                            {ix[("I", s, st.bus, st.type_id)]: cm,
                             ix[("PD", s, st.bus, st.type_id, h)]: -1.0 / st.eta_discharge},
                            0.0)
                rows_ge.add(f"e46_{tag}",
                            {ix[("U", s, st.bus, st.type_id, h)]: cm,
                             ix[("PCH", s, st.bus, st.type_id, h)]: -st.eta_charge},
                            0.0)
                rows_ge.add(f"e47_{tag}",
                            {ix[("U", s, st.bus, st.type_id, h)]: -cm,
                             ix[("PD", s, st.bus, st.type_id, h)]: -1.0 / st.eta_discharge},
                            -cm)
                rows_ge.add(f"e49_{tag}",
                            {ix[("I", s, st.bus, st.type_id)]: st.energy_capacity_mwh,
                             ix[("E", s, st.bus, st.type_id, h)]: -1.0}, 0.0)
    for s in stages:
        for ln in lines_e:
            for h in hrs:
                col = ix[("FE", s, ln.id, h)]
                rows_ge.add(f"e51lo_s{s}_l{ln.id}_h{h}", {col: 1.0}, -ln.capacity_mw)
                rows_ge.add(f"e51hi_s{s}_l{ln.id}_h{h}", {col: -1.0}, -ln.capacity_mw)
    for s in stages:
        for ln in lines_c:
            m_l = big_m_value(ln, psi, opt.big_m_angle)
            k = psi * ln.susceptance_pu
            for c in range(1, ln.corridor_slots + 1):
                ycol = ix[("Y", s, ln.id, c)]
                for h in hrs:
                    fcol = ix[("FC", s, ln.id, c, h)]
                    tag = f"s{s}_l{ln.id}_c{c}_h{h}"
                    rows_ge.add(f"e53lo_{tag}",
                                {fcol: 1.0, ycol: ln.capacity_mw}, 0.0)
                    rows_ge.add(f"e53hi_{tag}",
                                {fcol: -1.0, ycol: ln.capacity_mw}, 0.0)
                    rows_ge.add(f"e54lo_{tag}",
                                {fcol: 1.0,
                                 ix[("TH", s, ln.from_bus, h)]: -k,
                                 ix[("TH", s, ln.to_bus, h)]: k,
                                 ycol: -m_l}, -m_l)
                    rows_ge.add(f"e54hi_{tag}",
                                {fcol: -1.0,
                                 ix[("TH", s, ln.from_bus, h)]: k,
                                 ix[("TH", s, ln.to_bus, h)]: -k,
                                 ycol: -m_l}, -m_l)

    # nodal balance block
    for s in stages:
        for b in system.buses:
            for h in hrs:
                coeffs = {}
                for u in units:
                    if u.bus == b.id:
                        coeffs[ix[("P", s, u.bus, u.type_id, h)]] = 1.0
                for site in wind:
                    if site.bus == b.id:
                        coeffs[ix[("PW", s, site.bus)]] = wf_h[h]
                        coeffs[ix[("PC", s, site.bus, h)]] = -1.0
                for site in pv:
                    if site.bus == b.id:
                        coeffs[ix[("PV", s, site.bus)]] = pf_h[h]
                for st in stores:
                    if st.bus == b.id:
                        coeffs[ix[("PD", s, st.bus, st.type_id, h)]] = 1.0
                        coeffs[ix[("PCH", s, st.bus, st.type_id, h)]] = -1.0
                for ln in lines_e:
                    sign = 1.0 if ln.from_bus == b.id else (-1.0 if ln.to_bus == b.id else 0.0)
                    if sign:
                        coeffs[ix[("FE", s, ln.id, h)]] = -sign
                for ln in lines_c:
                    sign = 1.0 if ln.from_bus == b.id else (-1.0 if ln.to_bus == b.id else 0.0)
                    if sign:
                        for c in range(1, ln.corridor_slots + 1):
                            coeffs[ix[("FC", s, ln.id, c, h)]] = -sign
                if gamma > 0:
                    coeffs[ix[("LS", s, b.id, h)]] = 1.0
                rows_bal.add(f"e56_s{s}_j{b.id}_h{h}", coeffs,
                             glf[s] * lf_h[h] * b.peak_load_mw)

    n_cols = len(col_names)
    a_bin, b_bin, bin_names = rows_bin.matrix(n_y)
    a_eq, h_eq, eq_names = rows_eq.matrix(n_cols)
    a_ge, h_ge, ge_names = rows_ge.matrix(n_cols)
    a_bal, h_bal, bal_names = rows_bal.matrix(n_cols)
    costs = np.asarray(costs)

    compact = CompactMilp(
        system=system, options=opt,
        n_y=n_y, n_r=n_r, n_p=n_p, n_f=n_f,
        col_names=col_names, col_keys=col_keys, col_index=col_index,
        invest_y=costs[:n_y].copy(),
        cost_r=costs[n_y:n_y + n_r].copy(),
        cost_p=costs[n_y + n_r:n_y + n_r + n_p].copy(),
        a_bin=a_bin, b_bin=b_bin, bin_names=bin_names,
        a_eq=a_eq, h_eq=h_eq, eq_names=eq_names,
        a_ge=a_ge, h_ge=h_ge, ge_names=ge_names,
        a_bal=a_bal, h_bal=h_bal, bal_names=bal_names,
        objective_offset=offset)
    compact.validate_dimensions()
    return compact


def extract_solution(compact: CompactMilp, x: np.ndarray) -> dict:
    """Map a solver point back to named quantities, rounding the binaries."""
    values = {}
    for col, key in enumerate(compact.col_keys):
        val = float(x[col])
        if col < compact.n_y:
            val = float(round(val))
        values[key] = val
    return values


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Discounted cost components recomputed from named quantities."""

    invest_lines: tuple
    invest_units: tuple
    invest_renewables: tuple
    invest_storage: tuple
    op_fuel: tuple
    op_reserve: tuple
    op_degradation: tuple
    op_penalty: tuple
    maintenance: tuple
    emission: tuple

    @property
    def tc_inv(self) -> float:
        return (sum(self.invest_lines) + sum(self.invest_units)
                + sum(self.invest_renewables) + sum(self.invest_storage))

    @property
    def tc_op(self) -> float:
        return (sum(self.op_fuel) + sum(self.op_reserve)
                + sum(self.op_degradation) + sum(self.op_penalty))

    @property
    def tc_maint(self) -> float:
        return sum(self.maintenance)

    @property
    def tc_emission(self) -> float:
        return sum(self.emission)

    @property
    def total(self) -> float:
        return self.tc_inv + self.tc_op + self.tc_maint + self.tc_emission

    def stage_total(self, s: int) -> float:
        i = s - 1
        return (self.invest_lines[i] + self.invest_units[i]
                + self.invest_renewables[i] + self.invest_storage[i]
                + self.op_fuel[i] + self.op_reserve[i] + self.op_degradation[i]
                + self.op_penalty[i] + self.maintenance[i] + self.emission[i])


def _hour_data(system: SystemData):
    reps = system.timeseries
    hrs = [h.index for h in reps.hours]
    return (hrs,
            {h.index: h.load_factor for h in reps.hours},
            {h.index: h.wind_factor for h in reps.hours},
            {h.index: h.pv_factor for h in reps.hours},
            {h.index: 8760.0 * h.weight for h in reps.hours})


def evaluate_objective(system: SystemData, values: dict,
                       options: BuildOptions | None = None) -> ObjectiveBreakdown:
    """Recompute the discounted plan cost directly from named quantities.

    Incremental builds are priced from cumulative decision levels; every
    asset keeps paying its annualized cost in each stage after it appears.
    Existing-unit maintenance is included, so the total matches the solver
    objective plus its constant offset.
    """
    opt = options or BuildOptions()
    eco = system.economics
    pol = system.policy
    stages = range(1, eco.stage_count + 1)
    hrs, lf_h, wf_h, pf_h, w_op = _hour_data(system)

    def v(*key):
        try:
            return float(values[key])
        except KeyError:
            raise KeyError(f"no value supplied for {key}") from None

    inv_lines, inv_units, inv_ren, inv_sto = [], [], [], []
    op_fuel, op_res, op_deg, op_pen = [], [], [], []
    maint, emis = [], []
    for s in stages:
        di = eco.discount(s, "investment")
        do = eco.discount(s, "operation")
        lines = 0.0
        for ln in system.candidate_lines():
            crf = annuity_factor(eco.interest_rate, system.line_lifetime(ln))
            for c in range(1, ln.corridor_slots + 1):
                built = v("Y", s, ln.id, c)
                cost = (ln.invest_cost_per_km + ln.row_cost_per_km) * ln.length_km
                if ln.is_new_corridor and c == 1:
                    cost += ln.substation_cost
                lines += di * 1e6 * crf * cost * built
        units = 0.0
        upkeep = 0.0
        fuel = 0.0
        res = 0.0
        co2 = 0.0
        for u in system.thermal_units:
            cap = u.unit_capacity_mw
            n_new = v("N", s, u.bus, u.type_id) if u.candidate_slots > 0 else 0.0
            crf = annuity_factor(eco.interest_rate, system.unit_lifetime(u))
            units += di * 1e6 * crf * u.invest_cost * cap * n_new
            upkeep += do * u.maint_cost * cap * (u.existing_count + n_new)
            for h in hrs:
                for p in range(1, u.n_segments + 1):
                    seg = u.segments[p - 1]
                    ps = v("PS", s, u.bus, u.type_id, h, p)
                    fuel += do * w_op[h] * seg.fuel_price * seg.heat_rate * ps
                    if opt.with_lcp:
                        co2 += do * w_op[h] * u.emission_rate * seg.emission_price * ps
                res += do * w_op[h] * u.reserve_cost * (
                    v("RU", s, u.bus, u.type_id, h) + v("RD", s, u.bus, u.type_id, h))
        ren = 0.0
        for site in system.renewables:
            key = "PW" if site.kind == "wind" else "PV"
            crf = annuity_factor(eco.interest_rate, system.site_lifetime(site))
            built = v(key, s, site.bus)
            ren += di * 1e6 * crf * site.invest_cost * built
            upkeep += do * site.maint_cost * built
        sto = 0.0
        deg = 0.0
        if opt.with_bes:
            for st in system.storage_types:
                crf = annuity_factor(eco.interest_rate, system.storage_lifetime(st))
                built = v("I", s, st.bus, st.type_id)
                sto += di * crf * (st.energy_cost * st.energy_capacity_mwh
                                   + st.power_cost * st.power_capacity_mw) * built
                for h in hrs:
                    deg += do * w_op[h] * st.degradation_cost * v(
                        "PD", s, st.bus, st.type_id, h)
        pen = 0.0
        for site in system.wind_sites():
            for h in hrs:
                pen += do * w_op[h] * pol.curtail_price(site.bus) * v(
                    "PC", s, site.bus, h)
        gamma = opt.resolved_gamma(system)
        if gamma > 0:
            for b in system.buses:
                for h in hrs:
                    pen += do * w_op[h] * pol.shed_price(b.id) * v("LS", s, b.id, h)
        inv_lines.append(lines)
        inv_units.append(units)
        inv_ren.append(ren)
        inv_sto.append(sto)
        op_fuel.append(fuel)
        op_res.append(res)
        op_deg.append(deg)
        op_pen.append(pen)
        maint.append(upkeep)
        emis.append(co2)
    return ObjectiveBreakdown(
        invest_lines=tuple(inv_lines), invest_units=tuple(inv_units),
        invest_renewables=tuple(inv_ren), invest_storage=tuple(inv_sto),
        op_fuel=tuple(op_fuel), op_reserve=tuple(op_res),
        op_degradation=tuple(op_deg), op_penalty=tuple(op_pen),
        maintenance=tuple(maint), emission=tuple(emis))


def stage_emissions_tons(system: SystemData, values: dict, s: int) -> float:
    """Physical CO2 mass for one stage (both modeled years), in tons."""
    hrs, _, _, _, w_op = _hour_data(system)
    v = lambda *key: float(values.get(tuple(key), 0.0))
    tons = 0.0
    for u in system.thermal_units:
        for h in hrs:
            out = v("P", s, u.bus, u.type_id, h)
            tons += 2.0 * w_op[h] * u.emission_rate * out
    return tons


def stage_served_energy_mwh(system: SystemData, values: dict, s: int) -> float:
    """Energy delivered to load over one stage (both modeled years), MWh."""
    eco = system.economics
    hrs, lf_h, _, _, w_op = _hour_data(system)
    v = lambda *key: float(values.get(tuple(key), 0.0))
    served = 0.0
    for b in system.buses:
        for h in hrs:
            demand = eco.load_factor(s) * lf_h[h] * b.peak_load_mw
            served += 2.0 * w_op[h] * (demand - v("LS", s, b.id, h))
    return served


def check_solution(system: SystemData, values: dict,
                   options: BuildOptions | None = None,
                   tolerance: float = 1e-6) -> list:
    """Re-verify a plan against every model constraint, straight from the data.

    Works from named quantities only; no matrices are involved, so this is an
    independent feasibility route. Returns (row, violation) pairs for any
    constraint broken by more than the tolerance. Solver-side conventions
    (circuit ordering, the angle reference) are not model constraints and are
    not checked.
    """
    opt = options or BuildOptions()
    eco = system.economics
    pol = system.policy
    bad: list = []
    v = lambda *key: float(values.get(tuple(key), 0.0))

    def check(name: str, slack: float):
        # slack >= 0 means satisfied
        if slack < -tolerance:
            bad.append((name, -slack))

    stages = range(1, eco.stage_count + 1)
    hrs, lf_h, wf_h, pf_h, _ = _hour_data(system)
    prev_h = {h: (hrs[-1] if h == hrs[0] else h - 1) for h in hrs}
    gamma = opt.resolved_gamma(system)
    phi = opt.resolved_phi(system)
    psi = eco.base_power_mva
    tau = pol.ramp_window_min / 60.0
    peak_total = sum(b.peak_load_mw for b in system.buses)
    stores = list(system.storage_types) if opt.with_bes else []

    def binary(name, val):
        check(name, -abs(val - round(val)))
        check(name, min(val + tolerance, 1.0 + tolerance - val))

    for s in stages:
        glf = eco.load_factor(s)
        for ln in system.candidate_lines():
            for c in range(1, ln.corridor_slots + 1):
                y = v("Y", s, ln.id, c)
                binary(f"dom_Y_s{s}_l{ln.id}_c{c}", y)
                prev = v("Y", s - 1, ln.id, c) if s > 1 else 0.0
                check(f"e55_s{s}_l{ln.id}_c{c}", y - prev)
        for u in system.thermal_units:
            cap = u.unit_capacity_mw
            seg_cap = cap / u.n_segments
            g = _clean(u.type_id)
            n_s = v("N", s, u.bus, u.type_id) if u.candidate_slots > 0 else 0.0
            if u.candidate_slots > 0:
                total_x = 0.0
                for d in range(1, u.candidate_slots + 1):
                    x = v("X", s, u.bus, u.type_id, d)
                    binary(f"dom_X_s{s}_j{u.bus}_g{g}_d{d}", x)
                    prev = v("X", s - 1, u.bus, u.type_id, d) if s > 1 else 0.0
                    check(f"e21_s{s}_j{u.bus}_g{g}_d{d}", x - prev)
                    total_x += x
                check(f"e20_s{s}_j{u.bus}_g{g}", -abs(n_s - total_x))
                n_prev = v("N", s - 1, u.bus, u.type_id) if s > 1 else 0.0
                check(f"e22_s{s}_j{u.bus}_g{g}", u.build_limit - (n_s - n_prev))
            avail = (u.existing_count + n_s)
            for h in hrs:
                out = v("P", s, u.bus, u.type_id, h)
                ru = v("RU", s, u.bus, u.type_id, h)
                rd = v("RD", s, u.bus, u.type_id, h)
                pre = v("P", s, u.bus, u.type_id, prev_h[h])
                check(f"dom_P_s{s}_j{u.bus}_g{g}_h{h}", out)
                check(f"dom_RU_s{s}_j{u.bus}_g{g}_h{h}", ru)
                check(f"dom_RD_s{s}_j{u.bus}_g{g}_h{h}", rd)
                seg_sum = 0.0
                for p in range(1, u.n_segments + 1):
                    ps = v("PS", s, u.bus, u.type_id, h, p)
                    check(f"dom_PS_s{s}_j{u.bus}_g{g}_h{h}_p{p}", ps)
                    check(f"e16_s{s}_j{u.bus}_g{g}_h{h}_p{p}", avail * seg_cap - ps)
                    seg_sum += ps
                check(f"e17_s{s}_j{u.bus}_g{g}_h{h}", -abs(out - seg_sum))
                check(f"e18_s{s}_j{u.bus}_g{g}_h{h}", avail * cap - out - ru)
                check(f"e19_s{s}_j{u.bus}_g{g}_h{h}", out - rd)
                check(f"e23u_s{s}_j{u.bus}_g{g}_h{h}", u.ramp_up_mw + pre - out - ru)
                check(f"e23d_s{s}_j{u.bus}_g{g}_h{h}", u.ramp_down_mw + out - pre - rd)
                check(f"e27_s{s}_j{u.bus}_g{g}_h{h}", u.frsr_up_max_mw - ru)
                check(f"e28_s{s}_j{u.bus}_g{g}_h{h}", u.frsr_dn_max_mw - rd)
                check(f"e31_s{s}_j{u.bus}_g{g}_h{h}",
                      u.frsr_up_max_mw - tau * (out - pre) - ru)
                check(f"e32_s{s}_j{u.bus}_g{g}_h{h}",
                      u.frsr_dn_max_mw - tau * (pre - out) - rd)
                check(f"e33_s{s}_j{u.bus}_g{g}_h{h}",
                      avail * cap - (tau * out + (1.0 - tau) * pre) - ru)
                check(f"e34_s{s}_j{u.bus}_g{g}_h{h}",
                      tau * out + (1.0 - tau) * pre - rd)
        # fleet-level capacity rules
        cap_firm = 0.0
        for u in system.thermal_units:
            n_s = v("N", s, u.bus, u.type_id) if u.candidate_slots > 0 else 0.0
            cap_firm += (u.existing_count + n_s) * u.unit_capacity_mw
        ren_cap = sum(v("PW", s, site.bus) for site in system.wind_sites())
        ren_cap += sum(v("PV", s, site.bus) for site in system.pv_sites())
        check(f"e24_s{s}", cap_firm + ren_cap
              - (1.0 + pol.reserve_margin) * glf * peak_total)
        for tech in system.tech_classes():
            hi = pol.mix_max.get(tech, tuple(1.0 for _ in stages))[s - 1]
            lo = pol.mix_min.get(tech, tuple(0.0 for _ in stages))[s - 1]
            in_class = 0.0
            for u in system.thermal_units:
                if (u.tech or u.type_id) == tech:
                    n_s = v("N", s, u.bus, u.type_id) if u.candidate_slots > 0 else 0.0
                    in_class += (u.existing_count + n_s) * u.unit_capacity_mw
            check(f"e25_s{s}_v{_clean(tech)}", hi * cap_firm - in_class)
            check(f"e26_s{s}_v{_clean(tech)}", in_class - lo * cap_firm)
        for h in hrs:
            ru_all = sum(v("RU", s, u.bus, u.type_id, h) for u in system.thermal_units)
            rd_all = sum(v("RD", s, u.bus, u.type_id, h) for u in system.thermal_units)
            ren_h = sum(wf_h[h] * v("PW", s, site.bus) for site in system.wind_sites())
            ren_h += sum(pf_h[h] * v("PV", s, site.bus) for site in system.pv_sites())
            need = (pol.frsr_res_frac * ren_h
                    + pol.frsr_load_frac * glf * lf_h[h] * peak_total)
            check(f"e29_s{s}_h{h}", ru_all - need)
            check(f"e30_s{s}_h{h}", rd_all - need)
        # renewables
        for site in system.renewables:
            key = "PW" if site.kind == "wind" else "PV"
            tag = "e35" if site.kind == "wind" else "e36"
            per = "e38" if site.kind == "wind" else "e39"
            built = v(key, s, site.bus)
            check(f"dom_{key}_s{s}_j{site.bus}", built)
            check(f"{tag}_s{s}_j{site.bus}", site.cap_max_mw - built)
            prev = v(key, s - 1, site.bus) if s > 1 else 0.0
            check(f"{per}_s{s}_j{site.bus}", built - prev)
        for site in system.wind_sites():
            pw = v("PW", s, site.bus)
            curt = 0.0
            for h in hrs:
                pc = v("PC", s, site.bus, h)
                check(f"dom_PC_s{s}_j{site.bus}_h{h}", pc)
                check(f"e40_s{s}_j{site.bus}_h{h}", wf_h[h] * pw - pc)
                curt += pc
            check(f"e41_s{s}_j{site.bus}",
                  pol.wind_curtail_frac * sum(wf_h[h] for h in hrs) * pw - curt)
        share = pol.rps_fraction if opt.rps_constant else (
            pol.rps_fraction * s / eco.stage_count)
        ren_energy = 0.0
        for site in system.wind_sites():
            ren_energy += sum(wf_h[h] * v("PW", s, site.bus)
                              - v("PC", s, site.bus, h) for h in hrs)
        for site in system.pv_sites():
            ren_energy += sum(pf_h[h] * v("PV", s, site.bus) for h in hrs)
        check(f"e37_s{s}", ren_energy
              - share * glf * sum(lf_h[h] for h in hrs) * peak_total)
        # shedding
        if gamma > 0:
            shed_all = 0.0
            for b in system.buses:
                for h in hrs:
                    ls = v("LS", s, b.id, h)
                    check(f"dom_LS_s{s}_j{b.id}_h{h}", ls)
                    check(f"e42_s{s}_j{b.id}_h{h}",
                          gamma * glf * lf_h[h] * b.peak_load_mw - ls)
                    shed_all += ls
            check(f"e43_s{s}",
                  phi * glf * sum(lf_h[h] for h in hrs) * peak_total - shed_all)
        # storage
        for st in stores:
            t = _clean(st.type_id)
            inst = v("I", s, st.bus, st.type_id)
            binary(f"dom_I_s{s}_j{st.bus}_t{t}", inst)
            prev = v("I", s - 1, st.bus, st.type_id) if s > 1 else 0.0
            check(f"e50_s{s}_j{st.bus}_t{t}", inst - prev)
            for h in hrs:
                u_sel = v("U", s, st.bus, st.type_id, h)
                binary(f"dom_U_s{s}_j{st.bus}_t{t}_h{h}", u_sel)
                pc = v("PCH", s, st.bus, st.type_id, h)
                pd = v("PD", s, st.bus, st.type_id, h)
                lvl = v("E", s, st.bus, st.type_id, h)
                lvl_prev = v("E", s, st.bus, st.type_id, prev_h[h])
                check(f"dom_PCH_s{s}_j{st.bus}_t{t}_h{h}", pc)
                check(f"dom_PD_s{s}_j{st.bus}_t{t}_h{h}", pd)
                check(f"dom_E_s{s}_j{st.bus}_t{t}_h{h}", lvl)
                cm = st.power_capacity_mw
                check(f"e44_s{s}_j{st.bus}_t{t}_h{h}", cm * inst - st.eta_charge * pc)
                check(f"e45_s{s}_j{st.bus}_t{t}_h{h}",
                      cm * inst - pd / st.eta_discharge)
                check(f"e46_s{s}_j{st.bus}_t{t}_h{h}", cm * u_sel - st.eta_charge * pc)
                check(f"e47_s{s}_j{st.bus}_t{t}_h{h}",
                      cm * (1.0 - u_sel) - pd / st.eta_discharge)
                check(f"e48_s{s}_j{st.bus}_t{t}_h{h}",
                      -abs(lvl - lvl_prev - st.eta_charge * pc + pd / st.eta_discharge))
                check(f"e49_s{s}_j{st.bus}_t{t}_h{h}",
                      st.energy_capacity_mwh * inst - lvl)
        # network
        for ln in system.existing_lines():
            k = psi * ln.susceptance_pu
            for h in hrs:
                flow = v("FE", s, ln.id, h)
                dth = v("TH", s, ln.from_bus, h) - v("TH", s, ln.to_bus, h)
                check(f"e52_s{s}_l{ln.id}_h{h}", -abs(flow - k * dth))
                check(f"e51lo_s{s}_l{ln.id}_h{h}", flow + ln.capacity_mw)
                check(f"e51hi_s{s}_l{ln.id}_h{h}", ln.capacity_mw - flow)
        for ln in system.candidate_lines():
            k = psi * ln.susceptance_pu
            m_l = big_m_value(ln, psi, opt.big_m_angle)
            for c in range(1, ln.corridor_slots + 1):
                y = v("Y", s, ln.id, c)
                for h in hrs:
                    flow = v("FC", s, ln.id, c, h)
                    dth = v("TH", s, ln.from_bus, h) - v("TH", s, ln.to_bus, h)
                    tag = f"s{s}_l{ln.id}_c{c}_h{h}"
                    check(f"e53lo_{tag}", flow + ln.capacity_mw * y)
                    check(f"e53hi_{tag}", ln.capacity_mw * y - flow)
                    check(f"e54lo_{tag}", flow - k * dth + m_l * (1.0 - y))
                    check(f"e54hi_{tag}", k * dth - flow + m_l * (1.0 - y))
        # balance
        for b in system.buses:
            for h in hrs:
                inj = 0.0
                for u in system.thermal_units:
                    if u.bus == b.id:
                        inj += v("P", s, u.bus, u.type_id, h)
                for site in system.wind_sites():
                    if site.bus == b.id:
                        inj += wf_h[h] * v("PW", s, site.bus) - v("PC", s, site.bus, h)
                for site in system.pv_sites():
                    if site.bus == b.id:
                        inj += pf_h[h] * v("PV", s, site.bus)
                for st in stores:
                    if st.bus == b.id:
                        inj += (v("PD", s, st.bus, st.type_id, h)
                                - v("PCH", s, st.bus, st.type_id, h))
                for ln in system.existing_lines():
                    if ln.from_bus == b.id:
                        inj -= v("FE", s, ln.id, h)
                    elif ln.to_bus == b.id:
                        inj += v("FE", s, ln.id, h)
                for ln in system.candidate_lines():
                    sign = 1.0 if ln.from_bus == b.id else (
                        -1.0 if ln.to_bus == b.id else 0.0)
                    if sign:
                        for c in range(1, ln.corridor_slots + 1):
                            inj -= sign * v("FC", s, ln.id, c, h)
                if gamma > 0:
                    inj += v("LS", s, b.id, h)
                demand = glf * lf_h[h] * b.peak_load_mw
                check(f"e56_s{s}_j{b.id}_h{h}", -abs(inj - demand))
    return bad

"""Plan reports: build tables, cost breakdown, trajectories, trace export.

Every figure in a report is recomputed from the named solution quantities,
never copied out of solver internals, so a second aggregation pass over the
same solution must reproduce it exactly. Rendering is deterministic: the
same solution always produces byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .formulation import (BuildOptions, evaluate_objective,
                          stage_emissions_tons, stage_served_energy_mwh)
from .system import SystemData, system_digest

SOLUTION_SCHEMA = 1
REPORT_SCHEMA = 1


class ReportError(ValueError):
    """Malformed or mismatched report input."""


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _csv(rows) -> str:
    return "".join(",".join(_fmt(c) for c in row) + "\n" for row in rows)


def _hours(system: SystemData):
    reps = system.timeseries.hours
    return ([h.index for h in reps],
            {h.index: h.load_factor for h in reps},
            {h.index: h.wind_factor for h in reps},
            {h.index: h.pv_factor for h in reps},
            {h.index: 8760.0 * h.weight for h in reps})


# ---------------------------------------------------------------------------
# solution documents


def solution_document(system: SystemData, values: dict, *, method: str,
                      status: str, objective: float, bound: float | None = None,
                      options: BuildOptions | None = None,
                      trace: list | None = None) -> dict:
    """Self-contained record of one solve, keyed to the instance digest."""
    opt = options or BuildOptions()
    doc = {
        "schema_version": SOLUTION_SCHEMA,
        "instance": system.name,
        "instance_digest": system_digest(system),
        "method": method,
        "status": status,
        "objective": float(objective),
        "bound": None if bound is None else float(bound),
        "options": {
            "with_bes": opt.with_bes,
            "with_lcp": opt.with_lcp,
            "shed_gamma": opt.shed_gamma,
            "shed_phi": opt.shed_phi,
            "big_m_angle": opt.big_m_angle,
            "rps_constant": opt.rps_constant,
        },
        "values": [[list(k), float(v)] for k, v in values.items()],
    }
    if trace is not None:
        doc["trace"] = [{"iteration": r.iteration,
                         "lower_bound": r.lower_bound,
                         "upper_bound": r.upper_bound,
                         "gap": r.gap,
                         "cut_type": r.cut_type,
                         "master_nodes": r.master_nodes} for r in trace]
    return doc


def write_solution(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_solution(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"cannot read solution file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema_version") != SOLUTION_SCHEMA:
        raise ReportError("unsupported solution schema")
    return doc


def solution_values(doc: dict) -> dict:
    """Named quantities back out of a solution document."""
    return {tuple(k): float(v) for k, v in doc["values"]}


def solution_options(doc: dict) -> BuildOptions:
    o = doc.get("options", {})
    return BuildOptions(with_bes=o.get("with_bes", True),
                        with_lcp=o.get("with_lcp", True),
                        shed_gamma=o.get("shed_gamma"),
                        shed_phi=o.get("shed_phi"),
                        big_m_angle=o.get("big_m_angle", 0.6),
                        rps_constant=o.get("rps_constant", False))


def require_matching_digest(doc: dict, system: SystemData) -> None:
    have = system_digest(system)
    want = doc.get("instance_digest", "")
    if have != want:
        raise ReportError(
            "solution was produced from a different instance "
            f"(digest {want[:12]}.. vs {have[:12]}..); refusing to mix them")


# ---------------------------------------------------------------------------
# energy accounting


def stage_energy_by_source(system: SystemData, values: dict, s: int,
                           options: BuildOptions | None = None) -> dict:
    """Stage energy in MWh by supply source, plus energy served.

    The storage column is discharge net of charging, so the four sources
    add up to the served energy exactly (the balance rows summed over
    buses and hours; line flows cancel pairwise).
    """
    opt = options or BuildOptions()
    hrs, lf_h, wf_h, pf_h, w_op = _hours(system)
    v = lambda *key: float(values.get(tuple(key), 0.0))
    thermal = wind = pv = bes = 0.0
    for h in hrs:
        w2 = 2.0 * w_op[h]
        for u in system.thermal_units:
            thermal += w2 * v("P", s, u.bus, u.type_id, h)
        for site in system.wind_sites():
            wind += w2 * (wf_h[h] * v("PW", s, site.bus) - v("PC", s, site.bus, h))
        for site in system.pv_sites():
            pv += w2 * pf_h[h] * v("PV", s, site.bus)
        if opt.with_bes:
            for st in system.storage_types:
                bes += w2 * (v("PD", s, st.bus, st.type_id, h)
                             - v("PCH", s, st.bus, st.type_id, h))
    return {"thermal": thermal, "wind": wind, "pv": pv, "bes": bes,
            "served": stage_served_energy_mwh(system, values, s)}


def dispatch_stack(system: SystemData, values: dict, s: int,
                   options: BuildOptions | None = None) -> list:
    """Per-representative-hour supply by source for one stage (MW)."""
    opt = options or BuildOptions()
    hrs, lf_h, wf_h, pf_h, w_op = _hours(system)
    glf = system.economics.load_factor(s)
    v = lambda *key: float(values.get(tuple(key), 0.0))
    rows = []
    for h in hrs:
        load = glf * lf_h[h] * sum(b.peak_load_mw for b in system.buses)
        th = sum(v("P", s, u.bus, u.type_id, h) for u in system.thermal_units)
        wn = sum(wf_h[h] * v("PW", s, site.bus) - v("PC", s, site.bus, h)
                 for site in system.wind_sites())
        pw = sum(pf_h[h] * v("PV", s, site.bus) for site in system.pv_sites())
        dis = ch = 0.0
        if opt.with_bes:
            dis = sum(v("PD", s, st.bus, st.type_id, h)
                      for st in system.storage_types)
            ch = sum(v("PCH", s, st.bus, st.type_id, h)
                     for st in system.storage_types)
        shed = sum(v("LS", s, b.id, h) for b in system.buses)
        rows.append({"hour": h, "weight": w_op[h] / 8760.0, "load_mw": load,
                     "thermal": th, "wind": wn, "pv": pw,
                     "bes_discharge": dis, "bes_charge": ch, "shed": shed})
    return rows


# ---------------------------------------------------------------------------
# plan report


@dataclass(frozen=True)
class StageBuilds:
    """Capacity added in one stage (increments over the previous level)."""

    stage: int
    lines: tuple        # (line_id, from_bus, to_bus, circuits_added)
    units: tuple        # (bus, tech, count_added, mw_added)
    renewables: tuple   # (bus, kind, mw_added)
    storage: tuple      # (bus, type_id, count_added, mw, mwh)


@dataclass(frozen=True)
class PlanReport:
    name: str
    instance_digest: str
    method: str
    stage_count: int
    builds: tuple
    invest_by_class: dict        # asset class -> discounted $ over the horizon
    tc_inv: float
    tc_op: float
    tc_maint: float
    tc_emission: float
    tc_total: float
    stage_cost: tuple            # discounted $ per stage, all components
    emissions_tons: tuple
    served_mwh: tuple
    lcoe_cumulative: tuple       # $/MWh through stage s
    emission_factor_cumulative: tuple   # ton/MWh through stage s
    shares: tuple                # per stage: thermal/wind/pv/bes of served


def _stage_builds(system: SystemData, values: dict, s: int,
                  options: BuildOptions) -> StageBuilds:
    v = lambda *key: float(values.get(tuple(key), 0.0))

    def delta(head, *rest):
        before = v(head, s - 1, *rest) if s > 1 else 0.0
        return v(head, s, *rest) - before

    lines = []
    for ln in system.candidate_lines():
        added = sum(delta("Y", ln.id, c)
                    for c in range(1, ln.corridor_slots + 1))
        if added > 0.5:
            lines.append((ln.id, ln.from_bus, ln.to_bus, int(round(added))))
    units = []
    for u in system.thermal_units:
        if u.candidate_slots == 0:
            continue
        added = delta("N", u.bus, u.type_id)
        if added > 0.5:
            n = int(round(added))
            units.append((u.bus, u.tech or u.type_id, n,
                          n * u.unit_capacity_mw))
    ren = []
    for site in system.renewables:
        key = "PW" if site.kind == "wind" else "PV"
        added = delta(key, site.bus)
        if added > 1e-6:
            ren.append((site.bus, site.kind, added))
    sto = []
    if options.with_bes:
        for st in system.storage_types:
            added = delta("I", st.bus, st.type_id)
            if added > 0.5:
                n = int(round(added))
                sto.append((st.bus, st.type_id, n,
                            n * st.power_capacity_mw,
                            n * st.energy_capacity_mwh))
    return StageBuilds(s, tuple(lines), tuple(units), tuple(ren), tuple(sto))


def build_report(system: SystemData, values: dict,
                 options: BuildOptions | None = None, *,
                 method: str = "unspecified") -> PlanReport:
    opt = options or BuildOptions()
    eco = system.economics
    stages = range(1, eco.stage_count + 1)
    bd = evaluate_objective(system, values, opt)
    builds = tuple(_stage_builds(system, values, s, opt) for s in stages)
    tons = tuple(stage_emissions_tons(system, values, s) for s in stages)
    served = tuple(stage_served_energy_mwh(system, values, s) for s in stages)
    stage_cost = tuple(bd.stage_total(s) for s in stages)
    cum_cost = np.cumsum(stage_cost)
    cum_served = np.cumsum(served)
    cum_tons = np.cumsum(tons)
    lcoe = tuple(float(c / e) for c, e in zip(cum_cost, cum_served))
    factor = tuple(float(t / e) for t, e in zip(cum_tons, cum_served))
    shares = []
    for s in stages:
        e = stage_energy_by_source(system, values, s, opt)
        tot = e["served"]
        shares.append({k: e[k] / tot for k in ("thermal", "wind", "pv", "bes")})
    return PlanReport(
        name=system.name, instance_digest=system_digest(system), method=method,
        stage_count=eco.stage_count, builds=builds,
        invest_by_class={"lines": sum(bd.invest_lines),
                         "thermal": sum(bd.invest_units),
                         "renewables": sum(bd.invest_renewables),
                         "storage": sum(bd.invest_storage)},
        tc_inv=bd.tc_inv, tc_op=bd.tc_op, tc_maint=bd.tc_maint,
        tc_emission=bd.tc_emission, tc_total=bd.total,
        stage_cost=stage_cost, emissions_tons=tons, served_mwh=served,
        lcoe_cumulative=lcoe, emission_factor_cumulative=factor,
        shares=tuple(shares))


# ---------------------------------------------------------------------------
# rendering


def report_tables(report: PlanReport, system: SystemData, values: dict,
                  options: BuildOptions | None = None,
                  dispatch_stage: int | None = None) -> dict:
    """All delimited outputs as filename -> text."""
    opt = options or BuildOptions()
    plan = [("stage", "asset", "location", "detail", "quantity", "mw", "mwh")]
    for sb in report.builds:
        for lid, fb, tb, n in sb.lines:
            plan.append((sb.stage, "line", f"{fb}-{tb}", f"l{lid}", n, "", ""))
        for bus, tech, n, mw in sb.units:
            plan.append((sb.stage, "thermal", bus, tech, n, mw, ""))
        for bus, kind, mw in sb.renewables:
            plan.append((sb.stage, kind, bus, "", "", mw, ""))
        for bus, tid, n, mw, mwh in sb.storage:
            plan.append((sb.stage, "bes", bus, tid, n, mw, mwh))
    costs = [("component", "value")]
    for cls, val in sorted(report.invest_by_class.items()):
        costs.append((f"invest_{cls}", val))
    costs += [("tc_inv", report.tc_inv), ("tc_op", report.tc_op),
              ("tc_maint", report.tc_maint), ("tc_emission", report.tc_emission),
              ("tc_total", report.tc_total)]
    traj = [("stage", "cost", "emissions_tons", "served_mwh",
             "lcoe_cumulative", "emission_factor_cumulative")]
    for i in range(report.stage_count):
        traj.append((i + 1, report.stage_cost[i], report.emissions_tons[i],
                     report.served_mwh[i], report.lcoe_cumulative[i],
                     report.emission_factor_cumulative[i]))
    shares = [("stage", "thermal", "wind", "pv", "bes")]
    for i, sh in enumerate(report.shares):
        shares.append((i + 1, sh["thermal"], sh["wind"], sh["pv"], sh["bes"]))
    out = {"plan.csv": _csv(plan), "costs.csv": _csv(costs),
           "trajectories.csv": _csv(traj), "shares.csv": _csv(shares)}
    stage = dispatch_stage or report.stage_count
    stack = dispatch_stack(system, values, stage, opt)
    disp = [("hour", "weight", "load_mw", "thermal", "wind", "pv",
             "bes_discharge", "bes_charge", "shed")]
    for row in stack:
        disp.append(tuple(row[k] for k in disp[0]))
    out[f"dispatch_stage{stage}.csv"] = _csv(disp)
    return out


def report_document(report: PlanReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA,
        "instance": report.name,
        "instance_digest": report.instance_digest,
        "method": report.method,
        "stage_count": report.stage_count,
        "builds": [{"stage": sb.stage, "lines": [list(x) for x in sb.lines],
                    "units": [list(x) for x in sb.units],
                    "renewables": [list(x) for x in sb.renewables],
                    "storage": [list(x) for x in sb.storage]}
                   for sb in report.builds],
        "invest_by_class": dict(sorted(report.invest_by_class.items())),
        "tc_inv": report.tc_inv, "tc_op": report.tc_op,
        "tc_maint": report.tc_maint, "tc_emission": report.tc_emission,
        "tc_total": report.tc_total,
        "stage_cost": list(report.stage_cost),
        "emissions_tons": list(report.emissions_tons),
        "served_mwh": list(report.served_mwh),
        "lcoe_cumulative": list(report.lcoe_cumulative),
        "emission_factor_cumulative": list(report.emission_factor_cumulative),
        "shares": list(report.shares),
    }


def write_report(report: PlanReport, system: SystemData, values: dict,
                 outdir, options: BuildOptions | None = None,
                 dispatch_stage: int | None = None) -> list:
    """Write report.json plus every delimited table; returns written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    doc = report_document(report)
    p = outdir / "report.json"
    p.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    written.append(p)
    for fname, text in report_tables(report, system, values, options,
                                     dispatch_stage).items():
        p = outdir / fname
        p.write_text(text)
        written.append(p)
    return written


def write_trace(trace: list, path) -> None:
    """Convergence trace, one record per iteration."""
    rows = [("iteration", "lower_bound", "upper_bound", "gap", "cut_type",
             "master_nodes")]
    for r in trace:
        rows.append((r.iteration, r.lower_bound, r.upper_bound, r.gap,
                     r.cut_type, r.master_nodes))
    Path(path).write_text(_csv(rows))


def format_plan_text(report: PlanReport) -> str:
    """Human-readable plan summary."""
    lines = [f"instance {report.name}  method {report.method}",
             f"total cost {report.tc_total:,.2f} $  "
             f"(invest {report.tc_inv:,.2f}, operation {report.tc_op:,.2f}, "
             f"maintenance {report.tc_maint:,.2f}, "
             f"emission {report.tc_emission:,.2f})"]
    for sb in report.builds:
        parts = []
        for lid, fb, tb, n in sb.lines:
            parts.append(f"line {fb}-{tb} x{n}")
        for bus, tech, n, mw in sb.units:
            parts.append(f"{tech} at bus {bus} x{n} ({mw:g} MW)")
        for bus, kind, mw in sb.renewables:
            parts.append(f"{kind} at bus {bus} ({mw:g} MW)")
        for bus, tid, n, mw, mwh in sb.storage:
            parts.append(f"bes {tid} at bus {bus} x{n} ({mw:g} MW / {mwh:g} MWh)")
        lines.append(f"stage {sb.stage}: " + ("; ".join(parts) or "no builds"))
    for i in range(report.stage_count):
        lines.append(
            f"stage {i + 1}: emissions {report.emissions_tons[i]:,.1f} t, "
            f"served {report.served_mwh[i]:,.1f} MWh, "
            f"lcoe {report.lcoe_cumulative[i]:.4f} $/MWh, "
            f"factor {report.emission_factor_cumulative[i]:.6f} t/MWh")
    return "\n".join(lines) + "\n"

"""Bundled study instances: small, deterministic planning problems.

Each instance is a plain document in the loader schema, sized so the
monolithic search, both decomposition modes and exhaustive enumeration of
the build combinations all finish quickly. Together they exercise every
modelled feature: circuit and corridor builds, thermal slots, renewable
capacity, storage scheduling, shedding, curtailment, reserve floors, ramp
limits, the renewable quota and the emission price toggle.
"""

from __future__ import annotations

import json
from pathlib import Path

from .system import SystemData, build_system

# four-hour prototype day: night, morning, peak, evening
HOURS4 = [
    {"load_factor": 0.60, "wind_factor": 0.55, "pv_factor": 0.00, "weight": 0.25},
    {"load_factor": 0.82, "wind_factor": 0.30, "pv_factor": 0.60, "weight": 0.25},
    {"load_factor": 1.00, "wind_factor": 0.25, "pv_factor": 0.45, "weight": 0.25},
    {"load_factor": 0.74, "wind_factor": 0.50, "pv_factor": 0.05, "weight": 0.25},
]

HOURS6 = [
    {"load_factor": 0.55, "wind_factor": 0.62, "pv_factor": 0.00, "weight": 0.20},
    {"load_factor": 0.68, "wind_factor": 0.45, "pv_factor": 0.25, "weight": 0.15},
    {"load_factor": 0.88, "wind_factor": 0.28, "pv_factor": 0.62, "weight": 0.15},
    {"load_factor": 1.00, "wind_factor": 0.22, "pv_factor": 0.50, "weight": 0.20},
    {"load_factor": 0.90, "wind_factor": 0.35, "pv_factor": 0.12, "weight": 0.15},
    {"load_factor": 0.64, "wind_factor": 0.58, "pv_factor": 0.00, "weight": 0.15},
]


def _unit(bus, type_id, tech, cap, fuel, existing=0, slots=0, invest=0.0,
          maint=0.0, emission=0.3, ramp=None, frsr=None, reserve_cost=5.0,
          segments=None):
    ramp = cap if ramp is None else ramp
    frsr = 0.25 * cap if frsr is None else frsr
    return {
        "bus": bus, "type_id": type_id, "tech": tech,
        "unit_capacity_mw": cap,
        "segments": segments or [{"fuel_price": fuel, "heat_rate": 10.0}],
        "existing_count": existing, "candidate_slots": slots,
        "invest_cost": invest, "maint_cost": maint, "emission_rate": emission,
        "ramp_up_mw": ramp, "ramp_down_mw": ramp,
        "frsr_up_max_mw": frsr, "frsr_dn_max_mw": frsr,
        "reserve_cost": reserve_cost,
    }


def _line(id, f, t, b, cap, existing=True, slots=1, length=30.0,
          invest_km=0.2, row_km=0.04, substation=2.0, new_corridor=None):
    doc = {"id": id, "from_bus": f, "to_bus": t, "susceptance_pu": b,
           "capacity_mw": cap, "is_existing": existing}
    if not existing:
        doc.update({"corridor_slots": slots, "length_km": length,
                    "invest_cost_per_km": invest_km, "row_cost_per_km": row_km,
                    "substation_cost": substation,
                    "is_new_corridor": (True if new_corridor is None
                                        else new_corridor)})
    return doc


def _base(name, stages=1, growth=0.0, hours=HOURS4, interest=0.06):
    return {
        "schema_version": 1,
        "name": name,
        "economics": {"interest_rate": interest, "stage_count": stages,
                      "years_per_stage": 2, "load_growth": growth},
        "buses": [], "lines": [], "thermal_units": [], "renewables": [],
        "storage_types": [],
        "policy": {"reserve_margin": 0.0, "rps_fraction": 0.0,
                   "frsr_res_frac": 0.05, "frsr_load_frac": 0.03,
                   "ramp_window_min": 10.0},
        "timeseries": {"representative": list(hours)},
    }


def _wire() -> dict:
    # one candidate circuit is the only way to reach the load pocket
    doc = _base("wire")
    doc["buses"] = [{"id": 1, "peak_load_mw": 50.0}, {"id": 2, "peak_load_mw": 45.0}]
    doc["lines"] = [
        _line(1, 1, 2, 5.0, 30.0),
        _line(2, 1, 2, 5.0, 60.0, existing=False, length=25.0, new_corridor=False),
    ]
    doc["thermal_units"] = [
        _unit(1, "steam", "steam", 120.0, 2.0, existing=1, reserve_cost=4.0),
    ]
    return doc


def _wire2() -> dict:
    # two identical candidate circuits on one corridor, both needed at peak
    doc = _base("wire2")
    doc["buses"] = [{"id": 1, "peak_load_mw": 30.0}, {"id": 2, "peak_load_mw": 80.0}]
    doc["lines"] = [
        _line(1, 1, 2, 4.0, 28.0),
        _line(2, 1, 2, 4.0, 30.0, existing=False, slots=2, length=25.0),
    ]
    doc["thermal_units"] = [
        _unit(1, "steam", "steam", 140.0, 2.2, existing=1, reserve_cost=4.0),
    ]
    return doc


def _gens() -> dict:
    # invest-vs-fuel tradeoff between two candidate technologies
    doc = _base("gens")
    doc["buses"] = [{"id": 1, "peak_load_mw": 70.0}, {"id": 2, "peak_load_mw": 50.0}]
    doc["lines"] = [_line(1, 1, 2, 6.0, 90.0)]
    doc["thermal_units"] = [
        _unit(1, "old", "steam", 70.0, 3.2, existing=1, emission=0.5),
        _unit(1, "coal", "coal", 60.0, 1.6, slots=1, invest=0.9, maint=0.6,
              emission=0.8),
        _unit(2, "gas", "gas", 60.0, 3.0, slots=1, invest=0.45, maint=0.4,
              emission=0.35),
    ]
    doc["policy"]["reserve_margin"] = 0.15
    return doc


def _mix() -> dict:
    # renewable quota pulls wind in; the network choice decides where
    doc = _base("mix")
    doc["buses"] = [{"id": 1, "peak_load_mw": 60.0}, {"id": 2, "peak_load_mw": 35.0},
                    {"id": 3, "peak_load_mw": 0.0, "is_expansion_bus": True}]
    doc["lines"] = [
        _line(1, 1, 2, 6.0, 70.0),
        _line(2, 1, 3, 5.0, 60.0, existing=False, length=35.0),
        _line(3, 2, 3, 5.0, 60.0, existing=False, length=28.0),
    ]
    doc["thermal_units"] = [
        _unit(1, "steam", "steam", 110.0, 2.4, existing=1, slots=1,
              invest=0.7, maint=0.5),
    ]
    doc["renewables"] = [
        {"bus": 3, "kind": "wind", "cap_max_mw": 80.0, "invest_cost": 1.0,
         "maint_cost": 0.02},
    ]
    doc["policy"].update({"rps_fraction": 0.20, "wind_curtail_frac": 0.5,
                          "curtail_penalty": 40.0})
    return doc


def _bess() -> dict:
    # storage shifts cheap off-peak output into the peak
    doc = _base("bess")
    doc["buses"] = [{"id": 1, "peak_load_mw": 55.0}, {"id": 2, "peak_load_mw": 30.0}]
    doc["lines"] = [_line(1, 1, 2, 7.0, 80.0)]
    doc["thermal_units"] = [
        _unit(1, "base", "steam", 70.0, 1.5, existing=1, ramp=18.0, frsr=18.0),
        _unit(2, "peak", "gas", 40.0, 7.5, existing=1, emission=0.4),
    ]
    doc["storage_types"] = [
        {"bus": 2, "type_id": "bat", "energy_capacity_mwh": 60.0,
         "power_capacity_mw": 25.0, "energy_cost": 1.2e5, "power_cost": 6.0e4,
         "degradation_cost": 5.0, "eta_charge": 0.9, "eta_discharge": 0.9},
    ]
    return doc


def _shed() -> dict:
    # undersupplied pocket: shedding is allowed, capped per hour and stage
    doc = _base("shed")
    doc["buses"] = [{"id": 1, "peak_load_mw": 40.0}, {"id": 2, "peak_load_mw": 70.0}]
    doc["lines"] = [
        # parallel circuits share flow evenly, so the corridor moves 64 MW
        # at most and the peak hour must shed inside the 10 percent cap
        _line(1, 1, 2, 5.0, 40.0),
        _line(2, 1, 2, 5.0, 32.0, existing=False, length=20.0, new_corridor=False),
    ]
    doc["thermal_units"] = [
        _unit(1, "steam", "steam", 125.0, 2.0, existing=1),
    ]
    doc["policy"].update({"shed_gamma": 0.10, "shed_phi": 0.03,
                          "shed_penalty": 1000.0})
    return doc


def _curtail() -> dict:
    # wind pocket behind a weak corridor; spill is priced and capped
    doc = _base("curtail")
    doc["buses"] = [{"id": 1, "peak_load_mw": 75.0}, {"id": 2, "peak_load_mw": 0.0,
                    "is_expansion_bus": True}]
    doc["lines"] = [
        _line(1, 1, 2, 5.0, 30.0),
        _line(2, 1, 2, 5.0, 35.0, existing=False, length=22.0, new_corridor=False),
    ]
    doc["thermal_units"] = [
        _unit(1, "steam", "steam", 90.0, 3.4, existing=1),
    ]
    doc["renewables"] = [
        {"bus": 2, "kind": "wind", "cap_max_mw": 70.0, "invest_cost": 0.9,
         "maint_cost": 0.02},
    ]
    doc["policy"].update({"rps_fraction": 0.25, "wind_curtail_frac": 0.5,
                          "curtail_penalty": 30.0})
    return doc


def _threebus() -> dict:
    # two stages of load growth: builds must persist once made
    doc = _base("threebus", stages=2, growth=0.25)
    doc["buses"] = [{"id": 1, "peak_load_mw": 65.0}, {"id": 2, "peak_load_mw": 45.0},
                    {"id": 3, "peak_load_mw": 25.0}]
    doc["lines"] = [
        _line(1, 1, 2, 6.0, 60.0),
        _line(2, 2, 3, 6.0, 45.0),
        _line(3, 1, 3, 5.0, 55.0, existing=False, length=30.0),
        _line(4, 2, 3, 5.0, 45.0, existing=False, length=26.0, new_corridor=False),
    ]
    doc["thermal_units"] = [
        _unit(1, "steam", "steam", 180.0, 2.1, existing=1),
        _unit(3, "gas", "gas", 55.0, 3.1, slots=1, invest=0.5, maint=0.4,
              emission=0.35),
    ]
    doc["policy"]["reserve_margin"] = 0.10
    return doc


def _frsr() -> dict:
    # steep intra-day swings force ramp reserve procurement
    doc = _base("frsr", hours=HOURS6)
    doc["buses"] = [{"id": 1, "peak_load_mw": 80.0}, {"id": 2, "peak_load_mw": 40.0}]
    doc["lines"] = [_line(1, 1, 2, 7.0, 90.0)]
    doc["thermal_units"] = [
        _unit(1, "slow", "steam", 90.0, 1.8, existing=1, ramp=15.0, frsr=10.0),
        _unit(1, "fast", "gas", 45.0, 4.2, slots=1, invest=0.4, maint=0.3,
              ramp=45.0, frsr=30.0, emission=0.35),
        _unit(2, "mid", "gas", 40.0, 3.6, slots=1, invest=0.5, maint=0.35,
              ramp=28.0, frsr=20.0, emission=0.35),
    ]
    doc["renewables"] = [
        {"bus": 2, "kind": "wind", "cap_max_mw": 45.0, "invest_cost": 1.0,
         "maint_cost": 0.02},
    ]
    doc["policy"].update({"rps_fraction": 0.12, "frsr_res_frac": 0.08,
                          "frsr_load_frac": 0.04, "reserve_margin": 0.05})
    return doc


def _sixbus() -> dict:
    # widest network in the set: three candidate corridors, two unit slots
    doc = _base("sixbus", hours=HOURS6)
    doc["buses"] = [
        {"id": 1, "peak_load_mw": 55.0}, {"id": 2, "peak_load_mw": 40.0},
        {"id": 3, "peak_load_mw": 30.0}, {"id": 4, "peak_load_mw": 35.0},
        {"id": 5, "peak_load_mw": 0.0, "is_expansion_bus": True},
        {"id": 6, "peak_load_mw": 25.0},
    ]
    doc["lines"] = [
        _line(1, 1, 2, 6.0, 60.0),
        _line(2, 2, 3, 6.0, 50.0),
        _line(3, 3, 4, 6.0, 45.0),
        _line(4, 4, 6, 6.0, 40.0),
        _line(5, 1, 5, 5.0, 70.0, existing=False, length=34.0),
        _line(6, 5, 6, 5.0, 60.0, existing=False, length=30.0),
        _line(7, 2, 4, 5.0, 50.0, existing=False, length=26.0, new_corridor=False),
    ]
    doc["thermal_units"] = [
        _unit(1, "steam", "steam", 130.0, 2.0, existing=1),
        _unit(4, "gas4", "gas", 60.0, 3.2, slots=1, invest=0.5, maint=0.4,
              emission=0.35),
        _unit(6, "gas6", "gas", 50.0, 3.5, slots=1, invest=0.45, maint=0.35,
              emission=0.35),
    ]
    doc["renewables"] = [
        {"bus": 5, "kind": "wind", "cap_max_mw": 60.0, "invest_cost": 1.0,
         "maint_cost": 0.02},
        {"bus": 3, "kind": "pv", "cap_max_mw": 40.0, "invest_cost": 0.8,
         "maint_cost": 0.015},
    ]
    doc["policy"].update({"rps_fraction": 0.15, "reserve_margin": 0.08,
                          "wind_curtail_frac": 0.6, "curtail_penalty": 35.0})
    return doc


def _lcp() -> dict:
    # uniform emission price flips the merit order toward the cleaner slot
    doc = _base("lcp")
    doc["buses"] = [{"id": 1, "peak_load_mw": 60.0}, {"id": 2, "peak_load_mw": 45.0},
                    {"id": 3, "peak_load_mw": 20.0}]
    doc["lines"] = [
        _line(1, 1, 2, 6.0, 70.0),
        _line(2, 2, 3, 6.0, 50.0),
        _line(3, 1, 3, 6.0, 45.0),
    ]
    emission_price = 25.0
    doc["thermal_units"] = [
        _unit(1, "old", "steam", 75.0, 2.6, existing=1, emission=0.55,
              segments=[{"fuel_price": 2.6, "heat_rate": 10.0,
                         "emission_price": emission_price}]),
        _unit(2, "coal", "coal", 60.0, 1.5, slots=1, invest=0.55, maint=0.5,
              emission=0.85,
              segments=[{"fuel_price": 1.5, "heat_rate": 10.0,
                         "emission_price": emission_price}]),
        _unit(3, "gas", "gas", 55.0, 2.9, slots=1, invest=0.6, maint=0.45,
              emission=0.30,
              segments=[{"fuel_price": 2.9, "heat_rate": 10.0,
                         "emission_price": emission_price}]),
    ]
    doc["policy"]["reserve_margin"] = 0.12
    return doc


def _rps2() -> dict:
    # the quota share ramps with the stage index unless read as constant
    doc = _base("rps2", stages=2, growth=0.15)
    doc["buses"] = [{"id": 1, "peak_load_mw": 70.0}, {"id": 2, "peak_load_mw": 30.0}]
    doc["lines"] = [_line(1, 1, 2, 7.0, 85.0)]
    doc["thermal_units"] = [
        _unit(1, "steam", "steam", 105.0, 2.2, existing=1),
        _unit(2, "gas", "gas", 45.0, 3.4, slots=1, invest=0.5, maint=0.4,
              emission=0.35),
    ]
    doc["renewables"] = [
        {"bus": 2, "kind": "wind", "cap_max_mw": 70.0, "invest_cost": 1.05,
         "maint_cost": 0.02},
        {"bus": 1, "kind": "pv", "cap_max_mw": 45.0, "invest_cost": 0.85,
         "maint_cost": 0.015},
    ]
    doc["policy"].update({"rps_fraction": 0.30, "reserve_margin": 0.10})
    return doc


def _storagegrow() -> dict:
    # storage installs staged against growing evening peaks
    doc = _base("storagegrow", stages=2, growth=0.20)
    doc["buses"] = [{"id": 1, "peak_load_mw": 50.0}, {"id": 2, "peak_load_mw": 35.0}]
    doc["lines"] = [_line(1, 1, 2, 6.0, 70.0)]
    doc["thermal_units"] = [
        _unit(1, "base", "steam", 95.0, 1.7, existing=1, ramp=24.0, frsr=18.0),
        _unit(2, "peak", "gas", 35.0, 8.0, existing=1, emission=0.4),
    ]
    doc["storage_types"] = [
        {"bus": 2, "type_id": "bat", "energy_capacity_mwh": 50.0,
         "power_capacity_mw": 20.0, "energy_cost": 1.0e5, "power_cost": 5.0e4,
         "degradation_cost": 5.0, "eta_charge": 0.9, "eta_discharge": 0.9},
    ]
    return doc


_BUILDERS = {
    "wire": _wire,
    "wire2": _wire2,
    "gens": _gens,
    "mix": _mix,
    "bess": _bess,
    "shed": _shed,
    "curtail": _curtail,
    "threebus": _threebus,
    "frsr": _frsr,
    "sixbus": _sixbus,
    "lcp": _lcp,
    "rps2": _rps2,
    "storagegrow": _storagegrow,
}

CORPUS_NAMES = tuple(_BUILDERS)


def instance_doc(name: str) -> dict:
    """The raw document of a bundled instance."""
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown instance {name!r}; have {', '.join(CORPUS_NAMES)}")


def load_instance(name: str) -> SystemData:
    return build_system(instance_doc(name))


def write_corpus(directory, names=None) -> list:
    """Write instance documents as JSON files; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in (names or CORPUS_NAMES):
        path = directory / f"{name}.json"
        path.write_text(json.dumps(instance_doc(name), indent=2) + "\n")
        paths.append(path)
    return paths

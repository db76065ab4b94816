"""Shared document builders for the test suite."""

import copy

import numpy as np
import pytest

from gridplan.system import build_system


def synthetic_profile(seed: int) -> np.ndarray:
    """One year of plausible (load, wind, pv) factors, 8760 x 3."""
    r = np.random.default_rng(seed)
    h = np.arange(8760)
    lf = (0.65 + 0.25 * np.sin(2 * np.pi * (h % 24 - 7) / 24)
          + 0.05 * np.sin(2 * np.pi * h / 8760) + r.normal(0, .02, 8760))
    wf = np.clip(0.5 + 0.4 * np.sin(2 * np.pi * h / 53 + r.uniform(0, 6))
                 + r.normal(0, .08, 8760), 0, 1)
    pv = np.clip(np.sin(np.pi * ((h % 24) - 6) / 12), 0, None) \
        * (0.8 + r.normal(0, .05, 8760))
    return np.column_stack([lf, wf, np.clip(pv, 0, 1)])

# four representative hours, equal occurrence
FOUR_HOURS = [
    {"load_factor": 0.55, "wind_factor": 0.65, "pv_factor": 0.00, "weight": 0.25},
    {"load_factor": 0.80, "wind_factor": 0.35, "pv_factor": 0.70, "weight": 0.25},
    {"load_factor": 1.00, "wind_factor": 0.25, "pv_factor": 0.45, "weight": 0.25},
    {"load_factor": 0.70, "wind_factor": 0.55, "pv_factor": 0.10, "weight": 0.25},
]


def one_bus_doc(**overrides) -> dict:
    """Smallest valid instance: one bus, one existing thermal type."""
    doc = {
        "name": "one-bus",
        "economics": {"interest_rate": 0.05, "stage_count": 1},
        "buses": [{"id": 1, "peak_load_mw": 50.0}],
        "lines": [],
        "thermal_units": [{
            "bus": 1, "type_id": "steam", "tech": "steam",
            "unit_capacity_mw": 80.0, "existing_count": 1,
            "segments": [{"fuel_price": 2.0, "heat_rate": 10.0}],
        }],
        "renewables": [],
        "storage_types": [],
        "policy": {},
        "timeseries": {"representative": copy.deepcopy(FOUR_HOURS)},
    }
    doc.update(copy.deepcopy(overrides))
    return doc


def wire_doc(**overrides) -> dict:
    """Two buses, one existing circuit, one candidate circuit to price."""
    doc = {
        "name": "wire-test",
        "economics": {"interest_rate": 0.06, "stage_count": 1},
        "buses": [{"id": 1, "peak_load_mw": 30.0}, {"id": 2, "peak_load_mw": 60.0}],
        "lines": [
            {"id": 1, "from_bus": 1, "to_bus": 2, "susceptance_pu": 5.0,
             "capacity_mw": 45.0},
            {"id": 2, "from_bus": 1, "to_bus": 2, "susceptance_pu": 5.0,
             "capacity_mw": 45.0, "is_existing": False, "length_km": 25.0,
             "invest_cost_per_km": 0.2, "row_cost_per_km": 0.04,
             "corridor_slots": 1},
        ],
        "thermal_units": [
            {"bus": 1, "type_id": "base", "tech": "steam",
             "unit_capacity_mw": 110.0, "existing_count": 1,
             "ramp_up_mw": 40.0, "ramp_down_mw": 40.0,
             "frsr_up_max_mw": 30.0, "frsr_dn_max_mw": 30.0,
             "reserve_cost": 4.0, "emission_rate": 0.3,
             "segments": [{"fuel_price": 1.6, "heat_rate": 9.5}]},
            {"bus": 2, "type_id": "peak", "tech": "gas",
             "unit_capacity_mw": 30.0, "existing_count": 1,
             "emission_rate": 0.45,
             "segments": [{"fuel_price": 6.5, "heat_rate": 10.5}]},
        ],
        "renewables": [],
        "storage_types": [],
        "policy": {},
        "timeseries": {"representative": copy.deepcopy(FOUR_HOURS)},
    }
    doc.update(copy.deepcopy(overrides))
    return doc


@pytest.fixture
def one_bus_system():
    return build_system(one_bus_doc())


@pytest.fixture
def wire_system():
    return build_system(wire_doc())

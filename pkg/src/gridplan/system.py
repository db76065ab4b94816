"""Planning-instance data model: schema types, loading, validation, economics.

An instance bundles the network (buses, existing lines, candidate corridors),
thermal unit types with piecewise-linear fuel segments, renewable candidate
sites, battery storage candidates, policy parameters and either a full hourly
year or a pre-reduced representative-hour set.

Monetary conventions follow the source data: line, thermal and renewable
investment costs are quoted in 10^6 $ per unit (km, MW), storage investment
in plain $/MWh and $/MW, operating costs in $ per MWh or MW-year. Stages last
two years; investment charges discount to the first year of a stage and
operating charges to the second.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .rephours import RepresentativeSet, read_representative_set

DEFAULT_LIFETIMES = {"line": 40.0, "gen": 30.0, "wind": 25.0, "pv": 25.0, "storage": 15.0}


class InstanceError(ValueError):
    """Base error for malformed planning instances."""


class InstanceParseError(InstanceError):
    pass


class InstanceReferenceError(InstanceError):
    pass


class InstanceDomainError(InstanceError):
    pass


# ---------------------------------------------------------------------------
# economics factors


def annuity_factor(interest_rate: float, lifetime_years: float) -> float:
    """Capital recovery factor i(1+i)^T / ((1+i)^T - 1).

    Converts a lump investment into the equivalent annual charge over the
    asset lifetime. Tends to the bare interest rate as T grows and to a
    one-year payoff (1+i) at T=1.
    """
    if interest_rate <= 0.0:
        raise ValueError("interest_rate must be positive")
    if lifetime_years < 1.0:
        raise ValueError("lifetime_years must be at least 1")
    growth = (1.0 + interest_rate) ** lifetime_years
    return interest_rate * growth / (growth - 1.0)


def stage_discount(stage: int, interest_rate: float, kind: str,
                   stage_count: int | None = None) -> float:
    """Present-worth multiplier of a two-year stage.

    ``kind="investment"`` discounts to the stage's first year, 2/(1+i)^(2s-1);
    ``kind="operation"`` (also used for maintenance and emission charges)
    discounts to the second year, 2/(1+i)^(2s). The leading 2 carries the
    per-year amount over both years of the stage.
    """
    if stage < 1 or (stage_count is not None and stage > stage_count):
        raise ValueError(f"stage {stage} outside the planning horizon")
    if kind == "investment":
        exponent = 2 * stage - 1
    elif kind == "operation":
        exponent = 2 * stage
    else:
        raise ValueError(f"unknown discount kind {kind!r}")
    return 2.0 / (1.0 + interest_rate) ** exponent


def stage_load_factor(stage: int, load_growth: float) -> float:
    """Cumulative demand growth multiplier (1+LG)^s applied to peak loads."""
    if stage < 1:
        raise ValueError("stage must be at least 1")
    return (1.0 + load_growth) ** stage


# ---------------------------------------------------------------------------
# schema types


@dataclass(frozen=True)
class EconomicParams:
    interest_rate: float
    stage_count: int
    years_per_stage: int = 2
    load_growth: float = 0.0          # per-stage fractional demand growth
    base_power_mva: float = 100.0     # per-unit power base for susceptances
    lifetimes: dict = field(default_factory=lambda: dict(DEFAULT_LIFETIMES))

    def discount(self, stage: int, kind: str) -> float:
        return stage_discount(stage, self.interest_rate, kind, self.stage_count)

    def load_factor(self, stage: int) -> float:
        return stage_load_factor(stage, self.load_growth)


@dataclass(frozen=True)
class Bus:
    id: int
    peak_load_mw: float = 0.0
    is_expansion_bus: bool = False


@dataclass(frozen=True)
class Line:
    """One corridor entry: an existing circuit group or a candidate corridor."""

    id: int
    from_bus: int
    to_bus: int
    susceptance_pu: float
    capacity_mw: float                  # per-circuit flow limit
    is_existing: bool = True
    length_km: float = 0.0
    invest_cost_per_km: float = 0.0     # conductor cost, 10^6 $/km
    row_cost_per_km: float = 0.0        # right-of-way cost, 10^6 $/km
    substation_cost: float = 0.0        # 10^6 $, first circuit of a new corridor
    corridor_slots: int = 1             # candidate circuits available
    is_new_corridor: bool = False       # substation charge applies at slot 1


@dataclass(frozen=True)
class FuelSegment:
    fuel_price: float                   # $/MBtu
    heat_rate: float                    # MBtu/MWh incremental
    emission_price: float = 0.0         # $/ton CO2 charged against this segment

    @property
    def energy_cost(self) -> float:
        """Incremental fuel cost in $/MWh."""
        return self.fuel_price * self.heat_rate


@dataclass(frozen=True)
class ThermalUnitType:
    """A thermal unit class at one bus: existing fleet plus candidate slots."""

    bus: int
    type_id: str
    unit_capacity_mw: float
    segments: tuple[FuelSegment, ...]
    tech: str = ""                      # technology class for mix constraints
    existing_count: int = 0
    candidate_slots: int = 0
    per_stage_build_limit: int | None = None   # max new units per stage
    invest_cost: float = 0.0            # 10^6 $/MW
    maint_cost: float = 0.0             # $/MW-year
    emission_rate: float = 0.0          # ton/MWh
    ramp_up_mw: float = 1e6             # hourly ramp limit of the cluster, MW/h
    ramp_down_mw: float = 1e6
    frsr_up_max_mw: float = 0.0         # hourly up-reserve ceiling of the cluster
    frsr_dn_max_mw: float = 0.0
    reserve_cost: float = 0.0           # $/MWh on held up- plus down-reserve
    lifetime_years: float | None = None

    @property
    def key(self) -> tuple:
        return (self.bus, self.type_id)

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def build_limit(self) -> int:
        limit = self.per_stage_build_limit
        return self.candidate_slots if limit is None else limit


@dataclass(frozen=True)
class RenewableSite:
    bus: int
    kind: str                           # "wind" or "pv"
    cap_max_mw: float
    invest_cost: float = 0.0            # 10^6 $/MW
    maint_cost: float = 0.0             # $/MW-year
    lifetime_years: float | None = None


@dataclass(frozen=True)
class StorageType:
    """A battery storage candidate of fixed block size at one bus."""

    bus: int
    type_id: str
    energy_capacity_mwh: float
    power_capacity_mw: float
    energy_cost: float = 0.0            # $/MWh of energy capacity
    power_cost: float = 0.0             # $/MW of power capacity
    degradation_cost: float = 0.0       # $/MWh discharged
    eta_charge: float = 0.9
    eta_discharge: float = 0.9
    lifetime_years: float | None = None

    @property
    def key(self) -> tuple:
        return (self.bus, self.type_id)


@dataclass(frozen=True)
class PolicyParams:
    rps_fraction: float = 0.0           # final-stage renewable energy share
    wind_curtail_frac: float = 1.0      # cap on curtailed share of wind energy
    shed_gamma: float = 0.0             # per-bus-hour shed cap fraction
    shed_phi: float = 0.0               # per-stage shed energy cap fraction
    reserve_margin: float = 0.0         # planning reserve on grown peak load
    frsr_res_frac: float = 0.05         # renewable share of the hourly flex floor
    frsr_load_frac: float = 0.03        # load share of the hourly flex floor
    ramp_window_min: float = 10.0       # minutes a flex reserve must deliver in
    shed_penalty: dict = field(default_factory=dict)     # bus -> $/MWh
    curtail_penalty: dict = field(default_factory=dict)  # bus -> $/MWh
    shed_penalty_default: float = 1000.0
    curtail_penalty_default: float = 1000.0
    mix_min: dict = field(default_factory=dict)  # tech -> per-stage floor share
    mix_max: dict = field(default_factory=dict)  # tech -> per-stage cap share

    def shed_price(self, bus: int) -> float:
        return self.shed_penalty.get(bus, self.shed_penalty_default)

    def curtail_price(self, bus: int) -> float:
        return self.curtail_penalty.get(bus, self.curtail_penalty_default)


@dataclass(frozen=True)
class HourlySeries:
    load_factor: np.ndarray
    wind_factor: np.ndarray
    pv_factor: np.ndarray

    @property
    def n_hours(self) -> int:
        return len(self.load_factor)

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.load_factor, self.wind_factor, self.pv_factor])


@dataclass(frozen=True)
class SystemData:
    name: str
    economics: EconomicParams
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    thermal_units: tuple[ThermalUnitType, ...]
    renewables: tuple[RenewableSite, ...]
    storage_types: tuple[StorageType, ...]
    policy: PolicyParams
    timeseries: object                  # HourlySeries or RepresentativeSet
    digest: str = ""

    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def bus(self, bus_id: int) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise KeyError(f"unknown bus {bus_id}")

    def existing_lines(self) -> list[Line]:
        return [ln for ln in self.lines if ln.is_existing]

    def candidate_lines(self) -> list[Line]:
        return [ln for ln in self.lines if not ln.is_existing]

    def wind_sites(self) -> list[RenewableSite]:
        return [r for r in self.renewables if r.kind == "wind"]

    def pv_sites(self) -> list[RenewableSite]:
        return [r for r in self.renewables if r.kind == "pv"]

    def tech_classes(self) -> list[str]:
        seen: list[str] = []
        for u in self.thermal_units:
            tech = u.tech or u.type_id
            if tech not in seen:
                seen.append(tech)
        return seen

    def tech_matrix(self) -> dict:
        """Indicator (bus, type_id, tech) -> 1 for each unit's technology class."""
        return {(u.bus, u.type_id, u.tech or u.type_id): 1 for u in self.thermal_units}

    def unit_lifetime(self, unit: ThermalUnitType) -> float:
        if unit.lifetime_years is not None:
            return unit.lifetime_years
        return self.economics.lifetimes.get("gen", DEFAULT_LIFETIMES["gen"])

    def site_lifetime(self, site: RenewableSite) -> float:
        if site.lifetime_years is not None:
            return site.lifetime_years
        return self.economics.lifetimes.get(site.kind, DEFAULT_LIFETIMES[site.kind])

    def storage_lifetime(self, st: StorageType) -> float:
        if st.lifetime_years is not None:
            return st.lifetime_years
        return self.economics.lifetimes.get("storage", DEFAULT_LIFETIMES["storage"])

    def line_lifetime(self, ln: Line) -> float:
        return self.economics.lifetimes.get("line", DEFAULT_LIFETIMES["line"])


# ---------------------------------------------------------------------------
# validation


def _check(violations: list, ok: bool, entity: str, message: str) -> None:
    if not ok:
        violations.append(f"{entity}: {message}")


def validate(system: SystemData) -> list[str]:
    """Structural invariant check; returns one message per violation."""
    v: list[str] = []
    eco = system.economics
    _check(v, eco.interest_rate > 0, "economics", "interest_rate must be positive")
    _check(v, eco.stage_count >= 1, "economics", "stage_count must be at least 1")
    _check(v, eco.years_per_stage == 2, "economics",
           "years_per_stage must be 2 (discount factors assume two-year stages)")
    _check(v, eco.load_growth >= 0, "economics", "load_growth must be nonnegative")
    _check(v, eco.base_power_mva > 0, "economics", "base_power_mva must be positive")
    for key, years in eco.lifetimes.items():
        _check(v, years >= 1, f"economics.lifetimes[{key}]", "lifetime must be >= 1 year")

    ids = system.bus_ids()
    _check(v, len(ids) == len(set(ids)), "buses", "bus ids must be unique")
    _check(v, len(ids) >= 1, "buses", "at least one bus required")
    for b in system.buses:
        _check(v, b.peak_load_mw >= 0, f"bus[{b.id}]", "peak_load_mw must be nonnegative")

    known = set(ids)
    line_ids = [ln.id for ln in system.lines]
    _check(v, len(line_ids) == len(set(line_ids)), "lines", "line ids must be unique")
    for ln in system.lines:
        ent = f"line[{ln.id}]"
        _check(v, ln.from_bus in known and ln.to_bus in known, ent, "endpoint bus unknown")
        _check(v, ln.from_bus != ln.to_bus, ent, "endpoints must differ")
        _check(v, ln.susceptance_pu > 0, ent, "susceptance_pu must be positive")
        _check(v, ln.capacity_mw > 0, ent, "capacity_mw must be positive")
        _check(v, ln.corridor_slots >= 1, ent, "corridor_slots must be at least 1")
        if not ln.is_existing:
            _check(v, ln.length_km >= 0, ent, "length_km must be nonnegative")

    unit_keys = [u.key for u in system.thermal_units]
    _check(v, len(unit_keys) == len(set(unit_keys)), "thermal_units",
           "(bus, type_id) must be unique")
    for u in system.thermal_units:
        ent = f"unit[{u.bus},{u.type_id}]"
        _check(v, u.bus in known, ent, "bus unknown")
        _check(v, u.unit_capacity_mw > 0, ent, "unit_capacity_mw must be positive")
        _check(v, u.existing_count >= 0, ent, "existing_count must be nonnegative")
        _check(v, u.candidate_slots >= 0, ent, "candidate_slots must be nonnegative")
        _check(v, u.existing_count + u.candidate_slots >= 1, ent,
               "unit type must have existing units or candidate slots")
        _check(v, u.n_segments >= 1, ent, "at least one fuel segment required")
        _check(v, u.build_limit >= 0, ent, "per_stage_build_limit must be nonnegative")
        _check(v, u.build_limit <= u.candidate_slots, ent,
               "per_stage_build_limit must not exceed candidate_slots")
        _check(v, u.emission_rate >= 0, ent, "emission_rate must be nonnegative")
        _check(v, u.ramp_up_mw >= 0 and u.ramp_down_mw >= 0, ent,
               "ramp limits must be nonnegative")
        _check(v, u.frsr_up_max_mw >= 0 and u.frsr_dn_max_mw >= 0, ent,
               "reserve ceilings must be nonnegative")
        _check(v, u.reserve_cost >= 0 and u.maint_cost >= 0 and u.invest_cost >= 0,
               ent, "costs must be nonnegative")
        for p, seg in enumerate(u.segments, start=1):
            _check(v, seg.fuel_price >= 0 and seg.heat_rate >= 0 and seg.emission_price >= 0,
                   f"{ent}.segment[{p}]", "segment prices must be nonnegative")

    for r in system.renewables:
        ent = f"renewable[{r.bus},{r.kind}]"
        _check(v, r.bus in known, ent, "bus unknown")
        _check(v, r.kind in ("wind", "pv"), ent, "kind must be wind or pv")
        _check(v, r.cap_max_mw >= 0, ent, "cap_max_mw must be nonnegative")
        _check(v, r.invest_cost >= 0 and r.maint_cost >= 0, ent, "costs must be nonnegative")
    site_keys = [(r.bus, r.kind) for r in system.renewables]
    _check(v, len(site_keys) == len(set(site_keys)), "renewables",
           "(bus, kind) must be unique")

    st_keys = [s.key for s in system.storage_types]
    _check(v, len(st_keys) == len(set(st_keys)), "storage_types",
           "(bus, type_id) must be unique")
    for s in system.storage_types:
        ent = f"storage[{s.bus},{s.type_id}]"
        _check(v, s.bus in known, ent, "bus unknown")
        _check(v, 0 < s.eta_charge <= 1, ent, "eta_charge must be in (0, 1]")
        _check(v, 0 < s.eta_discharge <= 1, ent, "eta_discharge must be in (0, 1]")
        _check(v, s.energy_capacity_mwh > 0, ent, "energy_capacity_mwh must be positive")
        _check(v, s.power_capacity_mw > 0, ent, "power_capacity_mw must be positive")
        _check(v, s.energy_cost >= 0 and s.power_cost >= 0 and s.degradation_cost >= 0,
               ent, "costs must be nonnegative")

    pol = system.policy
    for label, val in (("rps_fraction", pol.rps_fraction),
                       ("wind_curtail_frac", pol.wind_curtail_frac),
                       ("shed_gamma", pol.shed_gamma),
                       ("shed_phi", pol.shed_phi)):
        _check(v, 0.0 <= val <= 1.0, f"policy.{label}", "must lie in [0, 1]")
    _check(v, pol.reserve_margin >= 0, "policy.reserve_margin", "must be nonnegative")
    _check(v, pol.frsr_res_frac >= 0 and pol.frsr_load_frac >= 0,
           "policy.frsr", "flex floor fractions must be nonnegative")
    _check(v, pol.ramp_window_min > 0, "policy.ramp_window_min", "must be positive")
    _check(v, pol.shed_penalty_default >= 0 and pol.curtail_penalty_default >= 0,
           "policy.penalties", "must be nonnegative")
    stages = eco.stage_count
    techs = set(system.tech_classes())
    for name, table in (("mix_min", pol.mix_min), ("mix_max", pol.mix_max)):
        for tech, per_stage in table.items():
            ent = f"policy.{name}[{tech}]"
            _check(v, tech in techs, ent, "unknown technology class")
            _check(v, len(per_stage) == stages, ent,
                   f"needs one share per stage ({stages})")
            _check(v, all(0.0 <= x <= 1.0 for x in per_stage), ent,
                   "shares must lie in [0, 1]")
    for tech in set(pol.mix_min) & set(pol.mix_max):
        if len(pol.mix_min[tech]) == len(pol.mix_max[tech]):
            _check(v, all(lo <= hi for lo, hi in zip(pol.mix_min[tech], pol.mix_max[tech])),
                   f"policy.mix[{tech}]", "mix_min must not exceed mix_max")

    ts = system.timeseries
    if isinstance(ts, HourlySeries):
        n = ts.n_hours
        _check(v, n >= 1, "timeseries", "at least one hour required")
        for dim in ("load_factor", "wind_factor", "pv_factor"):
            arr = getattr(ts, dim)
            _check(v, len(arr) == n, f"timeseries.{dim}", "length mismatch")
            _check(v, bool(np.all((arr >= 0) & (arr <= 1))), f"timeseries.{dim}",
                   "factors must lie in [0, 1]")
    elif isinstance(ts, RepresentativeSet):
        _check(v, ts.n_hours >= 1, "timeseries", "at least one representative required")
        wsum = sum(h.weight for h in ts.hours)
        _check(v, abs(wsum - 1.0) <= 1e-9, "timeseries", "weights must sum to 1")
        for h in ts.hours:
            ent = f"timeseries.hour[{h.index}]"
            _check(v, h.weight > 0, ent, "weight must be positive")
            for dim in ("load_factor", "wind_factor", "pv_factor"):
                val = getattr(h, dim)
                _check(v, 0.0 <= val <= 1.0, f"{ent}.{dim}", "factor must lie in [0, 1]")
    else:
        v.append("timeseries: missing or of unknown type")

    return v


# ---------------------------------------------------------------------------
# loading and serialization

_TOP_KEYS = {"schema_version", "name", "economics", "buses", "lines", "thermal_units",
             "renewables", "storage_types", "policy", "timeseries"}


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise InstanceParseError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise InstanceParseError(f"{where}: unknown keys {sorted(unknown)}")


def _per_stage(value, stages: int) -> tuple:
    if isinstance(value, (int, float)):
        return tuple(float(value) for _ in range(stages))
    seq = tuple(float(x) for x in value)
    if len(seq) != stages:
        raise InstanceParseError(f"per-stage list needs {stages} entries, got {len(seq)}")
    return seq


def _penalty_table(value, where: str) -> tuple[float, dict]:
    """Scalar broadcast or {bus: price} override table."""
    if isinstance(value, (int, float)):
        return float(value), {}
    if isinstance(value, dict):
        value = dict(value)
        default = float(value.pop("default", 1000.0))
        try:
            table = {int(k): float(val) for k, val in value.items()}
        except (TypeError, ValueError) as exc:
            raise InstanceParseError(f"{where}: bus keys must be integers") from exc
        return default, table
    raise InstanceParseError(f"{where}: expected a number or a bus map")


def read_hourly_csv(path) -> HourlySeries:
    """Hourly factor sidecar: columns load_factor, wind_factor, pv_factor."""
    rows = list(csv.DictReader(Path(path).open()))
    if not rows:
        raise InstanceParseError(f"{path}: empty hourly series")
    needed = {"load_factor", "wind_factor", "pv_factor"}
    if not needed <= set(rows[0]):
        raise InstanceParseError(f"{path}: columns {sorted(needed)} required")
    cols = {k: np.array([float(r[k]) for r in rows]) for k in needed}
    if "hour" in rows[0]:
        hours = [int(r["hour"]) for r in rows]
        if hours != list(range(1, len(rows) + 1)):
            raise InstanceParseError(f"{path}: hour column must run 1..{len(rows)}")
    return HourlySeries(load_factor=cols["load_factor"],
                        wind_factor=cols["wind_factor"],
                        pv_factor=cols["pv_factor"])


def write_hourly_csv(series: HourlySeries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hour", "load_factor", "wind_factor", "pv_factor"])
        for h in range(series.n_hours):
            writer.writerow([h + 1,
                             repr(float(series.load_factor[h])),
                             repr(float(series.wind_factor[h])),
                             repr(float(series.pv_factor[h]))])


def _load_timeseries(spec, base_dir: Path):
    if not isinstance(spec, dict):
        raise InstanceParseError("timeseries: expected an object")
    _reject_unknown(spec, {"hourly_csv", "hourly", "representative", "representative_path"},
                    "timeseries")
    if "hourly_csv" in spec:
        return read_hourly_csv(base_dir / spec["hourly_csv"])
    if "hourly" in spec:
        inline = spec["hourly"]
        try:
            return HourlySeries(
                load_factor=np.array([float(x) for x in inline["load_factor"]]),
                wind_factor=np.array([float(x) for x in inline["wind_factor"]]),
                pv_factor=np.array([float(x) for x in inline["pv_factor"]]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceParseError(f"timeseries.hourly: {exc}") from exc
    if "representative" in spec:
        return read_representative_set(spec["representative"])
    if "representative_path" in spec:
        return read_representative_set(base_dir / spec["representative_path"])
    raise InstanceParseError("timeseries: one of hourly_csv, hourly, representative, "
                             "representative_path required")


def load_system(source) -> SystemData:
    """Load and validate a planning instance from a JSON document.

    ``source`` is a path to the document; sidecar references resolve relative
    to it. Raises :class:`InstanceParseError` on malformed input,
    :class:`InstanceReferenceError` on dangling references and
    :class:`InstanceDomainError` when a value violates a declared invariant.
    """
    path = Path(source)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{path}: {exc}") from exc
    return build_system(doc, base_dir=path.parent)


def build_system(doc: dict, base_dir: Path | None = None) -> SystemData:
    """Assemble a SystemData from an already-parsed document."""
    if not isinstance(doc, dict):
        raise InstanceParseError("instance document must be an object")
    base_dir = Path(".") if base_dir is None else base_dir
    _reject_unknown(doc, _TOP_KEYS, "instance")

    eco_doc = dict(_require(doc, "economics", "instance"))
    _reject_unknown(eco_doc, {"interest_rate", "stage_count", "years_per_stage",
                              "load_growth", "base_power_mva", "lifetimes"}, "economics")
    lifetimes = dict(DEFAULT_LIFETIMES)
    lifetimes.update({str(k): float(x) for k, x in eco_doc.get("lifetimes", {}).items()})
    economics = EconomicParams(
        interest_rate=float(_require(eco_doc, "interest_rate", "economics")),
        stage_count=int(_require(eco_doc, "stage_count", "economics")),
        years_per_stage=int(eco_doc.get("years_per_stage", 2)),
        load_growth=float(eco_doc.get("load_growth", 0.0)),
        base_power_mva=float(eco_doc.get("base_power_mva", 100.0)),
        lifetimes=lifetimes)

    buses = []
    for raw in _require(doc, "buses", "instance"):
        _reject_unknown(raw, {"id", "peak_load_mw", "is_expansion_bus"}, "bus")
        buses.append(Bus(id=int(_require(raw, "id", "bus")),
                         peak_load_mw=float(raw.get("peak_load_mw", 0.0)),
                         is_expansion_bus=bool(raw.get("is_expansion_bus", False))))
    known = {b.id for b in buses}

    lines = []
    for raw in doc.get("lines", []):
        _reject_unknown(raw, {"id", "from_bus", "to_bus", "susceptance_pu", "capacity_mw",
                              "is_existing", "length_km", "invest_cost_per_km",
                              "row_cost_per_km", "substation_cost", "corridor_slots",
                              "is_new_corridor"}, "line")
        ln = Line(id=int(_require(raw, "id", "line")),
                  from_bus=int(_require(raw, "from_bus", "line")),
                  to_bus=int(_require(raw, "to_bus", "line")),
                  susceptance_pu=float(_require(raw, "susceptance_pu", "line")),
                  capacity_mw=float(_require(raw, "capacity_mw", "line")),
                  is_existing=bool(raw.get("is_existing", True)),
                  length_km=float(raw.get("length_km", 0.0)),
                  invest_cost_per_km=float(raw.get("invest_cost_per_km", 0.0)),
                  row_cost_per_km=float(raw.get("row_cost_per_km", 0.0)),
                  substation_cost=float(raw.get("substation_cost", 0.0)),
                  corridor_slots=int(raw.get("corridor_slots", 1)),
                  is_new_corridor=bool(raw.get("is_new_corridor", False)))
        if ln.from_bus not in known or ln.to_bus not in known:
            raise InstanceReferenceError(f"line[{ln.id}]: unknown endpoint bus")
        lines.append(ln)

    units = []
    for raw in doc.get("thermal_units", []):
        _reject_unknown(raw, {"bus", "type_id", "tech", "unit_capacity_mw", "segments",
                              "existing_count", "candidate_slots", "per_stage_build_limit",
                              "invest_cost", "maint_cost", "emission_rate", "ramp_up_mw",
                              "ramp_down_mw", "frsr_up_max_mw", "frsr_dn_max_mw",
                              "reserve_cost", "lifetime_years"}, "thermal_unit")
        segments = []
        for seg in _require(raw, "segments", "thermal_unit"):
            _reject_unknown(seg, {"fuel_price", "heat_rate", "emission_price"}, "segment")
            segments.append(FuelSegment(
                fuel_price=float(_require(seg, "fuel_price", "segment")),
                heat_rate=float(_require(seg, "heat_rate", "segment")),
                emission_price=float(seg.get("emission_price", 0.0))))
        limit = raw.get("per_stage_build_limit")
        unit = ThermalUnitType(
            bus=int(_require(raw, "bus", "thermal_unit")),
            type_id=str(_require(raw, "type_id", "thermal_unit")),
            tech=str(raw.get("tech", "")),
            unit_capacity_mw=float(_require(raw, "unit_capacity_mw", "thermal_unit")),
            segments=tuple(segments),
            existing_count=int(raw.get("existing_count", 0)),
            candidate_slots=int(raw.get("candidate_slots", 0)),
            per_stage_build_limit=None if limit is None else int(limit),
            invest_cost=float(raw.get("invest_cost", 0.0)),
            maint_cost=float(raw.get("maint_cost", 0.0)),
            emission_rate=float(raw.get("emission_rate", 0.0)),
            ramp_up_mw=float(raw.get("ramp_up_mw", 1e6)),
            ramp_down_mw=float(raw.get("ramp_down_mw", 1e6)),
            frsr_up_max_mw=float(raw.get("frsr_up_max_mw", 0.0)),
            frsr_dn_max_mw=float(raw.get("frsr_dn_max_mw", 0.0)),
            reserve_cost=float(raw.get("reserve_cost", 0.0)),
            lifetime_years=(None if raw.get("lifetime_years") is None
                            else float(raw["lifetime_years"])))
        if unit.bus not in known:
            raise InstanceReferenceError(f"unit[{unit.bus},{unit.type_id}]: unknown bus")
        units.append(unit)

    sites = []
    for raw in doc.get("renewables", []):
        _reject_unknown(raw, {"bus", "kind", "cap_max_mw", "invest_cost", "maint_cost",
                              "lifetime_years"}, "renewable")
        site = RenewableSite(
            bus=int(_require(raw, "bus", "renewable")),
            kind=str(_require(raw, "kind", "renewable")),
            cap_max_mw=float(_require(raw, "cap_max_mw", "renewable")),
            invest_cost=float(raw.get("invest_cost", 0.0)),
            maint_cost=float(raw.get("maint_cost", 0.0)),
            lifetime_years=(None if raw.get("lifetime_years") is None
                            else float(raw["lifetime_years"])))
        if site.bus not in known:
            raise InstanceReferenceError(f"renewable[{site.bus},{site.kind}]: unknown bus")
        sites.append(site)

    stores = []
    for raw in doc.get("storage_types", []):
        _reject_unknown(raw, {"bus", "type_id", "energy_capacity_mwh", "power_capacity_mw",
                              "energy_cost", "power_cost", "degradation_cost",
                              "eta_charge", "eta_discharge", "lifetime_years"}, "storage")
        st = StorageType(
            bus=int(_require(raw, "bus", "storage")),
            type_id=str(_require(raw, "type_id", "storage")),
            energy_capacity_mwh=float(_require(raw, "energy_capacity_mwh", "storage")),
            power_capacity_mw=float(_require(raw, "power_capacity_mw", "storage")),
            energy_cost=float(raw.get("energy_cost", 0.0)),
            power_cost=float(raw.get("power_cost", 0.0)),
            degradation_cost=float(raw.get("degradation_cost", 0.0)),
            eta_charge=float(raw.get("eta_charge", 0.9)),
            eta_discharge=float(raw.get("eta_discharge", 0.9)),
            lifetime_years=(None if raw.get("lifetime_years") is None
                            else float(raw["lifetime_years"])))
        if st.bus not in known:
            raise InstanceReferenceError(f"storage[{st.bus},{st.type_id}]: unknown bus")
        stores.append(st)

    pol_doc = dict(doc.get("policy", {}))
    _reject_unknown(pol_doc, {"rps_fraction", "wind_curtail_frac", "shed_gamma", "shed_phi",
                              "reserve_margin", "frsr_res_frac", "frsr_load_frac",
                              "ramp_window_min", "shed_penalty", "curtail_penalty",
                              "mix_min", "mix_max"}, "policy")
    shed_default, shed_table = _penalty_table(pol_doc.get("shed_penalty", 1000.0),
                                              "policy.shed_penalty")
    curt_default, curt_table = _penalty_table(pol_doc.get("curtail_penalty", 1000.0),
                                              "policy.curtail_penalty")
    stages = economics.stage_count
    policy = PolicyParams(
        rps_fraction=float(pol_doc.get("rps_fraction", 0.0)),
        wind_curtail_frac=float(pol_doc.get("wind_curtail_frac", 1.0)),
        shed_gamma=float(pol_doc.get("shed_gamma", 0.0)),
        shed_phi=float(pol_doc.get("shed_phi", 0.0)),
        reserve_margin=float(pol_doc.get("reserve_margin", 0.0)),
        frsr_res_frac=float(pol_doc.get("frsr_res_frac", 0.05)),
        frsr_load_frac=float(pol_doc.get("frsr_load_frac", 0.03)),
        ramp_window_min=float(pol_doc.get("ramp_window_min", 10.0)),
        shed_penalty=shed_table,
        curtail_penalty=curt_table,
        shed_penalty_default=shed_default,
        curtail_penalty_default=curt_default,
        mix_min={str(t): _per_stage(x, stages)
                 for t, x in pol_doc.get("mix_min", {}).items()},
        mix_max={str(t): _per_stage(x, stages)
                 for t, x in pol_doc.get("mix_max", {}).items()})

    timeseries = _load_timeseries(_require(doc, "timeseries", "instance"), base_dir)

    system = SystemData(
        name=str(doc.get("name", "unnamed")),
        economics=economics,
        buses=tuple(buses),
        lines=tuple(lines),
        thermal_units=tuple(units),
        renewables=tuple(sites),
        storage_types=tuple(stores),
        policy=policy,
        timeseries=timeseries,
        digest="")
    violations = validate(system)
    if violations:
        raise InstanceDomainError("; ".join(violations))
    return replace(system, digest=system_digest(system))


def serialize_system(system: SystemData, path=None) -> dict:
    """Canonical document form of an instance; timeseries embedded inline."""
    eco = system.economics
    doc = {
        "schema_version": 1,
        "name": system.name,
        "economics": {
            "interest_rate": eco.interest_rate,
            "stage_count": eco.stage_count,
            "years_per_stage": eco.years_per_stage,
            "load_growth": eco.load_growth,
            "base_power_mva": eco.base_power_mva,
            "lifetimes": {k: eco.lifetimes[k] for k in sorted(eco.lifetimes)},
        },
        "buses": [{"id": b.id, "peak_load_mw": b.peak_load_mw,
                   "is_expansion_bus": b.is_expansion_bus} for b in system.buses],
        "lines": [{"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus,
                   "susceptance_pu": ln.susceptance_pu, "capacity_mw": ln.capacity_mw,
                   "is_existing": ln.is_existing, "length_km": ln.length_km,
                   "invest_cost_per_km": ln.invest_cost_per_km,
                   "row_cost_per_km": ln.row_cost_per_km,
                   "substation_cost": ln.substation_cost,
                   "corridor_slots": ln.corridor_slots,
                   "is_new_corridor": ln.is_new_corridor} for ln in system.lines],
        "thermal_units": [{
            "bus": u.bus, "type_id": u.type_id, "tech": u.tech,
            "unit_capacity_mw": u.unit_capacity_mw,
            "segments": [{"fuel_price": s.fuel_price, "heat_rate": s.heat_rate,
                          "emission_price": s.emission_price} for s in u.segments],
            "existing_count": u.existing_count, "candidate_slots": u.candidate_slots,
            "per_stage_build_limit": u.per_stage_build_limit,
            "invest_cost": u.invest_cost, "maint_cost": u.maint_cost,
            "emission_rate": u.emission_rate,
            "ramp_up_mw": u.ramp_up_mw, "ramp_down_mw": u.ramp_down_mw,
            "frsr_up_max_mw": u.frsr_up_max_mw, "frsr_dn_max_mw": u.frsr_dn_max_mw,
            "reserve_cost": u.reserve_cost, "lifetime_years": u.lifetime_years,
        } for u in system.thermal_units],
        "renewables": [{"bus": r.bus, "kind": r.kind, "cap_max_mw": r.cap_max_mw,
                        "invest_cost": r.invest_cost, "maint_cost": r.maint_cost,
                        "lifetime_years": r.lifetime_years} for r in system.renewables],
        "storage_types": [{"bus": s.bus, "type_id": s.type_id,
                           "energy_capacity_mwh": s.energy_capacity_mwh,
                           "power_capacity_mw": s.power_capacity_mw,
                           "energy_cost": s.energy_cost, "power_cost": s.power_cost,
                           "degradation_cost": s.degradation_cost,
                           "eta_charge": s.eta_charge, "eta_discharge": s.eta_discharge,
                           "lifetime_years": s.lifetime_years}
                          for s in system.storage_types],
        "policy": {
            "rps_fraction": system.policy.rps_fraction,
            "wind_curtail_frac": system.policy.wind_curtail_frac,
            "shed_gamma": system.policy.shed_gamma,
            "shed_phi": system.policy.shed_phi,
            "reserve_margin": system.policy.reserve_margin,
            "frsr_res_frac": system.policy.frsr_res_frac,
            "frsr_load_frac": system.policy.frsr_load_frac,
            "ramp_window_min": system.policy.ramp_window_min,
            "shed_penalty": {"default": system.policy.shed_penalty_default,
                             **{str(k): v for k, v in
                                sorted(system.policy.shed_penalty.items())}},
            "curtail_penalty": {"default": system.policy.curtail_penalty_default,
                                **{str(k): v for k, v in
                                   sorted(system.policy.curtail_penalty.items())}},
            "mix_min": {t: list(x) for t, x in sorted(system.policy.mix_min.items())},
            "mix_max": {t: list(x) for t, x in sorted(system.policy.mix_max.items())},
        },
        "timeseries": _serialize_timeseries(system.timeseries),
    }
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    return doc


def _serialize_timeseries(ts) -> dict:
    if isinstance(ts, HourlySeries):
        return {"hourly": {"load_factor": [float(x) for x in ts.load_factor],
                           "wind_factor": [float(x) for x in ts.wind_factor],
                           "pv_factor": [float(x) for x in ts.pv_factor]}}
    if isinstance(ts, RepresentativeSet):
        return {"representative": {
            "schema_version": 1,
            "source_hash": ts.source_hash,
            "hours": [{"index": h.index, "load_factor": h.load_factor,
                       "wind_factor": h.wind_factor, "pv_factor": h.pv_factor,
                       "weight": h.weight, "span_hours": h.span_hours}
                      for h in ts.hours]}}
    raise InstanceParseError("timeseries of unknown type")


def system_digest(system: SystemData) -> str:
    """Content hash of the canonical document form, independent of file layout."""
    doc = serialize_system(system)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()

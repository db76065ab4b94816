"""Instance loading, validation and the economic factor arithmetic."""

from dataclasses import replace

import pytest

from conftest import one_bus_doc
from gridplan.system import (InstanceDomainError, InstanceError,
                             InstanceReferenceError, annuity_factor,
                             build_system, load_system, serialize_system,
                             stage_discount, stage_load_factor, system_digest,
                             validate)


class TestAnnuityFactor:
    def test_one_year_repays_principal_plus_interest(self):
        assert annuity_factor(0.05, 1) == pytest.approx(1.05, abs=1e-12)

    def test_twenty_year_value(self):
        # i(1+i)^T/((1+i)^T - 1) evaluated in exact decimal arithmetic
        assert annuity_factor(0.05, 20) == pytest.approx(0.08024258719069132,
                                                         abs=1e-12)

    def test_thirty_year_value(self):
        assert annuity_factor(0.05, 30) == pytest.approx(0.06505143508027659,
                                                         abs=1e-12)

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            annuity_factor(0.0, 20)


class TestStageDiscount:
    def test_first_stage_investment(self):
        assert stage_discount(1, 0.05, "investment") == pytest.approx(
            1.9047619047619047, abs=1e-12)

    def test_first_stage_operation(self):
        assert stage_discount(1, 0.05, "operation") == pytest.approx(
            1.8140589569160998, abs=1e-12)

    def test_seventh_stage_operation(self):
        assert stage_discount(7, 0.05, "operation") == pytest.approx(
            1.0101359059910377, abs=1e-12)

    def test_investment_leads_operation_by_one_year(self):
        for s in range(1, 8):
            ratio = stage_discount(s, 0.05, "investment") / stage_discount(
                s, 0.05, "operation")
            assert ratio == pytest.approx(1.05, abs=1e-12)

    def test_stage_outside_horizon_rejected(self):
        with pytest.raises(ValueError):
            stage_discount(8, 0.05, "operation", stage_count=7)


class TestStageLoadFactor:
    def test_compounds_from_stage_one(self):
        assert stage_load_factor(1, 0.10) == pytest.approx(1.10, abs=1e-12)

    def test_seven_stages_of_ten_percent(self):
        assert stage_load_factor(7, 0.10) == pytest.approx(1.9487171, abs=1e-9)

    def test_zero_growth_is_identity(self):
        assert stage_load_factor(3, 0.0) == 1.0


class TestLoadSystem:
    def test_minimal_single_bus_document(self):
        system = build_system(one_bus_doc())
        assert len(system.buses) == 1
        assert len(system.thermal_units) == 1
        assert validate(system) == []

    def test_dangling_line_endpoint_names_the_bus(self):
        doc = one_bus_doc()
        doc["buses"].append({"id": 2, "peak_load_mw": 10.0})
        doc["lines"] = [{"id": 1, "from_bus": 99, "to_bus": 2,
                         "susceptance_pu": 4.0, "capacity_mw": 50.0}]
        with pytest.raises(InstanceReferenceError):
            build_system(doc)

    def test_storage_parameters_carried_verbatim(self):
        doc = one_bus_doc()
        doc["storage_types"] = [{
            "bus": 1, "type_id": "bat", "energy_capacity_mwh": 40.0,
            "power_capacity_mw": 10.0, "eta_charge": 0.9, "eta_discharge": 0.9,
            "degradation_cost": 5.0,
        }]
        system = build_system(doc)
        st = system.storage_types[0]
        assert st.eta_charge == 0.9
        assert st.eta_discharge == 0.9
        assert st.degradation_cost == 5.0

    def test_file_round_trip_preserves_digest(self, tmp_path):
        system = build_system(one_bus_doc())
        path = tmp_path / "inst.json"
        serialize_system(system, path)
        again = load_system(path)
        assert system_digest(again) == system_digest(system)

    def test_reference_parameters_flow_through_unchanged(self, tmp_path):
        """Policy and economics survive load -> serialize -> load exactly."""
        doc = one_bus_doc()
        doc["economics"] = {"interest_rate": 0.05, "stage_count": 2,
                            "load_growth": 0.10, "base_power_mva": 100.0}
        doc["policy"] = {"rps_fraction": 0.10, "wind_curtail_frac": 0.50,
                         "reserve_margin": 0.15, "shed_penalty": 1000.0,
                         "curtail_penalty": 1000.0, "ramp_window_min": 10.0}
        doc["storage_types"] = [{
            "bus": 1, "type_id": "bat", "energy_capacity_mwh": 40.0,
            "power_capacity_mw": 10.0, "eta_charge": 0.9,
            "eta_discharge": 0.9, "degradation_cost": 5.0,
        }]
        doc["renewables"] = [{"bus": 1, "kind": "wind", "cap_max_mw": 30.0}]
        system = build_system(doc)
        assert system.economics.interest_rate == 0.05
        assert system.economics.load_growth == 0.10
        assert system.economics.base_power_mva == 100.0
        assert system.policy.rps_fraction == 0.10
        assert system.policy.wind_curtail_frac == 0.50
        assert system.policy.reserve_margin == 0.15
        assert system.policy.shed_price(1) == 1000.0
        assert system.policy.curtail_price(1) == 1000.0
        assert system.policy.ramp_window_min == 10.0
        path = tmp_path / "round.json"
        serialize_system(system, path)
        again = load_system(path)
        assert again.policy == system.policy
        assert again.economics == system.economics
        assert again.storage_types == system.storage_types

    def test_unknown_keys_rejected(self):
        doc = one_bus_doc()
        doc["thermal_units"][0]["startup_cost"] = 10.0
        with pytest.raises(InstanceError):
            build_system(doc)


class TestValidate:
    def test_clean_instance_has_no_violations(self):
        assert validate(build_system(one_bus_doc())) == []

    def test_inverted_mix_bounds_flagged_once(self):
        system = build_system(one_bus_doc())
        policy = replace(system.policy, mix_min={"steam": (0.6,)},
                         mix_max={"steam": (0.5,)})
        problems = validate(replace(system, policy=policy))
        assert len(problems) == 1
        assert "mix_min" in problems[0]

    def test_build_limit_above_slots_flagged(self):
        system = build_system(one_bus_doc())
        unit = replace(system.thermal_units[0], candidate_slots=3,
                       per_stage_build_limit=5)
        problems = validate(replace(system, thermal_units=(unit,)))
        assert len(problems) == 1
        assert "per_stage_build_limit" in problems[0]

    def test_loader_rejects_invalid_instances(self):
        doc = one_bus_doc()
        doc["thermal_units"][0]["candidate_slots"] = 3
        doc["thermal_units"][0]["per_stage_build_limit"] = 5
        with pytest.raises(InstanceDomainError):
            build_system(doc)

    def test_shed_caps_must_be_fractions(self):
        doc = one_bus_doc()
        doc["policy"] = {"shed_gamma": 1.5}
        with pytest.raises(InstanceDomainError):
            build_system(doc)

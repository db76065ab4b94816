"""End-to-end command line behavior, driven in-process through main()."""

import csv
import json

import numpy as np
import pytest

from conftest import one_bus_doc, synthetic_profile
from gridplan.cli import main
from gridplan.interchange import read_lp_format
from gridplan.system import HourlySeries, write_hourly_csv


def _write_series(path, seed=1, hours=8760):
    m = synthetic_profile(seed)[:hours]
    write_hourly_csv(HourlySeries(m[:, 0], m[:, 1], m[:, 2]), path)


def _solve(tmp_path, name, *extra, subdir="out"):
    outdir = tmp_path / subdir
    rc = main(["solve", "--seed-instance", name, "--outdir", str(outdir),
               "--no-figures", *extra])
    return rc, outdir


def _objective(outdir):
    return json.loads((outdir / "solution.json").read_text())["objective"]


class TestCluster:
    def test_reduces_to_requested_count(self, tmp_path, capsys):
        series = tmp_path / "hours.csv"
        _write_series(series)
        out = tmp_path / "reps.json"
        rc = main(["cluster", str(series), "-k", "96", "-o", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert len(doc["hours"]) == 96
        weights = [h["weight"] for h in doc["hours"]]
        assert sum(weights) == pytest.approx(1.0, abs=1e-12)
        assert "duration_rmse" in capsys.readouterr().out

    def test_identity_at_full_resolution(self, tmp_path):
        series = tmp_path / "short.csv"
        _write_series(series, hours=48)
        out = tmp_path / "reps.json"
        rc = main(["cluster", str(series), "-k", "48", "-o", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert len(doc["hours"]) == 48
        assert all(h["span_hours"] == 1 for h in doc["hours"])
        assert [h["index"] for h in doc["hours"]] == list(range(1, 49))

    def test_zero_k_is_a_usage_error(self, tmp_path):
        series = tmp_path / "hours.csv"
        _write_series(series, hours=24)
        with pytest.raises(SystemExit) as err:
            main(["cluster", str(series), "-k", "0", "-o", str(tmp_path / "r.json")])
        assert err.value.code == 2

    def test_k_beyond_series_rejected(self, tmp_path):
        series = tmp_path / "hours.csv"
        _write_series(series, hours=24)
        rc = main(["cluster", str(series), "-k", "25",
                   "-o", str(tmp_path / "r.json")])
        assert rc == 3


class TestSolve:
    def test_methods_agree(self, tmp_path):
        rc1, mono = _solve(tmp_path, "bess", "--method", "monolithic",
                           subdir="mono")
        rc2, dec = _solve(tmp_path, "bess", "--method", "benders",
                          subdir="benders")
        assert rc1 == rc2 == 0
        assert _objective(dec) == pytest.approx(_objective(mono), rel=1e-6)
        # decomposition leaves a convergence trace, the oracle does not
        assert (dec / "trace.csv").exists()
        assert not (mono / "trace.csv").exists()

    def test_artifacts_written(self, tmp_path):
        rc, outdir = _solve(tmp_path, "wire")
        assert rc == 0
        for name in ("solution.json", "report.json", "plan.csv", "costs.csv",
                     "trajectories.csv", "shares.csv", "plan.txt",
                     "instance.json", "trace.csv"):
            assert (outdir / name).exists(), name
        assert any(outdir.glob("dispatch_stage*.csv"))

    def test_figures_rendered_alongside_tables(self, tmp_path):
        outdir = tmp_path / "fig"
        rc = main(["solve", "--seed-instance", "wire", "--outdir", str(outdir)])
        assert rc == 0
        for name in ("trajectories.png", "shares.png", "convergence.png"):
            assert (outdir / name).stat().st_size > 0, name
        assert any(outdir.glob("dispatch_stage*.png"))

    def test_storage_toggle_dominance(self, tmp_path):
        rc1, with_bes = _solve(tmp_path, "bess", subdir="with")
        rc2, without = _solve(tmp_path, "bess", "--no-bes", subdir="without")
        assert rc1 == rc2 == 0
        assert _objective(with_bes) <= _objective(without) * (1 + 1e-9)

    def test_shed_instance_reports_unserved_energy(self, tmp_path):
        rc, outdir = _solve(tmp_path, "shed", "--method", "monolithic")
        assert rc == 0
        doc = json.loads((outdir / "solution.json").read_text())
        shed = sum(v for k, v in doc["values"] if k[0] == "LS")
        assert shed > 1e-6
        stage_csv = next(outdir.glob("dispatch_stage*.csv"))
        rows = list(csv.DictReader(stage_csv.open()))
        assert sum(float(r["shed"]) for r in rows) == pytest.approx(shed, rel=1e-6)

    def test_reruns_are_byte_identical(self, tmp_path):
        _, first = _solve(tmp_path, "wire2", subdir="a")
        _, second = _solve(tmp_path, "wire2", subdir="b")
        for p in sorted(first.iterdir()):
            assert (second / p.name).read_bytes() == p.read_bytes(), p.name

    def test_infeasible_instance_names_binding_requirements(self, tmp_path, capsys):
        doc = one_bus_doc()
        doc["buses"][0]["peak_load_mw"] = 500.0
        path = tmp_path / "heavy.json"
        path.write_text(json.dumps(doc))
        rc = main(["solve", str(path), "--method", "monolithic",
                   "--outdir", str(tmp_path / "out"), "--no-figures"])
        assert rc == 4
        err = capsys.readouterr().err
        assert "infeasible" in err
        assert "e" in err  # at least one named constraint family

    def test_iteration_limit_exit_and_partial_artifacts(self, tmp_path, capsys):
        outdir = tmp_path / "stopped"
        rc = main(["solve", "--seed-instance", "sixbus", "--iter-limit", "2",
                   "--outdir", str(outdir), "--no-figures"])
        assert rc == 5
        assert "stopped after 2 iterations" in capsys.readouterr().err
        failed = json.loads((outdir / "solve_failed.json").read_text())
        assert failed["status"] == "nonconverged"
        assert failed["iterations"] == 2
        assert (outdir / "trace.csv").exists()
        assert not (outdir / "solution.json").exists()

    def test_instance_and_seed_are_mutually_exclusive(self, tmp_path, capsys):
        rc = main(["solve", "x.json", "--seed-instance", "wire",
                   "--outdir", str(tmp_path / "out")])
        assert rc == 3
        assert "not both" in capsys.readouterr().err

    def test_invalid_instance_rejected(self, tmp_path, capsys):
        doc = one_bus_doc()
        doc["thermal_units"][0].update(candidate_slots=3, per_stage_build_limit=5)
        path = tmp_path / "invalid.json"
        path.write_text(json.dumps(doc))
        rc = main(["solve", str(path), "--outdir", str(tmp_path / "out")])
        assert rc == 3
        assert "per_stage_build_limit" in capsys.readouterr().err

    def test_missing_instance_argument(self, tmp_path, capsys):
        rc = main(["solve", "--outdir", str(tmp_path / "out")])
        assert rc == 3
        assert "required" in capsys.readouterr().err


@pytest.fixture(scope="module")
def stored(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("stored")
    rc, outdir = _solve(tmp, "threebus")
    assert rc == 0
    return outdir


class TestReportAndCheck:
    def test_report_rebuilds_tables(self, tmp_path, stored):
        outdir = tmp_path / "rebuilt"
        rc = main(["report", str(stored / "solution.json"),
                   "--seed-instance", "threebus",
                   "--outdir", str(outdir), "--no-figures"])
        assert rc == 0
        assert (outdir / "report.json").read_bytes() == \
            (stored / "report.json").read_bytes()
        shares = list(csv.DictReader((outdir / "shares.csv").open()))
        for row in shares:
            total = sum(float(row[k]) for k in ("thermal", "wind", "pv", "bes"))
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_report_refuses_foreign_instance(self, tmp_path, stored, capsys):
        rc = main(["report", str(stored / "solution.json"),
                   "--seed-instance", "wire",
                   "--outdir", str(tmp_path / "x"), "--no-figures"])
        assert rc == 3
        assert "different instance" in capsys.readouterr().err

    def test_check_passes_stored_solution(self, stored, capsys):
        rc = main(["check", str(stored / "solution.json"),
                   "--seed-instance", "threebus"])
        assert rc == 0
        assert "passed" in capsys.readouterr().out

    def test_check_flags_tampering(self, tmp_path, stored, capsys):
        doc = json.loads((stored / "solution.json").read_text())
        for entry in doc["values"]:
            if entry[0][0] == "P" and entry[1] > 1.0:
                entry[1] += 5.0
                break
        path = tmp_path / "tampered.json"
        path.write_text(json.dumps(doc))
        rc = main(["check", str(path), "--seed-instance", "threebus"])
        assert rc == 3
        assert "violation" in capsys.readouterr().err


class TestExport:
    def test_export_parses_back(self, tmp_path, capsys):
        out = tmp_path / "model.lp"
        rc = main(["export-milp", "--seed-instance", "wire", "-o", str(out)])
        assert rc == 0
        head = out.read_text().splitlines()[0]
        assert head.startswith("\\ instance wire")
        lp = read_lp_format(out)
        assert lp.n_cols > 0 and len(lp.binary_cols) > 0
        msg = capsys.readouterr().out
        assert f"{len(lp.c)} cols" in msg


class TestUsage:
    def test_no_arguments(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    def test_unknown_seed_instance(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["solve", "--seed-instance", "nonesuch",
                  "--outdir", str(tmp_path)])
        assert err.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["--version"])
        assert err.value.code == 0
        assert capsys.readouterr().out.strip()

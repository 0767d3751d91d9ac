"""CLI contract: config parsing, file schemas, emission, determinism."""

import csv
import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from srdkf import cli, netsim
from srdkf.cli import (
    CSV_HEADER,
    ConfigError,
    emit_timeseries,
    parse_config,
    parse_scenario_file,
    scenario_to_dict,
)


@pytest.fixture()
def short_run(tmp_path):
    sc = replace(netsim.preset_coordinated(seed=3), duration_s=12.0)
    log = netsim.run_scenario(sc)
    emit_timeseries(log, tmp_path)
    return sc, log, tmp_path


class TestParseConfig:
    def test_preset_loads_published_parameters(self):
        config, sc = parse_config(
            ["run", "--preset", "coordinated", "--out", "/tmp/x", "--seed", "5"]
        )
        assert config.preset == "coordinated"
        assert sc.rng_seed == 5
        assert sc.alert_limit_s == 26.5e-6
        assert {a.kind for a in sc.attacks} == {"ramp"}

    def test_preset_and_scenario_mutually_exclusive(self):
        with pytest.raises(SystemExit) as exc:
            parse_config(["run", "--preset", "none", "--scenario", "x.json",
                          "--out", "/tmp/x"])
        assert exc.value.code == 2

    def test_empty_file_names_missing_field(self, tmp_path):
        p = tmp_path / "empty.json"
        p.write_text("{}")
        with pytest.raises(ConfigError, match=r"\$\.n_receivers"):
            parse_config(["run", "--scenario", str(p), "--out", str(tmp_path)])

    def test_unknown_key_rejected_with_path(self):
        data = scenario_to_dict(netsim.preset_none())
        data["noise_bounds"]["process_T"]["bogus"] = 1.0
        with pytest.raises(ConfigError, match=r"\$\.noise_bounds\.process_T\.bogus"):
            parse_scenario_file(data)

    def test_unknown_estimator_rejected(self):
        with pytest.raises(ConfigError, match="unknown estimator"):
            parse_config(["run", "--preset", "none", "--out", "/tmp/x",
                          "--estimators", "srdkf,magic"])

    def test_round_trip_preset(self):
        for preset in (netsim.preset_coordinated(seed=9), netsim.preset_none(seed=1)):
            again = parse_scenario_file(scenario_to_dict(preset))
            assert again == preset

    def test_round_trip_idempotent_via_json(self, tmp_path):
        sc = replace(netsim.preset_coordinated(seed=2), duration_s=77.0)
        p = tmp_path / "s.json"
        p.write_text(json.dumps(scenario_to_dict(sc)))
        _, parsed = parse_config(["run", "--scenario", str(p), "--out", str(tmp_path)])
        assert parsed == sc
        assert parse_scenario_file(scenario_to_dict(parsed)) == parsed


class TestEmission:
    def test_header_matches_schema(self, short_run):
        _, _, out = short_run
        with open(out / "timeseries.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == CSV_HEADER

    def test_row_count(self, short_run):
        sc, log, out = short_run
        with open(out / "timeseries.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) - 1 == log.n_rounds * sc.graph.n_receivers * 3

    def test_crlf_line_endings(self, short_run):
        _, _, out = short_run
        raw = (out / "timeseries.csv").read_bytes()
        assert b"\r\n" in raw
        assert raw.replace(b"\r\n", b"").find(b"\n") == -1

    def test_numbers_round_trip_exactly(self, short_run):
        sc, log, out = short_run
        with open(out / "timeseries.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        rows = rows[1:]
        k, rx = 5, 2
        row = next(
            r for r in rows if r[0] == "5" and r[2] == "3" and r[5] == "srdkf"
        )
        assert float(row[3]) == log.truth[k, 0] / 1e-6
        assert float(row[6]) == log.errors["srdkf"][k, rx, 0] / 1e-6
        assert float(row[9]) == log.risk[k, rx]

    def test_baseline_rows_have_empty_alpha_risk(self, short_run):
        _, _, out = short_run
        with open(out / "timeseries.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        for r in rows[1:]:
            if r[5] in ("pvdkf", "akf"):
                assert r[8] == "" and r[9] == ""

    def test_summary_matches_csv_maxima(self, short_run):
        sc, log, out = short_run
        summary = json.loads((out / "summary.json").read_text())
        with open(out / "timeseries.csv", newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        for est in ("srdkf", "pvdkf", "akf"):
            for rx in range(1, 8):
                vals = [
                    abs(float(r[6])) for r in rows
                    if r[5] == est and int(r[2]) == rx
                ]
                assert summary["per_estimator"][est][rx - 1][
                    "max_abs_dT_us"
                ] == pytest.approx(max(vals), rel=1e-12)

    def test_resolved_config_reparses_equal(self, short_run):
        sc, _, out = short_run
        data = json.loads((out / "resolved_config.json").read_text())
        assert parse_scenario_file(data) == sc


class TestMainEntry:
    def test_exit_zero_and_determinism(self, tmp_path):
        scenario = scenario_to_dict(
            replace(netsim.preset_coordinated(seed=11), duration_s=10.0)
        )
        p = tmp_path / "s.json"
        p.write_text(json.dumps(scenario))
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert cli.main(["run", "--scenario", str(p), "--out", str(out1)]) == 0
        assert cli.main(["run", "--scenario", str(p), "--out", str(out2)]) == 0
        assert (out1 / "timeseries.csv").read_bytes() == (
            out2 / "timeseries.csv"
        ).read_bytes()

    def test_exit_two_on_bad_config(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{\"n_receivers\": 2}")
        assert cli.main(["run", "--scenario", str(p), "--out", str(tmp_path)]) == 2

    def test_multi_run_layout(self, tmp_path):
        scenario = scenario_to_dict(
            replace(netsim.preset_none(seed=0), duration_s=5.0)
        )
        p = tmp_path / "s.json"
        p.write_text(json.dumps(scenario))
        assert cli.main([
            "run", "--scenario", str(p), "--out", str(tmp_path / "mc"),
            "--runs", "3", "--estimators", "srdkf", "--no-risk",
        ]) == 0
        for r in range(3):
            assert (tmp_path / "mc" / f"run_{r:03d}" / "timeseries.csv").exists()

"""CLI tests: commands, artifacts, determinism, and service parity."""

import json

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from ristwin import control
from ristwin.cli import main
from ristwin.geometry import ArrayGeometry, Placement
from ristwin.service import create_app
from ristwin.testbed import Scenario


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def small_scenario_file(tmp_path):
    scenario = Scenario(
        geometry=ArrayGeometry(2, 2, 1, 2),
        placement=Placement((0.0, 0.0, 0.8), (0.2, 0.3, 1.5)),
        f_grid=tuple(np.linspace(3.5e9, 3.9e9, 5)),
    )
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario.to_json()))
    return str(path)


class TestCellValidate:
    def test_default_model_passes(self, runner):
        result = runner.invoke(main, ["cell", "validate"])
        assert result.exit_code == 0
        assert json.loads(result.output)["pass"] is True

    def test_wide_band_fails_nonzero_exit(self, runner):
        result = runner.invoke(main, ["cell", "validate", "--band", "3.3e9:4.0e9"])
        assert result.exit_code == 1
        assert json.loads(result.output)["pass"] is False

    def test_band_outside_span_error_json(self, runner):
        result = runner.invoke(main, ["cell", "validate", "--band", "3.0e9:3.8e9"])
        assert result.exit_code != 0
        err = json.loads(result.stderr)
        assert err["code"] == "FREQ_OUT_OF_RANGE"


class TestCodebookPattern:
    def test_codebook_writes_hex(self, runner, small_scenario_file, tmp_path):
        out = tmp_path / "cb.hex"
        result = runner.invoke(main, ["codebook", "--scenario", small_scenario_file,
                                      "--theta", "30", "--out", str(out)])
        assert result.exit_code == 0
        bits = control.config_from_hex(out.read_text().strip(), 2, 4)
        assert bits.shape == (2, 4)

    def test_pattern_all_off_peaks_broadside(self, runner, small_scenario_file, tmp_path):
        out = tmp_path / "pat.csv"
        result = runner.invoke(main, ["pattern", "--scenario", small_scenario_file,
                                      "--step", "1.0", "--out", str(out)])
        assert result.exit_code == 0
        assert json.loads(result.output)["peak_theta_deg"] == pytest.approx(0.0)
        lines = out.read_text().splitlines()
        assert lines[0] == "theta_deg,power_db"

    def test_apply_prints_census_and_power(self, runner, small_scenario_file, tmp_path):
        cfg = tmp_path / "cfg.hex"
        cfg.write_text(control.config_to_hex(np.ones((2, 4), dtype=np.uint8)) + "\n")
        result = runner.invoke(main, ["apply", "--scenario", small_scenario_file,
                                      "--config", str(cfg)])
        assert result.exit_code == 0
        doc = json.loads(result.output)
        assert doc["blocks"] == {"0": "ok", "1": "ok"}
        assert [b["mode"] for b in doc["census"]] == ["MASTER", "SLAVE"]

    def test_frames_round_trip(self, runner):
        enc = runner.invoke(main, ["frames", "encode", "--dest", "3", "--opcode", "ping"])
        assert enc.exit_code == 0
        assert enc.output.strip() == "a50103040067e0"
        dec = runner.invoke(main, ["frames", "decode", enc.output.strip()])
        assert dec.exit_code == 0
        doc = json.loads(dec.output)
        assert doc == {"version": 1, "dest": 3, "opcode": "ping", "payload_hex": ""}

    def test_frames_decode_bad_crc_error_json(self, runner):
        dec = runner.invoke(main, ["frames", "decode", "a50103040067e1"])
        assert dec.exit_code != 0
        assert json.loads(dec.stderr)["code"] == "BAD_CRC"


class TestDeterminism:
    def test_optimize_then_sweep_byte_identical(self, runner, small_scenario_file, tmp_path):
        outputs = []
        for run in ("a", "b"):
            d = tmp_path / run
            d.mkdir()
            r1 = runner.invoke(main, [
                "optimize", "--scenario", small_scenario_file, "--passes", "3",
                "--seed", "7", "--order", "random",
                "--out", f"{d / 'trace.csv'},{d / 'final.hex'}"])
            assert r1.exit_code == 0, r1.output
            r2 = runner.invoke(main, [
                "sweep", "--scenario", small_scenario_file, "--config", str(d / "final.hex"),
                "--baseline", "off", "--out", str(d / "sweep.csv")])
            assert r2.exit_code == 0, r2.output
            outputs.append(d)
        for name in ("trace.csv", "final.hex", "sweep.csv"):
            assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()


class TestServiceParity:
    """Every service endpoint has a CLI counterpart producing the same data."""

    ENDPOINT_TO_COMMAND = {
        "GET /scenario": "any command via --scenario (same schema)",
        "PUT /scenario": "any command via --scenario (same schema)",
        "POST /config": "apply",
        "POST /steer": "codebook + apply",
        "POST /optimize": "optimize",
        "GET /trace": "optimize --out trace.csv",
        "POST /sweep": "sweep",
        "GET /pattern": "pattern",
        "GET /blocks": "apply (census field)",
        "GET /final": "optimize --out trace.csv,final.hex",
    }

    def test_every_endpoint_enumerated(self):
        app = create_app(Scenario(geometry=ArrayGeometry(1, 2, 1, 1),
                                  placement=Placement((0, 0, 1.0), (0.1, 0, 2.0)),
                                  f_grid=(3.75e9,)))
        api_routes = {f"{sorted(r.methods - {'HEAD'})[0]} {r.path}"
                      for r in app.routes if getattr(r, "methods", None)}
        api_routes -= {"GET /openapi.json", "GET /docs", "GET /docs/oauth2-redirect",
                       "GET /redoc"}
        assert api_routes == set(self.ENDPOINT_TO_COMMAND)

    def test_steer_equals_codebook_cli(self, runner, small_scenario_file, tmp_path):
        with TestClient(create_app(json_scenario(small_scenario_file))) as client:
            api_hex = client.post("/steer", json={"theta_deg": 25.0, "phi_deg": 0.0}).json()["config_hex"]
        out = tmp_path / "cb.hex"
        result = runner.invoke(main, ["codebook", "--scenario", small_scenario_file,
                                      "--theta", "25", "--phi", "0", "--out", str(out)])
        assert result.exit_code == 0
        assert out.read_text().strip() == api_hex

    def test_optimize_trace_matches_cli(self, runner, small_scenario_file, tmp_path):
        with TestClient(create_app(json_scenario(small_scenario_file))) as client:
            client.post("/optimize", json={"passes": 2, "seed": 3})
            import time
            while client.get("/blocks").json()["run_status"] != "idle":
                time.sleep(0.01)
            api_final = client.get("/final").json()["config_hex"]
        d = tmp_path
        result = runner.invoke(main, [
            "optimize", "--scenario", small_scenario_file, "--passes", "2", "--seed", "3",
            "--out", f"{d / 'trace.csv'},{d / 'final.hex'}"])
        assert result.exit_code == 0
        assert (d / "final.hex").read_text().strip() == api_final

    def test_sweep_matches_cli(self, runner, small_scenario_file, tmp_path):
        bits = np.ones((2, 4), dtype=np.uint8)
        with TestClient(create_app(json_scenario(small_scenario_file))) as client:
            rows = client.post("/sweep", json={"config_a_hex": control.config_to_hex(bits)}).json()["rows"]
        cfg = tmp_path / "cfg.hex"
        cfg.write_text(control.config_to_hex(bits) + "\n")
        out = tmp_path / "sweep.csv"
        result = runner.invoke(main, ["sweep", "--scenario", small_scenario_file,
                                      "--config", str(cfg), "--out", str(out)])
        assert result.exit_code == 0
        lines = out.read_text().splitlines()[1:]
        assert len(lines) == len(rows)
        for line, row in zip(lines, rows):
            f, a, b = (float(x) for x in line.split(","))
            assert a == pytest.approx(row["gain_db_config"], abs=1e-6)
            assert b == pytest.approx(row["gain_db_base"], abs=1e-6)

    def test_pattern_matches_cli(self, runner, small_scenario_file, tmp_path):
        with TestClient(create_app(json_scenario(small_scenario_file))) as client:
            rows = client.get("/pattern", params={"theta_min": -10, "theta_max": 10,
                                                  "n": 21, "phi": 0}).json()["rows"]
        out = tmp_path / "pat.csv"
        result = runner.invoke(main, ["pattern", "--scenario", small_scenario_file,
                                      "--theta-min", "-10", "--theta-max", "10",
                                      "--step", "1.0", "--out", str(out)])
        assert result.exit_code == 0
        lines = out.read_text().splitlines()[1:]
        assert len(lines) == len(rows)
        for line, row in zip(lines, rows):
            theta, db = (float(x) for x in line.split(","))
            assert theta == pytest.approx(row["theta_deg"])
            assert db == pytest.approx(row["power_db"], abs=1e-6)


def json_scenario(path):
    from ristwin.testbed import load_scenario
    return load_scenario(path)

import json
import math
import os
import subprocess
import sys

import pytest

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def run_cli(*args, threads=None):
    env = os.environ.copy()
    env["PYTHONPATH"] = os.path.join(REPO, "src") + os.pathsep + env.get("PYTHONPATH", "")
    if threads is not None:
        env["ENTROFLOW_THREADS"] = str(threads)
    return subprocess.run(
        [sys.executable, "-m", "entroflow", *args],
        capture_output=True,
        text=True,
        env=env,
    )


def payload_of(proc):
    envelope = json.loads(proc.stdout)
    return envelope["payload"], envelope


@pytest.fixture()
def exchange_config(tmp_path):
    cfg = {
        "schema_version": 1,
        "kind": "exchange",
        "epsilon": [0.0, 1.0, 2.0, 3.0],
        "gamma": 1.0,
        "mu_a": 1.0,
        "mu_b": 0.5,
        "rotations": [[[2, 2], [0, 3], math.pi / 2]],
    }
    path = tmp_path / "exchange.json"
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.fixture()
def clausius_config(tmp_path):
    cfg = {
        "schema_version": 1,
        "kind": "clausius",
        "system": {"levels": [0.0, 1.0]},
        "initial_state": {"kind": "gibbs", "beta": 1.0},
        "strokes": [
            {"kind": "contact", "temperature": 2.0, "phi": math.pi / 2},
            {"kind": "quench", "levels": [0.0, 2.0]},
            {"kind": "contact", "temperature": 1.0, "phi": math.pi / 2},
            {"kind": "quench", "levels": [0.0, 1.0]},
        ],
    }
    path = tmp_path / "clausius.json"
    path.write_text(json.dumps(cfg))
    return str(path)


class TestIneq:
    def test_ssa_passes(self):
        proc = run_cli("ineq", "--check", "ssa", "--dims", "2,2,2", "--trials", "60", "--seed", "7")
        assert proc.returncode == 0, proc.stderr
        payload, envelope = payload_of(proc)
        assert payload["all_pass"] is True
        assert payload["worst_slack"] >= -1e-9
        assert envelope["config"]["seed"] == 7

    def test_eq1_passes(self):
        proc = run_cli("ineq", "--check", "eq1", "--dims", "2,2,2,2", "--trials", "40", "--seed", "7")
        assert proc.returncode == 0, proc.stderr
        payload, _ = payload_of(proc)
        assert payload["worst_slack"] >= -1e-9

    def test_eq2_passes(self):
        proc = run_cli("ineq", "--check", "eq2", "--dims", "2,2", "--trials", "50", "--seed", "7")
        assert proc.returncode == 0, proc.stderr
        payload, _ = payload_of(proc)
        assert payload["worst_identity_gap"] <= 1e-9
        assert payload["worst_slack"] >= -1e-10

    def test_ssa_needs_three_factors(self):
        proc = run_cli("ineq", "--check", "ssa", "--dims", "2", "--trials", "5", "--seed", "7")
        assert proc.returncode == 2

    def test_bad_flag_exits_2(self):
        proc = run_cli("ineq", "--check", "nope", "--dims", "2,2,2", "--trials", "5", "--seed", "7")
        assert proc.returncode == 2


class TestExchange:
    def test_entangled_demo_payload(self, exchange_config):
        proc = run_cli("exchange", "--case", "v", "--config", exchange_config)
        assert proc.returncode == 0, proc.stderr
        payload, _ = payload_of(proc)
        z = sum(math.exp(-k) for k in range(4))
        assert abs(payload["q_a"] - (-2 * math.exp(-2) / z)) <= 1e-12
        assert payload["energy_conserving"] is True

    def test_product_demo_payload(self, exchange_config):
        proc = run_cli("exchange", "--case", "s", "--config", exchange_config)
        assert proc.returncode == 0, proc.stderr
        payload, _ = payload_of(proc)
        z = sum(math.exp(-k) for k in range(4))
        assert abs(payload["q_a"] - 2 * (math.exp(-3) - math.exp(-4)) / z**2) <= 1e-12

    def test_zero_angle_override(self, exchange_config):
        proc = run_cli("exchange", "--case", "v", "--config", exchange_config, "--phi", "0")
        payload, _ = payload_of(proc)
        assert payload["q_a"] == 0.0
        assert payload["q_b"] == 0.0
        assert payload["ds_a"] == 0.0

    def test_sweep_emits_csv(self, exchange_config):
        proc = run_cli(
            "exchange", "--case", "v", "--config", exchange_config, "--sweep", "phi=0:1.5:4"
        )
        assert proc.returncode == 0, proc.stderr
        lines = proc.stdout.strip().splitlines()
        assert lines[0] == "phi,Q_A,Q_B,dS_A,dS_B,I_init,I_final,W"
        assert len(lines) == 5
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert float(first[1]) == 0.0

    def test_non_degenerate_rotation_exits_3(self, tmp_path, exchange_config):
        cfg = json.loads(open(exchange_config).read())
        cfg["rotations"] = [[[0, 0], [1, 1], 0.3]]
        path = tmp_path / "bad_rot.json"
        path.write_text(json.dumps(cfg))
        proc = run_cli("exchange", "--case", "v", "--config", str(path))
        assert proc.returncode == 3

    def test_schema_violation_exits_2(self, tmp_path, exchange_config):
        cfg = json.loads(open(exchange_config).read())
        cfg["schema_version"] = 99
        path = tmp_path / "bad_schema.json"
        path.write_text(json.dumps(cfg))
        proc = run_cli("exchange", "--case", "v", "--config", str(path))
        assert proc.returncode == 2

    def test_missing_epsilon_exits_2(self, tmp_path, exchange_config):
        cfg = json.loads(open(exchange_config).read())
        del cfg["epsilon"]
        path = tmp_path / "no_eps.json"
        path.write_text(json.dumps(cfg))
        proc = run_cli("exchange", "--case", "v", "--config", str(path))
        assert proc.returncode == 2


class TestClausius:
    def test_two_reservoir_cycle(self, clausius_config):
        proc = run_cli("clausius", "--config", clausius_config)
        assert proc.returncode == 0, proc.stderr
        payload, _ = payload_of(proc)
        assert payload["converged"] is True
        assert payload["clausius_sum"] <= 1e-8
        assert all(s["slack"] <= 1e-9 for s in payload["strokes"])

    def test_zero_angle_contacts(self, tmp_path):
        cfg = {
            "schema_version": 1,
            "kind": "clausius",
            "system": {"levels": [0.0, 1.0]},
            "initial_state": {"kind": "gibbs", "beta": 1.0},
            "strokes": [
                {"kind": "contact", "temperature": 2.0, "phi": 0.0},
                {"kind": "contact", "temperature": 1.0, "phi": 0.0},
            ],
        }
        path = tmp_path / "zero.json"
        path.write_text(json.dumps(cfg))
        proc = run_cli("clausius", "--config", str(path))
        assert proc.returncode == 0
        payload, _ = payload_of(proc)
        assert payload["clausius_sum"] == 0.0

    def test_non_restoring_quench_exits_2(self, tmp_path):
        cfg = {
            "schema_version": 1,
            "kind": "clausius",
            "system": {"levels": [0.0, 1.0]},
            "initial_state": {"kind": "gibbs", "beta": 1.0},
            "strokes": [
                {"kind": "contact", "temperature": 2.0, "phi": 1.0},
                {"kind": "quench", "levels": [0.0, 2.0]},
            ],
        }
        path = tmp_path / "bad_cycle.json"
        path.write_text(json.dumps(cfg))
        proc = run_cli("clausius", "--config", str(path))
        assert proc.returncode == 2

    def test_no_convergence_exits_4(self, tmp_path):
        cfg = {
            "schema_version": 1,
            "kind": "clausius",
            "system": {"levels": [0.0, 1.0]},
            "initial_state": {"kind": "gibbs", "beta": 9.0},
            "strokes": [{"kind": "contact", "temperature": 2.0, "phi": 0.15}],
        }
        path = tmp_path / "slow.json"
        path.write_text(json.dumps(cfg))
        proc = run_cli("clausius", "--config", str(path), "--max-cycles", "2", "--fp-tol", "1e-12")
        assert proc.returncode == 4


class TestGas:
    def test_reversal_demo(self):
        proc = run_cli(
            "gas", "--ma", "10", "--mb", "1", "--ta", "2", "--tb", "1",
            "--gamma", "1", "--mode", "entangled", "--samples", "50000", "--seed", "1",
        )
        assert proc.returncode == 0, proc.stderr
        payload, _ = payload_of(proc)
        x = payload["x"]
        assert abs(payload["mean_fractional_gain"] - 2 * x * (x - 1)) <= 3 * payload["stderr_fractional_gain"]
        assert payload["reversal_ratio"] == 5.0
        assert payload["verdict"] == 1

    def test_product_mode(self):
        proc = run_cli(
            "gas", "--ma", "10", "--mb", "1", "--ta", "2", "--tb", "1",
            "--gamma", "1", "--mode", "product", "--samples", "100000", "--seed", "1",
        )
        payload, _ = payload_of(proc)
        assert payload["mean_de_a"] < 0
        assert payload["mean_fractional_gain"] is None

    def test_invalid_temperature_exits_2(self):
        proc = run_cli(
            "gas", "--ma", "10", "--mb", "1", "--ta", "0", "--tb", "1",
            "--gamma", "1", "--mode", "entangled", "--samples", "100", "--seed", "1",
        )
        assert proc.returncode == 2


class TestReproducibility:
    GAS_ARGS = (
        "gas", "--ma", "10", "--mb", "1", "--ta", "2", "--tb", "1",
        "--gamma", "1", "--mode", "entangled", "--samples", "150000", "--seed", "5",
    )

    def test_payload_stable_across_runs_and_threads(self):
        payloads = set()
        for threads in (1, 4, 8):
            proc = run_cli(*self.GAS_ARGS, threads=threads)
            assert proc.returncode == 0, proc.stderr
            payload, _ = payload_of(proc)
            payloads.add(json.dumps(payload, sort_keys=True))
        proc = run_cli(*self.GAS_ARGS, threads=1)
        payload, _ = payload_of(proc)
        payloads.add(json.dumps(payload, sort_keys=True))
        assert len(payloads) == 1

    def test_config_echoed(self):
        proc = run_cli(*self.GAS_ARGS)
        _, envelope = payload_of(proc)
        assert envelope["config"]["samples"] == 150000
        assert envelope["config"]["seed"] == 5
        assert envelope["tool_version"]

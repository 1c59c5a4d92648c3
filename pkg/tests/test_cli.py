import json
import subprocess
import sys

import numpy as np
import pytest

from chancap import channel_to_json, identity_channel
from chancap.cli import main


def run_cli(*args, timeout=300):
    return subprocess.run(
        [sys.executable, "-m", "chancap.cli", *args],
        capture_output=True,
        text=True,
        timeout=timeout,
    )


@pytest.fixture
def identity_file(tmp_path):
    path = tmp_path / "identity.json"
    path.write_text(channel_to_json(identity_channel(2)))
    return str(path)


class TestCapacityCommand:
    def test_identity_channel_file(self, identity_file):
        res = run_cli("capacity", identity_file, "--format", "json")
        assert res.returncode == 0
        record = json.loads(res.stdout)
        assert abs(record["ce_bits"] - 2.0) < 1e-4
        assert abs(record["ch_bits"] - 1.0) < 1e-4
        assert record["ce_converged"] and record["ch_converged"]

    def test_fully_depolarizing_named(self):
        res = run_cli("capacity", "--named", "depolarizing:d=2,p=1", "--format", "json")
        assert res.returncode == 0
        record = json.loads(res.stdout)
        assert abs(record["ce_bits"]) < 1e-6 and abs(record["ch_bits"]) < 1e-6
        assert record["ratio"] == "undefined"

    def test_corrupt_kraus_shape(self, tmp_path):
        payload = json.loads(channel_to_json(identity_channel(2)))
        payload["kraus"][0] = payload["kraus"][0][:1]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(payload))
        res = run_cli("capacity", str(bad))
        assert res.returncode == 1
        assert "2x2" in res.stderr

    def test_malformed_json_reports_position(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"d_in": 2,\n  broken')
        res = run_cli("capacity", str(bad))
        assert res.returncode == 1
        assert "line" in res.stderr and "column" in res.stderr

    def test_non_trace_preserving_rejected(self, tmp_path):
        payload = json.loads(channel_to_json(identity_channel(2)))
        payload["kraus"][0][0][0] = [0.5, 0.0]
        bad = tmp_path / "tp.json"
        bad.write_text(json.dumps(payload))
        res = run_cli("capacity", str(bad))
        assert res.returncode == 1
        assert "trace preserving" in res.stderr

    def test_missing_channel(self):
        res = run_cli("capacity")
        assert res.returncode == 1

    def test_non_convergence_exit_code(self):
        res = run_cli(
            "capacity", "--named", "random:din=3,dout=3,seed=4", "--max-iter", "1",
            "--format", "json",
        )
        assert res.returncode == 2
        record = json.loads(res.stdout)
        assert not (record["ce_converged"] and record["ch_converged"])


class TestVerifyRatioCommand:
    def test_small_fuzz_run(self):
        res = run_cli(
            "verify-ratio", "--trials", "5", "--din", "2", "--dout", "2", "--jobs", "1"
        )
        assert res.returncode == 0
        lines = res.stdout.strip().splitlines()
        assert lines[0] == "trial,ce_bits,ch_bits,ratio,prefactor,slack_bits,converged"
        min_slack = float([l for l in lines if l.startswith("min_slack_bits")][0].split(",")[1])
        assert min_slack >= -1e-4

    def test_byte_identical_reruns(self):
        args = ("verify-ratio", "--trials", "2", "--seed", "7", "--jobs", "1")
        assert run_cli(*args).stdout == run_cli(*args).stdout

    def test_dimension_one_trivial(self):
        res = run_cli("verify-ratio", "--trials", "2", "--din", "1", "--dout", "2")
        assert res.returncode == 0
        assert "trivially" in res.stdout


class TestVerifySandwichCommand:
    def test_fuzz_run(self):
        res = run_cli("verify-sandwich", "--trials", "100", "--din", "4", "--jobs", "1")
        assert res.returncode == 0
        assert "max_violation_nats" in res.stdout
        rows = dict(
            line.split(",") for line in res.stdout.strip().splitlines()[1:]
        )
        assert float(rows["upper_bound"]) <= 1e-9
        assert float(rows["lower_bound"]) <= 1e-9


class TestChainCommand:
    def test_maximally_entangled_default(self):
        res = run_cli("chain", "--named", "identity:d=2")
        assert res.returncode == 0
        assert "monotone_ok,True" in res.stdout
        assert "support_margins" in res.stdout

    def test_constant_channel_zero_head(self):
        res = run_cli("chain", "--named", "depolarizing:d=2,p=1")
        assert res.returncode == 0
        head = [l for l in res.stdout.splitlines() if l.startswith("mutual_info")][0]
        assert abs(float(head.split(",")[1])) < 1e-9

    def test_random_state_deterministic(self):
        args = ("chain", "--named", "random:din=2,dout=2,seed=3", "--state", "random:5")
        assert run_cli(*args).stdout == run_cli(*args).stdout

    def test_mixed_state_rejected(self):
        quarter = json.dumps(np.eye(4).tolist())
        res = run_cli("chain", "--named", "identity:d=2", "--state", quarter)
        assert res.returncode == 1
        assert "pure state required" in res.stderr


class TestSweepCommand:
    def test_small_sweep_with_svg(self, tmp_path):
        out = tmp_path / "sweep.csv"
        svg = tmp_path / "sweep.svg"
        res = run_cli(
            "sweep", "--points", "5", "--out", str(out), "--svg", str(svg), "--jobs", "1"
        )
        assert res.returncode == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "p,ce_bits,ch_bits,ratio"
        first = lines[1].split(",")
        assert abs(float(first[0])) < 1e-12
        assert abs(float(first[1]) - 2.0) < 1e-4
        assert abs(float(first[2]) - 1.0) < 1e-4
        assert abs(float(first[3]) - 2.0) < 1e-4
        probe = [l for l in lines if l.startswith("0.999,")][0].split(",")
        assert abs(float(probe[3]) - 3.0) / 3.0 < 0.05
        total_noise = [l for l in lines if l.startswith("1,")][0]
        assert total_noise.endswith("undefined")
        text = svg.read_text()
        assert text.startswith("<svg") and "polyline" in text

    def test_unwritable_output(self):
        res = run_cli("sweep", "--points", "3", "--out", "/nonexistent/dir/x.csv")
        assert res.returncode == 1

    def test_in_process_entry_point(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code = main(["sweep", "--points", "3", "--out", str(out), "--jobs", "1"])
        assert code == 0
        assert out.read_text().startswith("p,ce_bits,ch_bits,ratio")


class TestConfigValidation:
    def test_nonpositive_tolerance(self):
        res = run_cli("verify-ratio", "--tol", "0", "--trials", "1")
        assert res.returncode == 1
        assert "tol" in res.stderr

    def test_zero_trials(self):
        res = run_cli("verify-sandwich", "--trials", "0")
        assert res.returncode == 1

    def test_unknown_named_channel(self):
        res = run_cli("capacity", "--named", "amplitude:d=2")
        assert res.returncode == 1


class TestParallelism:
    def test_jobs_flag_keeps_output_stable(self):
        serial = run_cli("verify-sandwich", "--trials", "40", "--din", "3", "--jobs", "1")
        parallel = run_cli("verify-sandwich", "--trials", "40", "--din", "3", "--jobs", "4")
        assert serial.returncode == parallel.returncode == 0
        assert serial.stdout == parallel.stdout

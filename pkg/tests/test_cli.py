import json
import subprocess
import sys

import pytest

from pspin.cli import main, selftest


def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "pspin"] + args, capture_output=True, text=True
    )


class TestAnalyticCommand:
    def test_bundle_passthrough(self, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["analytic", "--p", "3", "--beta", "8", "--out", str(out)])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert rep["bundle"]["p"] == 3
        assert rep["bundle"]["q_star"] == pytest.approx(0.9777643271011206)
        assert rep["meta"]["build"]

    def test_parisi_check_passes(self, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["analytic", "--p", "3", "--beta", "8", "--check", "parisi", "--out", str(out)])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert rep["check"]["pass"] is True
        assert rep["check"]["residual"] < 1e-8

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["analytic", "--p", "4", "--beta", "6", "--seed", "3", "--out", str(a)])
        main(["analytic", "--p", "4", "--beta", "6", "--seed", "3", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_validation_exit_code(self):
        assert main(["analytic", "--p", "1", "--beta", "8"]) == 2

    def test_high_temperature_numeric_failure(self):
        # no low-temperature solution at beta=0.5: numeric failure, exit 3
        assert main(["analytic", "--p", "3", "--beta", "0.5"]) in (2, 3)


class TestEnumerateCommand:
    def test_writes_json_and_csv(self, tmp_path):
        out, csv = tmp_path / "r.json", tmp_path / "c.csv"
        rc = main([
            "enumerate", "--p", "3", "--n", "6", "--starts", "100",
            "--seed", "1", "--out", str(out), "--csv", str(csv),
        ])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert rep["count"] == len(rep["values"]) > 0
        assert csv.read_text().startswith("disorder_seed")

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            main(["enumerate", "--p", "3", "--n", "6", "--starts", "80",
                  "--seed", "7", "--out", str(path)])
        assert a.read_bytes() == b.read_bytes()


class TestKacriceCommand:
    def test_reports_log_count(self, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["kacrice", "--p", "3", "--n", "10", "--out", str(out)])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert rep["log_mean_count"] > 0


class TestGeometryValidation:
    def test_rejects_p_two(self):
        assert main(["geometry", "--p", "2", "--disorders", "1"]) == 2

    def test_tempchaos_requires_beta2(self):
        assert main(["tempchaos", "--p", "3", "--n", "8", "--disorders", "1"]) == 2

    def test_disorderchaos_requires_s(self):
        assert main(["disorderchaos", "--p", "3", "--n", "8", "--disorders", "1"]) == 2


class TestSelftest:
    def test_all_pass(self):
        results = selftest()
        assert all(ok for _, ok, _ in results)

    def test_negative_control(self):
        results = selftest(c_p_override=0.5)
        parisi = [ok for name, ok, _ in results if name.startswith("parisi")]
        assert not any(parisi)

    def test_cli_exit_codes(self):
        assert main(["selftest"]) == 0
        assert main(["selftest", "--wrong-cp", "0.5"]) == 3

    def test_console_entrypoint(self):
        proc = run_cli(["selftest"])
        assert proc.returncode == 0
        assert "PASS" in proc.stdout

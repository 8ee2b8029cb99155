"""
End-to-end tests of the wickbench command line.
"""

import csv
import json

import pytest

from wickbench.cli_main import get_version, main
from wickbench.config import reset_config
from wickbench.results import MANIFEST_FILENAME, RESULTS_FILENAME, file_digest

DIMER = {
    "schema": 1,
    "model": {"geometry": {"d": 1, "L": 2}, "onsite": [0.2, -0.2]},
    "state": {"beta": 1.0},
    "drive": {"epsilon": 0.05, "eta": 1.0},
}


def run_cli(args):
    """Run main() and return its exit code."""
    reset_config()
    with pytest.raises(SystemExit) as excinfo:
        main(args)
    return excinfo.value.code


def read_rows(directory):
    with (directory / RESULTS_FILENAME).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


class TestSmallRuns:
    """Test fast run kinds end to end."""

    def test_single_mode_spectrum(self, tmp_path, write_config):
        """One mode with on-site energy 0.7 has many-body energies 0 and 0.7."""
        path = write_config(
            {
                "schema": 1,
                "model": {"geometry": {"d": 1, "L": 1}, "onsite": 0.7},
                "observable": {"site": [0]},
            }
        )
        out = tmp_path / "spectrum"
        assert run_cli(["spectrum", "--config", str(path), "--out", str(out)]) == 0
        energies = sorted(float(row["energy"]) for row in read_rows(out))
        assert energies == pytest.approx([0.0, 0.7], abs=1e-12)
        manifest = json.loads((out / MANIFEST_FILENAME).read_text(encoding="utf-8"))
        assert manifest["kind"] == "spectrum"

    def test_gibbs_passes(self, tmp_path, write_config):
        """The Gibbs run passes normalization, KMS and invariance."""
        out = tmp_path / "gibbs"
        assert run_cli(["gibbs", "--config", str(write_config(DIMER)), "--out", str(out)]) == 0
        manifest = json.loads((out / MANIFEST_FILENAME).read_text(encoding="utf-8"))
        assert set(manifest["verdicts"].values()) == {"pass"}
        assert manifest["files"] == {RESULTS_FILENAME: file_digest(out / RESULTS_FILENAME)}

    def test_wick_check_passes(self, tmp_path, write_config):
        """The first-order Wick rotation check passes on the dimer."""
        out = tmp_path / "wick"
        assert run_cli(["wick-check", "--config", str(write_config(DIMER)), "--out", str(out)]) == 0
        manifest = json.loads((out / MANIFEST_FILENAME).read_text(encoding="utf-8"))
        assert manifest["verdicts"]["wick_rotation:n=1"] == "pass"
        anchors = {row["anchor"] for row in read_rows(out)}
        assert "wick_rotation:n=1" in anchors


class TestFailures:
    """Test exit codes for bad input."""

    def test_malformed_json(self, tmp_path, capsys):
        """Malformed JSON exits 2 with the position in the message."""
        path = tmp_path / "broken.json"
        path.write_text('{"schema": 1,\n "state": }', encoding="utf-8")
        assert run_cli(["gibbs", "--config", str(path)]) == 2
        response = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert response["error"] == "configuration_error"
        assert "line 2" in response["message"]

    def test_invalid_value(self, write_config):
        """Out-of-range values exit 2."""
        path = write_config({"schema": 1, "state": {"beta": -1.0}})
        assert run_cli(["gibbs", "--config", str(path)]) == 2

    def test_interacting_twopoint(self, tmp_path, write_config):
        """Two-point runs refuse interacting models with exit 2."""
        path = write_config({**DIMER, "model": {**DIMER["model"], "interaction_u": 1.0, "coupling": 0.5}})
        assert run_cli(["twopoint", "--config", str(path), "--out", str(tmp_path / "tp")]) == 2

    def test_mode_budget(self, tmp_path, write_config, monkeypatch):
        """A lattice beyond WICKBENCH_MAX_DIM exits 3."""
        monkeypatch.setenv("WICKBENCH_MAX_DIM", "4")
        path = write_config({"schema": 1, "model": {"geometry": {"d": 1, "L": 3}}})
        assert run_cli(["spectrum", "--config", str(path), "--out", str(tmp_path / "big")]) == 3

    def test_slow_switch_onset(self, tmp_path, write_config):
        """A rational switch with h ∝ ξ in d = 1 is refused with exit 2."""
        path = write_config({**DIMER, "drive": {**DIMER["drive"], "switch": {"type": "rational", "a": 1.0, "n": 2}}})
        assert run_cli(["gibbs", "--config", str(path), "--out", str(tmp_path / "slow")]) == 2

    def test_fast_switch_onset(self, tmp_path, write_config):
        """A rational switch with h ∝ ξ⁴ in d = 1 is accepted."""
        path = write_config({**DIMER, "drive": {**DIMER["drive"], "switch": {"type": "rational", "a": 1.0, "n": 5}}})
        assert run_cli(["spectrum", "--config", str(path), "--out", str(tmp_path / "fast")]) == 0

    def test_missing_config_flag(self):
        """--config is required."""
        assert run_cli(["gibbs"]) == 2


class TestVersion:
    """Test the version lookup."""

    def test_reads_project_version(self, tmp_path):
        """The version comes from the [project] table."""
        path = tmp_path / "pyproject.toml"
        path.write_text('[project]\nname = "wickbench"\nversion = "9.8.7"\n', encoding="utf-8")
        assert get_version(path) == "9.8.7"

    def test_unreadable_project_file(self, tmp_path):
        """A missing file or a file without a version gives "unknown"."""
        assert get_version(tmp_path / "missing.toml") == "unknown"
        path = tmp_path / "pyproject.toml"
        path.write_text('[tool.other]\nkey = 1\n', encoding="utf-8")
        assert get_version(path) == "unknown"


class TestReproducibility:
    """Test byte-identical artifacts."""

    def sweep_config(self, write_config):
        return write_config({**DIMER, "sweep": {"grids": {"eta": [1.0], "beta": [1.0, 2.0]}}})

    def test_rerun_identical(self, tmp_path, write_config):
        """Two runs of the same config and seed write identical files."""
        path = self.sweep_config(write_config)
        first, second = tmp_path / "first", tmp_path / "second"
        assert run_cli(["adiabatic-sweep", "--config", str(path), "--out", str(first), "--jobs", "1"]) == 0
        assert run_cli(["adiabatic-sweep", "--config", str(path), "--out", str(second), "--jobs", "1"]) == 0
        for name in (RESULTS_FILENAME, MANIFEST_FILENAME):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_jobs_do_not_change_output(self, tmp_path, write_config):
        """The worker count does not change the results."""
        path = self.sweep_config(write_config)
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        assert run_cli(["adiabatic-sweep", "--config", str(path), "--out", str(serial), "--jobs", "1"]) == 0
        assert run_cli(["adiabatic-sweep", "--config", str(path), "--out", str(parallel), "--jobs", "2"]) == 0
        for name in (RESULTS_FILENAME, MANIFEST_FILENAME):
            assert (serial / name).read_bytes() == (parallel / name).read_bytes()
        rows = read_rows(serial)
        assert [row["index"] for row in rows] == ["0", "1"]


@pytest.mark.slow
class TestStudies:
    """Longer studies across β and η."""

    def test_kubo(self, tmp_path, write_config):
        """The Kubo run completes with its β sweep."""
        path = write_config({**DIMER, "sweep": {"grids": {"beta": [1.0, 2.0, 4.0]}}})
        code = run_cli(["kubo", "--config", str(path), "--out", str(tmp_path / "kubo")])
        assert code in (0, 1)
        assert (tmp_path / "kubo" / MANIFEST_FILENAME).exists()

    def test_kubo_epsilon_extrapolation(self, tmp_path, write_config):
        """An ε grid adds the extrapolation verdict, which passes on the dimer."""
        path = write_config({**DIMER, "sweep": {"grids": {"epsilon": [0.02, 0.04, 0.08]}}})
        out = tmp_path / "kubo_eps"
        assert run_cli(["kubo", "--config", str(path), "--out", str(out)]) == 0
        manifest = json.loads((out / MANIFEST_FILENAME).read_text(encoding="utf-8"))
        assert manifest["verdicts"]["linear_response_extrapolation"] == "pass"

    def test_improved_sweep(self, tmp_path, write_config):
        """Flatter switches steepen the η-slope of the periodized gap."""
        path = write_config(
            {**DIMER, "sweep": {"grids": {"eta": [0.25, 0.5, 1.0], "m": [0, 1], "beta": [2.0]}}}
        )
        code = run_cli(["improved-sweep", "--config", str(path), "--out", str(tmp_path / "imp")])
        assert code in (0, 1)

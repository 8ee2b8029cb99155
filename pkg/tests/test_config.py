"""
Tests for the layered experiment configuration.
"""

import pytest

from wickbench.config import ConfigurationError, ExperimentConfig, get_config, load_from_file
from wickbench.config.loaders import EnvironmentKeys, config_from_dict, load_config, max_modes_budget
from wickbench.config.schema import ModelConfig, StateConfig

BASE = {"schema": 1, "model": {"geometry": {"d": 1, "L": 2}}}


class TestSchema:
    """Test dataclass validation."""

    def test_defaults(self):
        """The default experiment is a valid two-site chain."""
        config = ExperimentConfig()
        assert config.model.geometry.L == 2
        assert config.observable.site == [1]
        assert config.run.output_dir == "wickbench-out"

    def test_rejects_non_positive_beta(self):
        """β must be positive."""
        with pytest.raises(ConfigurationError, match="state.beta"):
            ExperimentConfig(state=StateConfig(beta=0.0))

    def test_rejects_positive_time(self):
        """The drive is only evaluated at t ≤ 0."""
        with pytest.raises(ConfigurationError, match="drive.t"):
            config_from_dict({"schema": 1, "drive": {"t": 1.0}})

    def test_onsite_length(self):
        """Per-site potentials need one value per site."""
        with pytest.raises(ConfigurationError, match="model.onsite"):
            ExperimentConfig(model=ModelConfig(onsite=[0.1, 0.2, 0.3]))

    def test_site_outside_torus(self):
        """Observable sites must lie on the torus."""
        with pytest.raises(ConfigurationError, match="observable.site"):
            config_from_dict({"schema": 1, "observable": {"site": [5]}})

    def test_bond_needs_partner(self):
        """Bond observables name a partner site."""
        with pytest.raises(ConfigurationError, match="partner"):
            config_from_dict({"schema": 1, "observable": {"kind": "bond", "site": [0]}})

    def test_unknown_switch(self):
        """Switch types come from a fixed list."""
        with pytest.raises(ConfigurationError, match="drive.switch.type"):
            config_from_dict({"schema": 1, "drive": {"switch": {"type": "step"}}})

    def test_sweep_axes(self):
        """Grid axes are known names with valid values."""
        with pytest.raises(ConfigurationError, match="sweep.grids.omega"):
            config_from_dict({"schema": 1, "sweep": {"grids": {"omega": [1.0]}}})
        with pytest.raises(ConfigurationError, match="sweep.grids.t"):
            config_from_dict({"schema": 1, "sweep": {"grids": {"t": [0.5]}}})

    def test_run_order(self):
        """Orders run from one to three."""
        with pytest.raises(ConfigurationError, match="run.order"):
            config_from_dict({"schema": 1, "run": {"order": 4}})

    def test_hashed_data_drops_plumbing(self):
        """Output directory, jobs and logging do not enter the hash."""
        config = config_from_dict({"schema": 1, "run": {"output_dir": "elsewhere", "jobs": 4}})
        assert config.hashed_data()["run"] == {"kind": None, "order": 1}


class TestFileLayer:
    """Test JSON parsing."""

    def test_malformed_json(self, tmp_path):
        """Malformed JSON reports the line and column."""
        path = tmp_path / "broken.json"
        path.write_text('{\n  "schema": 1,\n  "state": {"beta": }\n}\n', encoding="utf-8")
        with pytest.raises(ConfigurationError, match="line 3"):
            load_from_file(path)

    def test_missing_file(self, tmp_path):
        """Unreadable files are configuration errors."""
        with pytest.raises(ConfigurationError, match="cannot read"):
            load_from_file(tmp_path / "absent.json")

    def test_unknown_field(self, write_config):
        """Unknown fields are named in the error."""
        path = write_config({"schema": 1, "state": {"beta": 1.0, "temperature": 2.0}})
        with pytest.raises(ConfigurationError, match="temperature"):
            load_from_file(path)

    def test_unknown_section(self):
        """Unknown top-level sections are refused."""
        with pytest.raises(ConfigurationError, match="extras"):
            config_from_dict({"schema": 1, "extras": {}})

    def test_missing_schema(self):
        """The schema version is mandatory."""
        with pytest.raises(ConfigurationError, match="schema"):
            config_from_dict({"state": {"beta": 1.0}})

    def test_wrong_schema(self):
        """Only the current schema version is accepted."""
        with pytest.raises(ConfigurationError, match="version"):
            config_from_dict({"schema": 2})

    def test_nested_sections(self, write_config):
        """Nested geometry and perturbation sections are built."""
        path = write_config(
            {
                "schema": 1,
                "model": {"geometry": {"d": 1, "L": 3}, "onsite": [0.1, 0.2, 0.3]},
                "drive": {"perturbation": {"kind": "density", "site": [2]}},
            }
        )
        config = load_from_file(path)
        assert config.model.geometry.L == 3
        assert config.drive.perturbation.site == [2]


class TestLayers:
    """Test precedence: arguments over environment over file over defaults."""

    def test_file_then_defaults(self, write_config):
        """Values absent from the file keep their defaults."""
        path = write_config(BASE)
        config = load_config(["gibbs", "--config", str(path)])
        assert config.run.kind == "gibbs"
        assert config.state.beta == 4.0
        assert config.run.jobs is None

    def test_environment_over_file(self, write_config, monkeypatch):
        """WICKBENCH_JOBS and WICKBENCH_LOG_LEVEL override the file."""
        path = write_config({**BASE, "run": {"jobs": 2, "log_level": "ERROR"}})
        monkeypatch.setenv(EnvironmentKeys.JOBS, "3")
        monkeypatch.setenv(EnvironmentKeys.LOG_LEVEL, "debug")
        config = load_config(["gibbs", "--config", str(path)])
        assert config.run.jobs == 3
        assert config.run.log_level == "DEBUG"

    def test_arguments_over_environment(self, write_config, monkeypatch):
        """Command-line flags win over the environment."""
        path = write_config(BASE)
        monkeypatch.setenv(EnvironmentKeys.JOBS, "3")
        config = load_config(
            ["gibbs", "--config", str(path), "--jobs", "5", "--seed", "9", "--out", "run1"]
        )
        assert config.run.jobs == 5
        assert config.run.seed == 9
        assert config.run.output_dir == "run1"

    def test_invalid_jobs(self, write_config, monkeypatch):
        """A non-numeric worker count is a configuration error."""
        path = write_config(BASE)
        monkeypatch.setenv(EnvironmentKeys.JOBS, "many")
        with pytest.raises(ConfigurationError, match=EnvironmentKeys.JOBS):
            load_config(["gibbs", "--config", str(path)])

    def test_max_dim_budget(self, write_config, monkeypatch):
        """WICKBENCH_MAX_DIM is a Fock dimension turned into a mode budget."""
        path = write_config(BASE)
        monkeypatch.setenv(EnvironmentKeys.MAX_DIM, "64")
        assert load_config(["gibbs", "--config", str(path)]).controls.max_modes == 6

    def test_max_dim_too_small(self, monkeypatch):
        """A dimension below two allows no modes."""
        monkeypatch.setenv(EnvironmentKeys.MAX_DIM, "1")
        with pytest.raises(ConfigurationError):
            max_modes_budget(12)

    def test_unknown_kind(self, write_config):
        """argparse rejects unknown run kinds."""
        path = write_config(BASE)
        with pytest.raises(SystemExit) as excinfo:
            load_config(["explode", "--config", str(path)])
        assert excinfo.value.code == 2

    def test_singleton(self, write_config):
        """get_config loads once and then returns the cached config."""
        path = write_config(BASE)
        first = get_config(["spectrum", "--config", str(path)])
        assert get_config() is first

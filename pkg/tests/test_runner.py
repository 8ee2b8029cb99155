"""
Tests for the run registry, grid expansion and run execution.
"""

import json

import pytest

from wickbench.config.loaders import config_from_dict
from wickbench.config.schema import RUN_KINDS
from wickbench.exceptions import JobBudgetExceeded
from wickbench.results import MANIFEST_FILENAME, RESULTS_FILENAME, ResultRecord
from wickbench.runner import RunOutcome, RunRegistry, create_registry, execute, expand_grid, job_mapper


class ValueRecord(ResultRecord):
    value: float


def make_config(tmp_path, kind="gibbs"):
    return config_from_dict(
        {"schema": 1, "run": {"kind": kind, "output_dir": str(tmp_path / "out")}}
    )


class TestRegistry:
    """Test run registration."""

    def test_all_kinds_registered(self):
        """Every run kind has a registered function."""
        assert create_registry().kinds == sorted(RUN_KINDS)

    def test_sweeps_are_parallel(self):
        """Only the sweep kinds use the worker pool."""
        registry = create_registry()
        parallel = [kind for kind in registry.kinds if registry.get(kind).parallel]
        assert parallel == ["adiabatic-sweep", "improved-sweep"]

    def test_duplicate_registration(self):
        """A kind can only be registered once."""
        registry = RunRegistry()
        registry.run("gibbs")(lambda ctx: RunOutcome())
        with pytest.raises(ValueError):
            registry.run("gibbs")(lambda ctx: RunOutcome())

    def test_unknown_kind(self):
        """Looking up an unregistered kind fails."""
        with pytest.raises(ValueError):
            RunRegistry().get("gibbs")


class TestExpandGrid:
    """Test sweep grid expansion."""

    def test_axis_order(self):
        """Points follow the canonical axis order, not the mapping order."""
        points = expand_grid({"beta": [1.0, 2.0], "eta": [0.5]}, 10)
        assert points == [(0.5, 1.0), (0.5, 2.0)]

    def test_duplicates_dropped(self):
        """Repeated axis values collapse to one point."""
        assert expand_grid({"eta": [0.5, 0.5, 1.0]}, 10) == [(0.5,), (1.0,)]

    def test_budget(self):
        """Grids beyond max_grid_points are refused."""
        with pytest.raises(JobBudgetExceeded):
            expand_grid({"eta": [0.1, 0.2, 0.3], "beta": [1.0, 2.0]}, 5)


class TestOutcome:
    """Test exit codes of run outcomes."""

    def test_passing(self):
        """Passing verdicts exit 0."""
        outcome = RunOutcome()
        outcome.verdict("kms", True)
        assert outcome.verdicts == {"kms": "pass"}
        assert outcome.exit_code == 0

    def test_failed_verdict(self):
        """A failed verdict exits 1."""
        outcome = RunOutcome()
        outcome.verdict("kms", False)
        assert outcome.exit_code == 1

    def test_failed_rows(self):
        """Failed sweep rows exit 3 even when verdicts pass."""
        outcome = RunOutcome(failures=[{"index": 0, "message": "UnitarityLost"}])
        outcome.verdict("kms", True)
        assert outcome.exit_code == 3


class TestExecute:
    """Test run execution and artifacts."""

    def test_writes_artifacts(self, tmp_path):
        """A run writes its rows and manifest under the output directory."""
        registry = RunRegistry()

        @registry.run("gibbs")
        def fake(ctx):
            outcome = RunOutcome(records=[ValueRecord(anchor="value", value=ctx.rng.uniform())])
            outcome.verdict("always", True)
            return outcome

        assert execute(make_config(tmp_path), registry) == 0
        out = tmp_path / "out"
        lines = (out / RESULTS_FILENAME).read_text(encoding="utf-8").splitlines()
        assert lines[0] == "anchor,config_hash,value"
        manifest = json.loads((out / MANIFEST_FILENAME).read_text(encoding="utf-8"))
        assert manifest["kind"] == "gibbs"
        assert manifest["verdicts"] == {"always": "pass"}
        assert lines[1].split(",")[1] == manifest["config_hash"]

    def test_seeded_randomness(self, tmp_path):
        """The run generator is seeded from the config."""
        registry = RunRegistry()
        draws = []

        @registry.run("gibbs")
        def fake(ctx):
            draws.append(ctx.rng.uniform())
            return RunOutcome()

        execute(make_config(tmp_path), registry)
        execute(make_config(tmp_path), registry)
        assert draws[0] == draws[1]

    def test_missing_kind(self, tmp_path):
        """A config without a run kind cannot be executed."""
        config = config_from_dict({"schema": 1, "run": {"output_dir": str(tmp_path)}})
        with pytest.raises(ValueError):
            execute(config, RunRegistry())

    def test_single_job_maps_in_process(self):
        """One job uses the builtin map."""
        with job_mapper(1, "WARNING", False) as mapper:
            assert mapper is map

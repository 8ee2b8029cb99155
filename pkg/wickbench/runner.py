# wickbench/runner.py
"""
Run registry, sweep orchestration and persistence.

Run kinds register themselves on a RunRegistry the way tools register on a server.
The runner assembles the model, expands sweep grids, hands parallel runs an ordered
process-pool mapper, and writes results.csv plus manifest.json.
"""

import itertools
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from wickbench.assembly import Experiment, build_experiment
from wickbench.config.schema import GRID_AXES, ExperimentConfig
from wickbench.error_handler import EXIT_BUDGET, exit_code_for
from wickbench.exceptions import JobBudgetExceeded
from wickbench.logging_config import configure_logging
from wickbench.results import (
    MANIFEST_FILENAME,
    RESULTS_FILENAME,
    ResultRecord,
    config_hash,
    write_csv,
    write_manifest,
)
from wickbench.wick_bridge import Mapper

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """Everything a run function needs."""

    config: ExperimentConfig
    experiment: Experiment
    digest: str
    rng: np.random.Generator
    mapper: Mapper = map

    @property
    def order(self) -> int:
        return self.config.run.order

    def axis(self, name: str, default: float) -> List[float]:
        return list(self.config.sweep.grids.get(name, [default]))

    def grid(self, axes: Sequence[str], defaults: Dict[str, float]) -> List[Tuple[float, ...]]:
        return expand_grid(
            {axis: self.axis(axis, defaults[axis]) for axis in axes},
            self.config.controls.max_grid_points,
        )


@dataclass
class RunOutcome:
    """Rows, verdicts and budgets produced by one run."""

    records: List[ResultRecord] = field(default_factory=list)
    verdicts: Dict[str, str] = field(default_factory=dict)
    budgets: Dict[str, Any] = field(default_factory=dict)
    summary: List[ResultRecord] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)

    def verdict(self, name: str, passed: bool) -> None:
        self.verdicts[name] = "pass" if passed else "fail"

    @property
    def exit_code(self) -> int:
        if self.failures:
            return EXIT_BUDGET
        return exit_code_for(self.verdicts.values())


RunFunction = Callable[[RunContext], RunOutcome]


@dataclass(frozen=True)
class RegisteredRun:
    kind: str
    function: RunFunction
    parallel: bool


class RunRegistry:
    """Maps run kinds to their functions."""

    def __init__(self) -> None:
        self._runs: Dict[str, RegisteredRun] = {}

    def run(self, kind: str, parallel: bool = False) -> Callable[[RunFunction], RunFunction]:
        """Decorator registering a run function under a kind."""

        def decorator(function: RunFunction) -> RunFunction:
            if kind in self._runs:
                raise ValueError(f"run kind {kind!r} registered twice")
            self._runs[kind] = RegisteredRun(kind, function, parallel)
            return function

        return decorator

    def get(self, kind: str) -> RegisteredRun:
        try:
            return self._runs[kind]
        except KeyError:
            raise ValueError(f"no run registered for kind {kind!r}") from None

    @property
    def kinds(self) -> List[str]:
        return sorted(self._runs)


def create_registry() -> RunRegistry:
    """Create the registry with all run kinds."""
    from wickbench.runs.dynamics import register_dynamics_runs
    from wickbench.runs.static import register_static_runs
    from wickbench.runs.sweeps import register_sweep_runs
    from wickbench.runs.verification import register_verification_runs

    registry = RunRegistry()
    register_static_runs(registry)
    register_dynamics_runs(registry)
    register_verification_runs(registry)
    register_sweep_runs(registry)
    return registry


def expand_grid(axes: Dict[str, List[float]], max_points: int) -> List[Tuple[float, ...]]:
    """
    Cartesian product of the axes, in GRID_AXES order, duplicates removed.

    Raises:
        JobBudgetExceeded: if more than max_points distinct points remain
    """
    names = [name for name in GRID_AXES if name in axes]
    points = list(itertools.product(*(axes[name] for name in names)))
    unique = list(dict.fromkeys(points))
    if len(unique) < len(points):
        logger.warning(f"Sweep grid: {len(points) - len(unique)} duplicate point(s) dropped")
    if len(unique) > max_points:
        raise JobBudgetExceeded(
            f"sweep grid has {len(unique)} points, budget is {max_points} "
            "(controls.max_grid_points)"
        )
    return unique


@contextmanager
def job_mapper(jobs: Optional[int], log_level: str, json_logs: bool) -> Iterator[Mapper]:
    """Ordered mapper over `jobs` worker processes; one job maps in-process."""
    processes = jobs or os.cpu_count() or 1
    if processes == 1:
        yield map
        return
    logger.info(f"Starting pool of {processes} workers")
    with Pool(
        processes=processes, initializer=configure_logging, initargs=(log_level, json_logs)
    ) as pool:
        yield pool.map


def execute(config: ExperimentConfig, registry: Optional[RunRegistry] = None) -> int:
    """
    Run the configured kind and write its artifacts.

    Returns:
        0 if every verdict passed, 1 if a check failed, 3 if any sweep row failed
    """
    registry = registry or create_registry()
    kind = config.run.kind
    if kind is None:
        raise ValueError("no run kind given")
    registered = registry.get(kind)
    seed = config.run.seed
    config_data = config.hashed_data()
    digest = config_hash(config_data, seed)
    logger.info(f"Run {kind} with config hash {digest[:12]}, seed {seed}")

    experiment = build_experiment(config)
    rng = np.random.default_rng(seed)
    if registered.parallel:
        with job_mapper(config.run.jobs, config.run.log_level, config.run.json_logs) as mapper:
            outcome = registered.function(RunContext(config, experiment, digest, rng, mapper))
    else:
        outcome = registered.function(RunContext(config, experiment, digest, rng))

    out = Path(config.run.output_dir)
    results = write_csv(out / RESULTS_FILENAME, [record.to_row() for record in outcome.records], digest)
    write_manifest(
        out / MANIFEST_FILENAME,
        kind,
        config_data,
        digest,
        seed,
        outcome.verdicts,
        outcome.budgets,
        summary=[record.to_row() for record in outcome.summary],
        failures=outcome.failures,
        files=[results],
    )
    code = outcome.exit_code
    logger.info(f"Run {kind} finished with exit code {code}")
    return code

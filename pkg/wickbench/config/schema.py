# wickbench/config/schema.py
"""
Configuration schema definitions for wickbench experiments.

This module defines the dataclass schemas for an experiment configuration: the
lattice model, the equilibrium state, the drive, the observable, numerical controls,
sweep grids and run settings. Every numeric field is range-checked before a run is
dispatched.

Key Components:
- GeometryConfig / ModelConfig: torus geometry, one-body kernel and interaction
- StateConfig / DriveConfig: (β, μ) and (ε, η, t, switch, perturbation)
- ObservableConfig: local observable template (also used for the perturbation)
- ControlsConfig: quadrature, propagation and budget settings
- SweepConfig / RunConfig: grid axes and run plumbing
- ExperimentConfig: main configuration combining all components
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Literal, Optional, Union, get_args

SCHEMA_VERSION = 1

RunKind = Literal[
    "spectrum",
    "gibbs",
    "evolve",
    "wick-check",
    "duhamel",
    "adiabatic-sweep",
    "improved-sweep",
    "kubo",
    "assumption1",
    "twopoint",
]
RUN_KINDS: tuple[str, ...] = get_args(RunKind)
GRID_AXES = ("eta", "beta", "epsilon", "t", "m", "beta_mismatch")
OBSERVABLE_KINDS = ("density", "bond", "current", "identity")
SWITCH_TYPES = ("exp", "poly_flat", "atoms", "rational")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class ConfigurationError(Exception):
    """Raised when configuration validation fails."""

    pass


@dataclass
class GeometryConfig:
    """Torus Γ_L^d with M internal labels per cell."""

    d: int = 1
    L: int = 2
    M: int = 1


@dataclass
class ModelConfig:
    """Lattice Hamiltonian H = H⁰ + λV."""

    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    hopping: float = -1.0
    onsite: Union[float, List[float]] = 0.0
    staggered: float = 0.0
    interaction_u: float = 0.0
    interaction_onsite_u: float = 0.0
    coupling: float = 0.0


@dataclass
class StateConfig:
    """Grand-canonical equilibrium state."""

    beta: float = 4.0
    mu: float = 0.0


@dataclass
class ObservableConfig:
    """Local observable template; translate=True sums all lattice translates."""

    kind: str = "density"
    site: List[int] = field(default_factory=lambda: [0])
    partner: Optional[List[int]] = None
    amplitude: float = 1.0
    translate: bool = False


@dataclass
class DriveConfig:
    """Perturbation ε g(ηt) P."""

    epsilon: float = 0.05
    eta: float = 0.5
    t: float = 0.0
    switch: Dict[str, Any] = field(default_factory=lambda: {"type": "exp"})
    perturbation: ObservableConfig = field(default_factory=ObservableConfig)


@dataclass
class ControlsConfig:
    """Numerical controls and budgets."""

    panel_width: float = 0.5
    nodes_per_panel: int = 8
    ode_step: Optional[float] = None
    t_cutoff: Optional[float] = None
    tolerance: Optional[float] = None
    tolerance_multiplier: float = 1.0
    max_modes: Optional[int] = None
    exponent_budget: float = 700.0
    max_cumulant_order: int = 4
    max_grid_points: int = 64
    max_evaluations: int = 2_000_000
    weight_power: float = 1.0


@dataclass
class SweepConfig:
    """Grid axes; the sweep is their cartesian product in GRID_AXES order."""

    grids: Dict[str, List[float]] = field(default_factory=dict)


@dataclass
class RunConfig:
    """Run plumbing; none of these fields enter the config hash."""

    kind: Optional[RunKind] = None
    order: int = 1
    output_dir: str = "wickbench-out"
    seed: int = 0
    jobs: Optional[int] = None
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"
    json_logs: bool = False


@dataclass
class ExperimentConfig:
    """Main experiment configuration."""

    schema: int = SCHEMA_VERSION
    model: ModelConfig = field(default_factory=ModelConfig)
    state: StateConfig = field(default_factory=StateConfig)
    drive: DriveConfig = field(default_factory=DriveConfig)
    observable: ObservableConfig = field(
        default_factory=lambda: ObservableConfig(site=[1])
    )
    controls: ControlsConfig = field(default_factory=ControlsConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self) -> None:
        """Validate configuration after initialization."""
        self.validate()

    def validate(self) -> None:
        """Run every validation; called again after each configuration layer."""
        self._validate_schema()
        self._validate_geometry()
        self._validate_model()
        self._validate_state_and_drive()
        self._validate_switch()
        self._validate_observables()
        self._validate_controls()
        self._validate_sweep()
        self._validate_run()

    def _validate_schema(self) -> None:
        if self.schema != SCHEMA_VERSION:
            raise ConfigurationError(
                f"schema: version {self.schema!r} is not supported (expected {SCHEMA_VERSION})"
            )

    def _validate_geometry(self) -> None:
        geometry = self.model.geometry
        for name in ("d", "L", "M"):
            value = getattr(geometry, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigurationError(
                    f"model.geometry.{name}: must be a positive integer, got {value!r}"
                )

    def _validate_model(self) -> None:
        for name in ("hopping", "staggered", "interaction_u", "interaction_onsite_u", "coupling"):
            _require_finite(f"model.{name}", getattr(self.model, name))
        onsite = self.model.onsite
        if isinstance(onsite, list):
            n_sites = self.model.geometry.M * self.model.geometry.L**self.model.geometry.d
            if len(onsite) != n_sites:
                raise ConfigurationError(
                    f"model.onsite: expected {n_sites} values, got {len(onsite)}"
                )
            for value in onsite:
                _require_finite("model.onsite", value)
        else:
            _require_finite("model.onsite", onsite)

    def _validate_state_and_drive(self) -> None:
        _require_positive("state.beta", self.state.beta)
        _require_finite("state.mu", self.state.mu)
        _require_finite("drive.epsilon", self.drive.epsilon)
        _require_positive("drive.eta", self.drive.eta)
        _require_finite("drive.t", self.drive.t)
        if self.drive.t > 0:
            raise ConfigurationError(f"drive.t: must be <= 0, got {self.drive.t}")

    def _validate_switch(self) -> None:
        switch = self.drive.switch
        kind = switch.get("type") if isinstance(switch, dict) else None
        if kind not in SWITCH_TYPES:
            raise ConfigurationError(
                f"drive.switch.type: must be one of {', '.join(SWITCH_TYPES)}, got {kind!r}"
            )
        if kind == "exp" and "rate" in switch:
            _require_positive("drive.switch.rate", switch["rate"])
        elif kind == "poly_flat":
            m = switch.get("m")
            if isinstance(m, bool) or not isinstance(m, int) or m < 1:
                raise ConfigurationError(f"drive.switch.m: must be an integer >= 1, got {m!r}")
        elif kind == "atoms":
            atoms = switch.get("list")
            if not isinstance(atoms, list) or not atoms:
                raise ConfigurationError("drive.switch.list: needs a non-empty [[xi, w], ...] list")
            for atom in atoms:
                if not isinstance(atom, list) or len(atom) != 2:
                    raise ConfigurationError(
                        f"drive.switch.list: each atom must be [xi, w], got {atom!r}"
                    )
                _require_positive("drive.switch.list xi", atom[0])
                _require_finite("drive.switch.list w", atom[1])
        elif kind == "rational":
            _require_positive("drive.switch.a", switch.get("a"))
            n = switch.get("n")
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise ConfigurationError(f"drive.switch.n: must be an integer >= 1, got {n!r}")

    def _validate_observables(self) -> None:
        geometry = self.model.geometry
        for name, observable in (
            ("observable", self.observable),
            ("drive.perturbation", self.drive.perturbation),
        ):
            if observable.kind not in OBSERVABLE_KINDS:
                raise ConfigurationError(
                    f"{name}.kind: must be one of {', '.join(OBSERVABLE_KINDS)}, "
                    f"got {observable.kind!r}"
                )
            _require_finite(f"{name}.amplitude", observable.amplitude)
            sites = [("site", observable.site)]
            if observable.kind in ("bond", "current"):
                if observable.partner is None:
                    raise ConfigurationError(f"{name}.partner: required for {observable.kind}")
                sites.append(("partner", observable.partner))
            for label, site in sites:
                _check_site(f"{name}.{label}", site, geometry)

    def _validate_controls(self) -> None:
        controls = self.controls
        _require_positive("controls.panel_width", controls.panel_width)
        _require_positive_int("controls.nodes_per_panel", controls.nodes_per_panel)
        if controls.ode_step is not None:
            _require_positive("controls.ode_step", controls.ode_step)
        if controls.t_cutoff is not None:
            _require_positive("controls.t_cutoff", controls.t_cutoff)
        if controls.tolerance is not None:
            _require_positive("controls.tolerance", controls.tolerance)
        _require_positive("controls.tolerance_multiplier", controls.tolerance_multiplier)
        if controls.max_modes is not None:
            _require_positive_int("controls.max_modes", controls.max_modes)
        _require_positive("controls.exponent_budget", controls.exponent_budget)
        _require_positive_int("controls.max_cumulant_order", controls.max_cumulant_order)
        _require_positive_int("controls.max_grid_points", controls.max_grid_points)
        _require_positive_int("controls.max_evaluations", controls.max_evaluations)
        _require_finite("controls.weight_power", controls.weight_power)

    def _validate_sweep(self) -> None:
        for axis, values in self.sweep.grids.items():
            if axis not in GRID_AXES:
                raise ConfigurationError(
                    f"sweep.grids.{axis}: unknown axis (known: {', '.join(GRID_AXES)})"
                )
            if not isinstance(values, list) or not values:
                raise ConfigurationError(f"sweep.grids.{axis}: needs a non-empty list")
            for value in values:
                if axis in ("eta", "beta", "beta_mismatch"):
                    _require_positive(f"sweep.grids.{axis}", value)
                elif axis == "t":
                    _require_finite("sweep.grids.t", value)
                    if value > 0:
                        raise ConfigurationError(f"sweep.grids.t: must be <= 0, got {value}")
                elif axis == "m":
                    if isinstance(value, bool) or int(value) != value or value < 0:
                        raise ConfigurationError(
                            f"sweep.grids.m: must be non-negative integers, got {value!r}"
                        )
                else:
                    _require_finite(f"sweep.grids.{axis}", value)

    def _validate_run(self) -> None:
        run = self.run
        if run.kind is not None and run.kind not in RUN_KINDS:
            raise ConfigurationError(
                f"run.kind: must be one of {', '.join(RUN_KINDS)}, got {run.kind!r}"
            )
        if isinstance(run.order, bool) or not isinstance(run.order, int) or not 1 <= run.order <= 3:
            raise ConfigurationError(f"run.order: must be 1, 2 or 3, got {run.order!r}")
        if isinstance(run.seed, bool) or not isinstance(run.seed, int) or run.seed < 0:
            raise ConfigurationError(f"run.seed: must be a non-negative integer, got {run.seed!r}")
        if run.jobs is not None:
            _require_positive_int("run.jobs", run.jobs)
        if run.log_level not in LOG_LEVELS:
            raise ConfigurationError(f"run.log_level: must be one of {', '.join(LOG_LEVELS)}")

    def hashed_data(self) -> Dict[str, Any]:
        """The parts of the config that determine the numbers, for hashing and echo."""
        data = asdict(self)
        run = data.pop("run")
        data["run"] = {"kind": run["kind"], "order": run["order"]}
        return data


def _require_finite(name: str, value: Any) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigurationError(f"{name}: must be a finite number, got {value!r}")


def _require_positive(name: str, value: Any) -> None:
    _require_finite(name, value)
    if value <= 0:
        raise ConfigurationError(f"{name}: must be positive, got {value!r}")


def _require_positive_int(name: str, value: Any) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigurationError(f"{name}: must be a positive integer, got {value!r}")


def _check_site(name: str, site: Any, geometry: GeometryConfig) -> None:
    if not isinstance(site, list) or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in site
    ):
        raise ConfigurationError(f"{name}: must be a list of integers, got {site!r}")
    if len(site) not in (geometry.d, geometry.d + 1):
        raise ConfigurationError(
            f"{name}: {site} does not match dimension d={geometry.d} (optionally plus a label)"
        )
    cell = site[: geometry.d]
    label = site[geometry.d] if len(site) == geometry.d + 1 else 0
    if not all(0 <= c < geometry.L for c in cell) or not 0 <= label < geometry.M:
        raise ConfigurationError(
            f"{name}: {site} lies outside the L={geometry.L}, M={geometry.M} torus"
        )

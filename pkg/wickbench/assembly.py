# wickbench/assembly.py
"""
Turn a validated ExperimentConfig into model objects.

The Experiment bundle holds the lattice, Fock basis, kernels, Hamiltonian, driven
Hamiltonian, observable and the numerical controls every run kind starts from.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional

import numpy as np

from wickbench.config.schema import ExperimentConfig, ObservableConfig
from wickbench.hamiltonians import (
    DrivenHamiltonian,
    InteractionKernel,
    LocalObservable,
    QuadraticKernel,
    build_hamiltonian,
    interaction_kernel,
    nearest_neighbor_kernel,
)
from wickbench.lattice_fock import FockBasis, FockOperator, LatticeGeometry, build_fock_basis
from wickbench.quadrature import QuadratureControls
from wickbench.realtime import PropagationControls
from wickbench.switch import SwitchSpec, switch_from_descriptor

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Experiment:
    config: ExperimentConfig
    geometry: LatticeGeometry
    basis: FockBasis
    kernel: QuadraticKernel
    interaction: Optional[InteractionKernel]
    hamiltonian: FockOperator
    perturbation_template: LocalObservable
    perturbation: FockOperator
    perturbation_kernel: np.ndarray
    observable_template: LocalObservable
    observable: FockOperator
    observable_kernel: np.ndarray
    switch: SwitchSpec
    driven: DrivenHamiltonian
    quadrature: QuadratureControls
    propagation: PropagationControls

    @property
    def beta(self) -> float:
        return self.config.state.beta

    @property
    def mu(self) -> float:
        return self.config.state.mu

    @property
    def t(self) -> float:
        return self.config.drive.t

    @property
    def interacting(self) -> bool:
        return self.interaction is not None and self.interaction.coupling != 0.0


def local_template(observable: ObservableConfig) -> LocalObservable:
    partner = tuple(observable.partner) if observable.partner is not None else None
    return LocalObservable(
        kind=observable.kind,
        site=tuple(observable.site),
        partner=partner,
        amplitude=observable.amplitude,
    )


def placed_templates(observable: ObservableConfig, geometry: LatticeGeometry) -> List[LocalObservable]:
    """The template itself, or all of its lattice translates when translate is set."""
    template = local_template(observable)
    return template.translates(geometry) if observable.translate else [template]


def placed_operator(observable: ObservableConfig, basis: FockBasis) -> FockOperator:
    operators = [item.operator(basis) for item in placed_templates(observable, basis.geometry)]
    return reduce(lambda a, b: a + b, operators)


def placed_kernel(observable: ObservableConfig, geometry: LatticeGeometry) -> np.ndarray:
    return sum(item.kernel(geometry) for item in placed_templates(observable, geometry))


def quadrature_controls(config: ExperimentConfig) -> QuadratureControls:
    controls = config.controls
    return QuadratureControls(
        panel_width=controls.panel_width,
        order=controls.nodes_per_panel,
        max_evaluations=controls.max_evaluations,
    )


def propagation_controls(config: ExperimentConfig) -> PropagationControls:
    controls = config.controls
    return PropagationControls(
        t_start=-controls.t_cutoff if controls.t_cutoff is not None else None,
        t_end=config.drive.t,
        step=controls.ode_step,
        quadrature=quadrature_controls(config),
    )


def build_experiment(config: ExperimentConfig) -> Experiment:
    """
    Assemble the model described by a config.

    Raises:
        ModeCountExceeded: if the lattice exceeds the dense-matrix budget
        RangeViolation / KernelNotHermitian: if a kernel is malformed
        SwitchAssumptionViolated: if the switch descriptor is unusable or its Laplace
            density has an infinite small-ξ or large-ξ moment
    """
    model = config.model
    geometry = LatticeGeometry(model.geometry.d, model.geometry.L, model.geometry.M)
    basis = build_fock_basis(geometry, config.controls.max_modes)
    kernel = nearest_neighbor_kernel(geometry, model.hopping, model.onsite, model.staggered)
    interaction = None
    if model.coupling != 0.0:
        interaction = interaction_kernel(
            geometry, model.interaction_u, model.interaction_onsite_u, model.coupling
        )
    hamiltonian = build_hamiltonian(basis, kernel, interaction)

    perturbation = placed_operator(config.drive.perturbation, basis)
    observable = placed_operator(config.observable, basis)
    switch = switch_from_descriptor(config.drive.switch)
    switch.check_assumptions(geometry.d)
    driven = DrivenHamiltonian.on_basis(
        basis, hamiltonian, perturbation, config.drive.epsilon, switch, config.drive.eta
    )
    logger.info(
        f"Assembled {geometry.n_sites}-mode model (dimension {basis.dimension}), "
        f"switch {switch.label}, coupling {model.coupling}"
    )
    return Experiment(
        config=config,
        geometry=geometry,
        basis=basis,
        kernel=kernel,
        interaction=interaction,
        hamiltonian=hamiltonian,
        perturbation_template=local_template(config.drive.perturbation),
        perturbation=perturbation,
        perturbation_kernel=placed_kernel(config.drive.perturbation, geometry),
        observable_template=local_template(config.observable),
        observable=observable,
        observable_kernel=placed_kernel(config.observable, geometry),
        switch=switch,
        driven=driven,
        quadrature=quadrature_controls(config),
        propagation=propagation_controls(config),
    )

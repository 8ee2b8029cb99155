"""
Shared fixtures for wickbench tests.

Models are kept at two or three modes so every dense operation stays instant.
"""

import json
from pathlib import Path
from typing import Any, Callable, Dict

import numpy as np
import pytest

from wickbench.config import reset_config
from wickbench.config.loaders import EnvironmentKeys
from wickbench.equilibrium import GibbsEnsemble, gibbs_state
from wickbench.hamiltonians import (
    DrivenHamiltonian,
    LocalObservable,
    QuadraticKernel,
    build_hamiltonian,
    nearest_neighbor_kernel,
)
from wickbench.lattice_fock import FockBasis, FockOperator, LatticeGeometry, build_fock_basis
from wickbench.switch import exponential_switch


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Fresh config singleton and no WICKBENCH_* variables for every test."""
    for key in (
        EnvironmentKeys.MAX_DIM,
        EnvironmentKeys.LOG_LEVEL,
        EnvironmentKeys.JOBS,
        EnvironmentKeys.JSON_LOGS,
    ):
        monkeypatch.delenv(key, raising=False)
    reset_config()
    yield
    reset_config()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def chain() -> LatticeGeometry:
    """Three-site ring."""
    return LatticeGeometry(d=1, L=3)


@pytest.fixture
def basis(chain) -> FockBasis:
    return build_fock_basis(chain, max_modes=12)


@pytest.fixture
def kernel(chain) -> QuadraticKernel:
    return nearest_neighbor_kernel(chain, hopping=-1.0, onsite=[0.3, -0.2, 0.1])


@pytest.fixture
def hamiltonian(basis, kernel) -> FockOperator:
    return build_hamiltonian(basis, kernel)


@pytest.fixture
def ensemble(hamiltonian) -> GibbsEnsemble:
    return gibbs_state(hamiltonian, beta=1.5, mu=0.1)


@pytest.fixture
def dimer() -> FockBasis:
    """Two-site ring, the cheapest model with real dynamics."""
    return build_fock_basis(LatticeGeometry(d=1, L=2), max_modes=12)


@pytest.fixture
def dimer_driven(dimer) -> DrivenHamiltonian:
    H = build_hamiltonian(dimer, nearest_neighbor_kernel(dimer.geometry, -1.0, [0.2, -0.2]))
    P = LocalObservable("density", (0,)).operator(dimer)
    return DrivenHamiltonian.on_basis(dimer, H, P, 0.05, exponential_switch(), 1.0)


@pytest.fixture
def dimer_observable(dimer) -> FockOperator:
    return LocalObservable("density", (1,)).operator(dimer)


@pytest.fixture
def write_config(tmp_path) -> Callable[[Dict[str, Any]], Path]:
    """Write a config dict as JSON and return its path."""

    def write(data: Dict[str, Any], name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write

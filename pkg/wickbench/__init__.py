# wickbench/__init__.py
"""
wickbench package.

Exact finite-lattice simulator and numerical verifier for weakly driven fermionic
Gibbs states. Builds Fock-space models of lattice fermions, propagates Gibbs states
under slowly switched perturbations, and checks real-time response coefficients
against their imaginary-time (Euclidean) rewriting.

Key Features:
- Jordan-Wigner Fock spaces, finite-range Hamiltonians and local observables
- Gibbs states, KMS checks, time-ordered moments and cumulants
- Switch functions, their β-periodized approximants and inverse Laplace data
- Real-time propagation and Duhamel coefficients with certified budgets
- Euclidean coefficients, Wick-rotation, Kubo and adiabatic scaling checks
- Quasi-free two-point functions and ring-diagram cumulants
- Reproducible CLI runs writing results.csv and manifest.json

Architecture:
- One module per physics layer, with shared quadrature and result records
- Layered configuration (file → environment → arguments) with validation
- Run kinds registered per family, parallel sweeps with ordered results
- Category-based exceptions mapped to exit codes by the error handler
"""

__version__ = "0.1.0"

"""Models, a Monte Carlo oracle and fitting tools for a Rydberg-blockade
single-photon switch."""

__version__ = "0.1.0"

from .params import CONSTANTS, DerivedQuantities, DomainError, ExperimentConfig, PhysicalConstants, derive  # noqa: E402,F401

"""Monte Carlo simulation and analytics for GKP qubits under Gaussian shift noise."""

__version__ = "0.1.0"

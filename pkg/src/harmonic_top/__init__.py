"""Classical and quantum harmonic Lagrange top."""

__version__ = "0.1.0"

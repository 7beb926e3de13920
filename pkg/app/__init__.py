"""Exact bosonic Fock-space simulator with time-bin coincidence scattering."""

__version__ = "0.1.0"

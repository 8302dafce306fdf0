"""Capped braids, linking and spectral invariants for surface Hamiltonian flows."""

__version__ = "0.1.0"

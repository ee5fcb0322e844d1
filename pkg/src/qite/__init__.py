"""Imaginary time evolution on bounded-order Pauli Hamiltonians."""

__version__ = "0.1.0"

"""Sparse-oracle toolkit for second-quantized Hamiltonians in a compact Fock encoding."""

__version__ = '0.1.0'

"""Effective-Hamiltonian and Redfield tools for open quantum systems
coupled to several bosonic baths through noncommuting operators."""

__version__ = "0.1.0"

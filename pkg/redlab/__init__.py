"""Redundancy lab: NMR and MMR netlists, fault injection and reliability analysis."""

__version__ = "0.1.0"

"""Simulation lab for a DAG ledger with verification rewards and rational miners."""
__version__ = "0.1.0"

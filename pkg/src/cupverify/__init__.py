"""Reachability, invariants and coherence checks for uninterpreted programs."""

__version__ = "0.1.0"

"""Finite-horizon workbench for minimal numberings, ceers and stage constructions."""

__version__ = "0.1.0"

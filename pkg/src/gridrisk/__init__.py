"""Scenario-based operational risk assessment for zonal power systems."""

__version__ = "0.1.0"

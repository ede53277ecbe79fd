"""Solver services: one module per phase of the CMSA loop."""

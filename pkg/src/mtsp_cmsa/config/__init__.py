"""Configuration for the solver and its runtime."""

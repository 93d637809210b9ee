"""Gaussian-state, cavity, OPA, chain and measurement models."""

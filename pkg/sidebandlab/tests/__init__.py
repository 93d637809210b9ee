"""Test package for sidebandlab."""

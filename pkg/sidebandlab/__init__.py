"""Squeezed-light and EPR sideband chain simulator."""

"""REST API for the sideband chain simulator."""

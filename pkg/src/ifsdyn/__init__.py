"""Qualitative dynamics of iterated function systems on uniform grids."""

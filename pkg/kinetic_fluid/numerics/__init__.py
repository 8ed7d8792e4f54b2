"""Numerical core: grids, alignment, kinetic and fluid solvers, driver, diagnostics, Picard."""

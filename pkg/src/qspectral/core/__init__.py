"""Numerical core: graph construction, classical oracles, circuit simulation, optimization."""

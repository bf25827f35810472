"""Numeric inner loops. Everything here works on plain numpy arrays."""

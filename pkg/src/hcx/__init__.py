"""Heisenberg coinvariants toolkit."""

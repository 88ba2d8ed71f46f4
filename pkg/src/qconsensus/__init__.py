"""Consensus dynamics of qubit networks under permutation interactions."""

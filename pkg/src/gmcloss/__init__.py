"""Correlation-consistency losses for rank-sensitive regression."""

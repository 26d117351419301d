"""Augustin information, capacities and sphere packing bounds."""

from ._augustin import (
    augustin_mean,
    capacity,
    ht_exhaustive,
    renyi_divergence,
    solve_dual,
    sphere_packing_exponent,
)

__all__ = [
    "augustin_mean",
    "capacity",
    "ht_exhaustive",
    "renyi_divergence",
    "solve_dual",
    "sphere_packing_exponent",
]

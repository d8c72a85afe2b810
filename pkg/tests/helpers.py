"""Shared test fixtures: the (N, Q) grid used across the suite."""

import numpy as np

from prelog_lab import make_block_spec

# (n, q) pairs exercised by most structural checks
GRID = [(4, 1), (4, 3), (8, 3), (8, 5), (10, 3)]


def grid_spec(n: int, q: int, t_s: float = 1e-3):
    """Block spec with exactly q coefficients: nu_max = (M + 1/2) / T."""
    m = (q - 1) // 2
    return make_block_spec(t_s, n, (m + 0.5) / (n * t_s))


def nonzero_symbols(rng: np.random.Generator, n: int) -> np.ndarray:
    """CN(0,1) symbols pushed away from zero (witness-style draws)."""
    x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    x[np.abs(x) < 0.25] += 0.6
    return x

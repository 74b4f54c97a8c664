"""Shared corpus builders for the test suite.

Band-limited periodic functions are synthesized by direct summation over
their generating coefficients (independent of the package's FFT paths), so
the coefficients double as oracles for transform and norm tests.
"""

import numpy as np
import pytest

from subharmonic.grids import (LineFunction, LineGrid, PeriodicFunction,
                               PeriodicGrid)


def make_band_limited(grid: PeriodicGrid, max_mode: int, rng,
                      dim: int = 1):
    """Random band-limited periodic function plus its generating coefficients.

    Returns (function, coeffs) with coeffs a dict {m: (dim,) vector} so that
    f(x) = sum_m coeffs[m] * exp(i 2 pi m x / (nT)).
    """
    x = grid.points()
    period = grid.period
    coeffs = {}
    vals = np.zeros((dim, grid.n_points), dtype=complex)
    for m in range(-max_mode, max_mode + 1):
        c = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        c = c / (1.0 + abs(m))
        coeffs[m] = c
        vals += c[:, None] * np.exp(2j * np.pi * m * x / period)[None, :]
    return PeriodicFunction(grid, vals), coeffs


def make_random_periodic(grid: PeriodicGrid, rng, dim: int = 1):
    shape = (dim, grid.n_points)
    vals = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return PeriodicFunction(grid, vals)


def gaussian_line(X: float, dx: float, width: float = 1.0) -> LineFunction:
    grid = LineGrid.covering(X, dx)
    x = grid.points()
    return LineFunction(grid, np.exp(-(x / width) ** 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)

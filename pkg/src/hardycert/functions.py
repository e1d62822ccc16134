"""Compactly supported piecewise-linear test functions on a 1D grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TestFunction:
    """f linear between nodes.

    Line test functions continue with their end values outside the grid, so a
    function that is constant near either infinity is representable. Radial
    ones (``radial=True``) live on [0, R], may take any value at r = 0 and are
    zero beyond R.
    """

    __test__ = False  # not a pytest class

    grid: np.ndarray
    values: np.ndarray
    radial: bool = False

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        if g.ndim != 1 or g.size < 2 or g.shape != v.shape:
            raise ValueError("grid and values must be 1D arrays of equal length >= 2")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.radial and g[0] < 0:
            raise ValueError("radial grids start at r >= 0")

    def __call__(self, x):
        x = np.asarray(x, float)
        if self.radial:
            return np.interp(x, self.grid, self.values, left=0.0, right=0.0)
        return np.interp(x, self.grid, self.values)

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.grid)

    def rescaled(self, s: float) -> "TestFunction":
        """x -> f(s x)."""
        return TestFunction(self.grid / s, self.values, self.radial)

    def csv_rows(self):
        yield ("x", "f")
        for x, f in zip(self.grid, self.values):
            yield (repr(float(x)), repr(float(f)))

    @classmethod
    def hat(cls, a: float, b: float, n: int = 3, radial: bool = False) -> "TestFunction":
        g = np.linspace(a, b, n)
        v = 1.0 - np.abs(2.0 * (g - a) / (b - a) - 1.0)
        return cls(g, v, radial)

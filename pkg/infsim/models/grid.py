from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from infsim.errors import ConfigurationError


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform 1D trait lattice: z_i = z_min + i*h, i = 0..n-1."""

    z_min: float
    z_max: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.z_min) and np.isfinite(self.z_max)):
            raise ConfigurationError("Grid bounds must be finite", config_key="grid")
        if not self.z_min < self.z_max:
            raise ConfigurationError(
                f"Empty grid interval [{self.z_min}, {self.z_max}]",
                config_key="grid.zmin",
            )
        if self.n < 16 or not _is_power_of_two(self.n):
            raise ConfigurationError(
                f"Grid size must be a power of two >= 16, got {self.n}",
                config_key="grid.n",
            )

    @property
    def h(self) -> float:
        return (self.z_max - self.z_min) / (self.n - 1)

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.z_min + np.arange(self.n) * self.h
        pts.setflags(write=False)
        return pts

    def nearest_index(self, z: float) -> int:
        return int(np.clip(np.rint((z - self.z_min) / self.h), 0, self.n - 1))

    def contains(self, z: float, margin: float = 0.0) -> bool:
        return self.z_min + margin <= z <= self.z_max - margin


@dataclass(frozen=True, eq=False)
class Field:
    """
    A real function sampled on a Grid.

    `support` is the half-open index range where values are defined; values
    outside it are NaN. `notes` carries non-fatal diagnostics (for example an
    under-resolution warning from the mixing operator).
    """

    grid: Grid
    values: np.ndarray
    support: Optional[Tuple[int, int]] = None
    notes: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ConfigurationError(
                f"Field has {values.shape} values for a grid of {self.grid.n} points"
            )
        support = self.support or (0, self.grid.n)
        i0, i1 = int(support[0]), int(support[1])
        if not 0 <= i0 < i1 <= self.grid.n:
            raise ConfigurationError(f"Invalid field support {support}")
        values[:i0] = np.nan
        values[i1:] = np.nan
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", (i0, i1))
        object.__setattr__(self, "notes", tuple(self.notes))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(grid.points))

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    @property
    def defined(self) -> np.ndarray:
        """Values on the support."""
        i0, i1 = self.support
        return self.values[i0:i1]

    @property
    def defined_points(self) -> np.ndarray:
        i0, i1 = self.support
        return self.grid.points[i0:i1]

    @property
    def mass(self) -> float:
        """Riemann sum h * sum(values) over the support."""
        return float(self.grid.h * np.sum(self.defined))

    def with_values(self, values: np.ndarray, **changes) -> "Field":
        return replace(self, values=values, **changes)

    def with_note(self, note: str) -> "Field":
        return replace(self, notes=self.notes + (note,))

    def restrict(self, i0: int, i1: int) -> "Field":
        return replace(self, support=(i0, i1))

    def is_density(self, rel_tol: float = 1e-12) -> bool:
        v = self.defined
        peak = float(np.max(np.abs(v))) if v.size else 0.0
        return bool(np.all(np.isfinite(v)) and np.min(v) >= -rel_tol * peak)

    def _combine(self, other: "Field", values: np.ndarray) -> "Field":
        i0 = max(self.support[0], other.support[0])
        i1 = min(self.support[1], other.support[1])
        return replace(self, values=values, support=(i0, i1))

    def __add__(self, other: "Field") -> "Field":
        return self._combine(other, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return self._combine(other, self.values - other.values)

    def scaled(self, factor: float) -> "Field":
        return replace(self, values=self.values * factor)

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Tuple

import numpy as np

from infsim.models.grid import Field

# Largest relative mass that may be clamped at the boundary over a run.
CLAMP_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class SimState:
    """
    Solution f_eps = exp(log_mass) * density at time t.

    `clamped_fraction` accumulates the relative mass removed by the boundary
    clamp and by clipping of negative values; `valid` turns false once it
    exceeds CLAMP_TOLERANCE and stays false.
    """

    t: float
    density: Field
    log_mass: float
    eps: float
    step_number: int = 0
    clamped_fraction: float = 0.0
    valid: bool = True
    negative_clips: int = 0

    @property
    def grid(self):
        return self.density.grid

    def advanced(self, **changes) -> "SimState":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "log_mass": self.log_mass,
            "eps": self.eps,
            "step_number": self.step_number,
            "clamped_fraction": self.clamped_fraction,
            "valid": self.valid,
            "negative_clips": self.negative_clips,
        }


@dataclass
class SimOutput:
    """Snapshots and scalar series recorded by a solver run."""

    snapshots: List[Tuple[float, SimState]] = field(default_factory=list)
    mass_series: List[Tuple[float, float]] = field(default_factory=list)
    mode_series: List[Tuple[float, float]] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def final(self) -> SimState:
        return self.snapshots[-1][1]

    @property
    def valid(self) -> bool:
        return all(state.valid for _, state in self.snapshots)

    @property
    def snapshot_times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    def mass_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        if not self.mass_series:
            return np.empty(0), np.empty(0)
        t, v = zip(*self.mass_series)
        return np.asarray(t), np.asarray(v)

    def mode_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        if not self.mode_series:
            return np.empty(0), np.empty(0)
        t, v = zip(*self.mode_series)
        return np.asarray(t), np.asarray(v)

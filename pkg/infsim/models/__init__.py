"""
infsim Models

Value types for grids, fields, solver states and reference trajectories,
plus their CSV renderings.
"""

from .grid import Grid, Field
from .state import SimState, SimOutput, CLAMP_TOLERANCE
from .trajectory import ReferenceTrajectory
from .serialization import (
    write_csv,
    read_csv,
    field_frame,
    field_from_frame,
    series_frame,
    trajectory_frame,
    decomposition_frame,
    table_frame,
    format_time,
)

__all__ = [
    # Grid
    "Grid",
    "Field",
    # State
    "SimState",
    "SimOutput",
    "CLAMP_TOLERANCE",
    # Trajectory
    "ReferenceTrajectory",
    # Serialization
    "write_csv",
    "read_csv",
    "field_frame",
    "field_from_frame",
    "series_frame",
    "trajectory_frame",
    "decomposition_frame",
    "table_frame",
    "format_time",
]

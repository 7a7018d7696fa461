"""
CSV renderings of fields, series, trajectories and reports.

All floats are written with 17 significant digits so that files round-trip
exactly and identical runs produce byte-identical output.
"""

from pathlib import Path
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from infsim.models.grid import Field, Grid
from infsim.models.trajectory import COLUMNS as TRAJECTORY_COLUMNS, ReferenceTrajectory

FLOAT_FORMAT = "%.17g"


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def field_frame(field: Field) -> pd.DataFrame:
    """Defined points of a field as columns z,value."""
    return pd.DataFrame({"z": field.defined_points, "value": field.defined})


def field_from_frame(frame: pd.DataFrame, grid: Grid) -> Field:
    """Inverse of field_frame for a frame written from the same grid."""
    z = frame["z"].to_numpy()
    i0 = grid.nearest_index(float(z[0]))
    i1 = i0 + z.size
    values = np.full(grid.n, np.nan)
    values[i0:i1] = frame["value"].to_numpy()
    return Field(grid, values, support=(i0, i1))


def series_frame(series: Iterable[Tuple[float, float]], name: str) -> pd.DataFrame:
    rows = list(series)
    return pd.DataFrame(rows, columns=["t", name])


def trajectory_frame(traj: ReferenceTrajectory, every: int = 1) -> pd.DataFrame:
    """Columns t,z_star,lambda,q_star,p_star, keeping every `every`-th sample and the last."""
    idx = np.arange(0, traj.times.size, max(1, every))
    if idx[-1] != traj.times.size - 1:
        idx = np.append(idx, traj.times.size - 1)
    data = {"t": traj.times[idx]}
    for name, values in zip(TRAJECTORY_COLUMNS, (traj.z_star, traj.lam, traj.q_star, traj.p_star)):
        data[name] = values[idx]
    return pd.DataFrame(data)


def decomposition_frame(U: Field, V: Field, W: Field) -> pd.DataFrame:
    """Columns z,U_eps,V_eps,W_eps over the common support."""
    i0 = max(U.support[0], V.support[0], W.support[0])
    i1 = min(U.support[1], V.support[1], W.support[1])
    return pd.DataFrame(
        {
            "z": U.grid.points[i0:i1],
            "U_eps": U.values[i0:i1],
            "V_eps": V.values[i0:i1],
            "W_eps": W.values[i0:i1],
        }
    )


def table_frame(rows: Sequence[dict], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(columns))


def format_time(t: float) -> str:
    """Compact fixed-point label used in file names (0.5 -> '0.5', 2.0 -> '2')."""
    text = f"{t:.6f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-0") else "0"

"""
Output store: CSV files and meta.txt in a run directory, with checksums.
"""

import hashlib
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import pandas as pd

from infsim.errors import ConfigurationError
from infsim.models.grid import Field
from infsim.models.serialization import (
    decomposition_frame,
    field_frame,
    format_time,
    series_frame,
    trajectory_frame,
    write_csv,
)
from infsim.models.state import SimOutput
from infsim.models.trajectory import ReferenceTrajectory
from infsim.observability.logging import get_logger

logger = get_logger(__name__)

META_FILE = "meta.txt"


class OutputStore:
    """
    Writes one run's files into `root`:
    - f_t<time>.csv snapshots, mass.csv, mode.csv
    - trajectory.csv, vstar.csv, decomp_t<time>.csv, report.csv
    - meta.txt with the resolved config, report summaries and file checksums
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigurationError(f"Cannot create output directory {self.root}: {e}", config_key="out_dir")
        self.written: List[Path] = []

    def _write(self, frame: pd.DataFrame, name: str) -> Path:
        path = write_csv(frame, self.root / name)
        self.written.append(path)
        logger.debug("Wrote output file", path=str(path), rows=len(frame))
        return path

    def save_field(self, field: Field, name: str) -> Path:
        return self._write(field_frame(field), name)

    def save_output(self, output: SimOutput) -> List[Path]:
        """Snapshots plus the mass and mode series of a solver run."""
        paths = [
            self.save_field(state.density, f"f_t{format_time(t)}.csv")
            for t, state in output.snapshots
        ]
        paths.append(self._write(series_frame(output.mass_series, "log_mass"), "mass.csv"))
        paths.append(self._write(series_frame(output.mode_series, "z_mode"), "mode.csv"))
        return paths

    def save_trajectory(self, traj: ReferenceTrajectory, every: int = 1) -> Path:
        return self._write(trajectory_frame(traj, every=every), "trajectory.csv")

    def save_decomposition(self, t: float, U: Field, V: Field, W: Field) -> Path:
        return self._write(decomposition_frame(U, V, W), f"decomp_t{format_time(t)}.csv")

    def save_table(self, frame: pd.DataFrame, name: str) -> Path:
        return self._write(frame, name)

    @staticmethod
    def _compute_checksum(path: Path) -> str:
        return hashlib.sha256(path.read_bytes()).hexdigest()

    def checksums(self) -> Dict[str, str]:
        return {p.name: self._compute_checksum(p) for p in sorted(set(self.written))}

    def write_meta(self, config_text: str, sections: Optional[Dict[str, Iterable[str]]] = None) -> Path:
        """meta.txt: resolved config, then one block per section, then sha256 of every file."""
        lines = ["# resolved config", config_text.rstrip("\n"), ""]
        for title, body in (sections or {}).items():
            lines.append(f"# {title}")
            lines.extend(body)
            lines.append("")
        lines.append("# sha256")
        lines.extend(f"{name} {digest}" for name, digest in self.checksums().items())
        path = self.root / META_FILE
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

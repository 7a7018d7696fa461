from infsim.core.grid import make_grid
from infsim.core.profiles import evolve_reference, v_star
from infsim.core.selection import SelectionModel
from infsim.runtime.solver import run

__version__ = "0.1.0"

__all__ = ["SelectionModel", "make_grid", "evolve_reference", "v_star", "run"]

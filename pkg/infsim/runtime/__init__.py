from .solver import run, step, init_well_prepared, detect_critical_jump, log_mass_rate

__all__ = ["run", "step", "init_well_prepared", "detect_critical_jump", "log_mass_rate"]

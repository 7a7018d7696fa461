"""
Infsim Error Hierarchy

All exceptions inherit from InfsimError for easy catching.
Each error includes contextual information for debugging.
"""

from typing import Optional


class InfsimError(Exception):
    """
    Base exception for all infsim errors.

    Attributes:
        message: Human-readable error description
        details: Additional context for debugging
    """

    def __init__(self, message: str, details: Optional[dict] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        parts = [self.message]
        if self.details:
            parts.append(f"details={self.details}")
        return " ".join(parts)


# ============================================================================
# Configuration Errors
# ============================================================================


class ConfigurationError(InfsimError):
    """Invalid run configuration or invalid construction parameters."""

    def __init__(self, message: str, config_key: Optional[str] = None):
        self.config_key = config_key
        details = {"config_key": config_key} if config_key else {}
        super().__init__(message, details=details)


class ConfigParseError(ConfigurationError):
    """Config document could not be parsed or validated."""

    def __init__(self, message: str, line_number: int, config_key: Optional[str] = None):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}", config_key=config_key)
        self.details["line_number"] = line_number


class UnsupportedOrderError(InfsimError):
    """Requested derivative order is not implemented."""

    def __init__(self, order: int, supported: str):
        super().__init__(
            f"Unsupported derivative order {order}",
            details={"order": order, "supported": supported},
        )
        self.order = order


# ============================================================================
# Numerical Errors
# ============================================================================


class NumericalError(InfsimError):
    """Base class for failures of a numerical computation."""

    pass


class DegenerateDensityError(NumericalError):
    """Density has zero or negative total mass."""

    def __init__(self, mass: float):
        super().__init__(
            f"Degenerate density: total mass {mass!r} is not positive",
            details={"mass": mass},
        )
        self.mass = mass


class DivergenceError(NumericalError):
    """State became non-finite during integration."""

    def __init__(self, what: str, last_valid_time: float):
        super().__init__(
            f"{what} diverged (non-finite values)",
            details={"last_valid_time": last_valid_time},
        )
        self.last_valid_time = last_valid_time


class StabilityError(NumericalError):
    """Time step exceeds the stability limit of the scheme."""

    def __init__(self, dt: float, dt_max: float):
        super().__init__(
            f"Time step {dt:.3e} exceeds stability limit {dt_max:.3e}",
            details={"dt": dt, "dt_max": dt_max},
        )
        self.dt = dt
        self.dt_max = dt_max


# ============================================================================
# Domain Errors
# ============================================================================


class DomainError(InfsimError):
    """Base class for evaluations outside the domain where they are defined."""

    pass


class VStarDomainError(DomainError):
    """Nonpositive M met along the dyadic ray of the V* series."""

    def __init__(self, point: float, value: float):
        super().__init__(
            f"M is not positive at z={point:.6g} (M={value:.6g}); "
            "uniform positivity of M fails along the dyadic ray",
            details={"point": point, "M": value},
        )
        self.point = point
        self.value = value


class VStarSeriesError(DomainError):
    """The V* series stops decaying geometrically or runs out of terms."""

    def __init__(self, reason: str, point: float, terms: int):
        super().__init__(
            f"V* series does not converge at z={point:.6g} after {terms} terms: {reason}",
            details={"point": point, "terms": terms},
        )
        self.point = point
        self.terms = terms


class WindowOverflowError(DomainError):
    """Evaluation points fall outside the grid window."""

    def __init__(self, required_padding: float, lo: float, hi: float):
        super().__init__(
            f"Evaluation points escape the window [{lo:.6g}, {hi:.6g}]; "
            f"extend the grid by at least {required_padding:.6g}",
            details={"required_padding": required_padding},
        )
        self.required_padding = required_padding


class TrajectoryRangeError(DomainError):
    """Time requested outside the sampled trajectory."""

    def __init__(self, t: float, t_min: float, t_max: float):
        super().__init__(
            f"t={t:.6g} outside trajectory range [{t_min:.6g}, {t_max:.6g}]",
            details={"t": t, "t_min": t_min, "t_max": t_max},
        )


class InsufficientSupportError(DomainError):
    """Density is not resolved on a wide enough window around z*."""

    def __init__(self, reason: str, **details):
        super().__init__(f"Insufficient support: {reason}", details=details)


class PinningViolationError(DomainError):
    """Corrector field carries an affine part at z*."""

    def __init__(self, value: float, slope: float, tolerance: float):
        super().__init__(
            "Affine part not removed at z*",
            details={"value": value, "slope": slope, "tolerance": tolerance},
        )
        self.value = value
        self.slope = slope

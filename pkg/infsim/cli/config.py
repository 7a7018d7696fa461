"""
Run configuration: pydantic models plus the flat `section.key = value` format.

    # quadratic selection, single run
    selection.kind = quadratic
    selection.coeffs = 1.0
    epsilon = 0.1
    grid.n = 2048
"""

import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from infsim.core.grid import ALPHA_MAX, make_grid
from infsim.core.operator import Backend
from infsim.core.profiles import evolve_reference
from infsim.core.selection import SelectionKind, SelectionModel
from infsim.errors import ConfigParseError, ConfigurationError, InfsimError
from infsim.models.grid import Grid
from infsim.models.trajectory import ReferenceTrajectory

DEFAULT_CONFIG_FILE = "infsim.conf"
LIST_KEYS = {"selection.coeffs", "epsilon"}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False, validate_assignment=True)


class SelectionSection(_Section):
    kind: SelectionKind = SelectionKind.QUADRATIC
    coeffs: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    z0: float = 0.0


class GridSection(_Section):
    zmin: float = -4.0
    zmax: float = 4.0
    n: int = Field(default=2048, ge=16)

    @field_validator("n")
    @classmethod
    def _power_of_two(cls, n: int) -> int:
        if n & (n - 1):
            raise ValueError(f"grid size must be a power of two, got {n}")
        return n

    @model_validator(mode="after")
    def _ordered(self):
        if not self.zmin < self.zmax:
            raise ValueError(f"empty interval [{self.zmin}, {self.zmax}]")
        return self


class TimeSection(_Section):
    t_end: float = Field(default=5.0, gt=0)
    dt_factor: float = Field(default=0.1, gt=0, le=0.2)
    snapshot_every: float = Field(default=0.5, gt=0)
    reference_dt: float = Field(default=1e-3, gt=0)


class OperatorSection(_Section):
    backend: Backend = Backend.FFT
    quad_order: int = Field(default=40, ge=2, le=200)


class InitSection(_Section):
    q0: float = 0.0
    p0: float = 0.0
    lambda0: float = 0.0
    profile: Literal["well_prepared", "gaussian"] = "well_prepared"


class ReferenceSection(_Section):
    p_curvature_weight: float = 1.0


class HarnessSection(_Section):
    density_floor: float = Field(default=1e-12, gt=0, le=1e-3)
    # norms and the V* error are taken where density > core_floor * max and
    # within core_span * min(eps) of z*, a region shared by every eps of a sweep
    core_floor: float = Field(default=1e-8, gt=0, le=1e-2)
    core_span: float = Field(default=4.0, gt=0, le=10.0)
    workers: int = Field(default=4, ge=1, le=64)


class LoggingSection(_Section):
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"
    format: Literal["json", "text"] = "text"

    @field_validator("level", mode="before")
    @classmethod
    def _upper(cls, v):
        return v.upper() if isinstance(v, str) else v


class RunConfig(_Section):
    """Fully resolved configuration of a run or sweep."""

    selection: SelectionSection = Field(default_factory=SelectionSection)
    z_star0: float = 1.0
    epsilon: List[float] = Field(default_factory=lambda: [0.1], min_length=1)
    grid: GridSection = Field(default_factory=GridSection)
    time: TimeSection = Field(default_factory=TimeSection)
    alpha: float = 0.4
    operator: OperatorSection = Field(default_factory=OperatorSection)
    init: InitSection = Field(default_factory=InitSection)
    reference: ReferenceSection = Field(default_factory=ReferenceSection)
    harness: HarnessSection = Field(default_factory=HarnessSection)
    logging: LoggingSection = Field(default_factory=LoggingSection)
    out_dir: str = "infsim-out"

    @field_validator("epsilon")
    @classmethod
    def _positive_eps(cls, values: List[float]) -> List[float]:
        if any(not v > 0 for v in values):
            raise ValueError("epsilon entries must be positive")
        return values

    @field_validator("alpha")
    @classmethod
    def _admissible_alpha(cls, alpha: float) -> float:
        if not 0.0 < alpha < ALPHA_MAX:
            raise ValueError(f"alpha must lie in (0, {ALPHA_MAX:.5f}), got {alpha}")
        return alpha

    @field_validator("out_dir")
    @classmethod
    def _non_empty(cls, path: str) -> str:
        if not path.strip():
            raise ValueError("out_dir must not be empty")
        return path

    @property
    def sweep_mode(self) -> bool:
        return len(self.epsilon) > 1

    @property
    def eps(self) -> float:
        """The first (largest for sweeps) eps."""
        return self.epsilon[0]

    def build_model(self) -> SelectionModel:
        return SelectionModel(
            self.selection.kind, tuple(self.selection.coeffs), z0=self.selection.z0
        )

    def build_grid(self) -> Grid:
        return make_grid(self.grid.zmin, self.grid.zmax, self.grid.n)

    def build_trajectory(
        self, model: Optional[SelectionModel] = None, t_end: Optional[float] = None
    ) -> ReferenceTrajectory:
        return evolve_reference(
            model or self.build_model(),
            self.z_star0,
            q0=self.init.q0,
            p0=self.init.p0,
            lambda0=self.init.lambda0,
            t_end=t_end or self.time.t_end,
            dt=self.time.reference_dt,
            p_curvature_weight=self.reference.p_curvature_weight,
        )

    def with_overrides(
        self, out_dir: Optional[str] = None, epsilon: Optional[List[float]] = None
    ) -> "RunConfig":
        data = self.model_dump()
        if out_dir is not None:
            data["out_dir"] = out_dir
        if epsilon is not None:
            data["epsilon"] = list(epsilon)
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(_first_message(e), config_key=_error_key(e.errors()[0]))

    def to_dotted(self) -> str:
        """Render back into the dotted format; parse_config(to_dotted()) is the identity."""
        lines = []
        for name, value in self:
            if isinstance(value, BaseModel):
                lines += [f"{name}.{key} = {_render(v)}" for key, v in value]
            else:
                lines.append(f"{name} = {_render(value)}")
        return "\n".join(lines) + "\n"


def _render(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def known_keys() -> List[str]:
    keys = []
    for name, info in RunConfig.model_fields.items():
        annotation = info.annotation
        if isinstance(annotation, type) and issubclass(annotation, BaseModel):
            keys += [f"{name}.{sub}" for sub in annotation.model_fields]
        else:
            keys.append(name)
    return keys


def _error_key(error: Dict[str, Any]) -> str:
    parts = [str(p) for p in error.get("loc", ()) if isinstance(p, str)]
    return ".".join(parts[:2])


def _first_message(e: ValidationError) -> str:
    err = e.errors()[0]
    return f"{_error_key(err) or 'config'}: {err['msg']}"


def _split_line(raw: str, number: int) -> Optional[Tuple[str, str]]:
    text = raw.split("#", 1)[0].strip()
    if not text:
        return None
    if "=" not in text:
        raise ConfigParseError(f"expected 'key = value', got {text!r}", number)
    key, value = (part.strip() for part in text.split("=", 1))
    if not key:
        raise ConfigParseError("missing key", number)
    if not value:
        raise ConfigParseError(f"missing value for {key}", number, config_key=key)
    return key, value


def parse_config(text: str) -> RunConfig:
    """
    Parse a dotted config document. Unknown or repeated keys, malformed lines
    and failed validation raise ConfigParseError with the 1-based line number
    of the offending key (0 when no single line is responsible).
    """
    allowed = set(known_keys())
    data: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        parsed = _split_line(raw, number)
        if parsed is None:
            continue
        key, value = parsed
        if key not in allowed:
            raise ConfigParseError(f"unknown key {key!r}", number, config_key=key)
        if key in lines:
            raise ConfigParseError(
                f"duplicate key {key!r} (first set on line {lines[key]})", number, config_key=key
            )
        lines[key] = number
        item: Union[str, List[str]] = value
        if key in LIST_KEYS:
            item = [v.strip() for v in value.split(",")]
            if any(not v for v in item):
                raise ConfigParseError(f"empty entry in list {key!r}", number, config_key=key)
        if "." in key:
            section, sub = key.split(".", 1)
            data.setdefault(section, {})[sub] = item
        else:
            data[key] = item

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        key = _error_key(err)
        number = lines.get(key)
        if number is None:
            # section-level failure: point at the first line of that section
            section_lines = [n for k, n in lines.items() if k.split(".")[0] == key]
            number = min(section_lines) if section_lines else 0
        raise ConfigParseError(err["msg"], number, config_key=key or None)


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Read and parse a config file; defaults when path is None."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config {path}: {e}")
    except UnicodeDecodeError as e:
        raise ConfigurationError(f"Config {path} is not valid UTF-8: {e.reason} at byte {e.start}")
    return parse_config(text)


def find_config_file(start: Optional[Path] = None) -> Optional[Path]:
    """Look for infsim.conf in `start` (default cwd) and its parents."""
    current = (start or Path.cwd()).resolve()
    for directory in (current, *current.parents):
        candidate = directory / DEFAULT_CONFIG_FILE
        if candidate.is_file():
            return candidate
    return None


def check_buildable(config: RunConfig) -> None:
    """Construct the model and grid once so invalid combinations surface early."""
    try:
        config.build_model()
        config.build_grid()
    except InfsimError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigurationError(str(e))
    if not math.isfinite(config.z_star0):
        raise ConfigurationError("z_star0 must be finite", config_key="z_star0")

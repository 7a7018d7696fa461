"""
Tests for the dotted run configuration.
"""
import pytest

from infsim.cli.config import (
    DEFAULT_CONFIG_FILE,
    RunConfig,
    check_buildable,
    find_config_file,
    known_keys,
    load_config,
    parse_config,
)
from infsim.core.operator import Backend
from infsim.core.selection import SelectionKind
from infsim.errors import ConfigParseError, ConfigurationError

FULL = """\
# double well, two eps
selection.kind = double_well
selection.coeffs = 1.0, 0.1, 0
z_star0 = 0.8
epsilon = 0.2, 0.1   # decreasing
grid.zmin = -3
grid.zmax = 3
grid.n = 1024
time.t_end = 2
time.snapshot_every = 0.25
operator.backend = direct
init.profile = gaussian
logging.level = debug
logging.format = json
out_dir = runs/dw
"""


@pytest.mark.unit
class TestParseConfig:
    """Parsing the `section.key = value` format."""

    def test_empty_document_gives_defaults(self):
        config = parse_config("")
        assert config == RunConfig()
        assert config.epsilon == [0.1]
        assert config.grid.n == 2048
        assert config.alpha == 0.4
        assert config.operator.backend is Backend.FFT
        assert not config.sweep_mode

    def test_full_document(self):
        config = parse_config(FULL)
        assert config.selection.kind is SelectionKind.DOUBLE_WELL
        assert config.selection.coeffs == [1.0, 0.1, 0.0]
        assert config.epsilon == [0.2, 0.1]
        assert config.sweep_mode
        assert config.eps == 0.2
        assert config.grid.n == 1024
        assert config.time.snapshot_every == 0.25
        assert config.operator.backend is Backend.DIRECT
        assert config.init.profile == "gaussian"
        assert config.logging.level == "DEBUG"
        assert config.out_dir == "runs/dw"

    def test_unknown_key(self):
        with pytest.raises(ConfigParseError) as exc_info:
            parse_config("epsilon = 0.1\ngrid.size = 10\n")
        assert exc_info.value.line_number == 2
        assert exc_info.value.config_key == "grid.size"
        assert "line 2" in str(exc_info.value)

    def test_duplicate_key(self):
        with pytest.raises(ConfigParseError) as exc_info:
            parse_config("grid.n = 512\n\ngrid.n = 1024\n")
        assert exc_info.value.line_number == 3
        assert "first set on line 1" in str(exc_info.value)

    def test_malformed_line(self):
        with pytest.raises(ConfigParseError) as exc_info:
            parse_config("# header\nepsilon 0.1\n")
        assert exc_info.value.line_number == 2

    def test_missing_value(self):
        with pytest.raises(ConfigParseError) as exc_info:
            parse_config("alpha =\n")
        assert exc_info.value.config_key == "alpha"

    def test_empty_list_entry(self):
        with pytest.raises(ConfigParseError):
            parse_config("epsilon = 0.2,,0.1\n")

    def test_validation_error_points_at_key(self):
        with pytest.raises(ConfigParseError) as exc_info:
            parse_config("epsilon = 0.1\ngrid.n = 1000\n")
        assert exc_info.value.line_number == 2
        assert exc_info.value.config_key == "grid.n"

    def test_section_error_points_at_section(self):
        with pytest.raises(ConfigParseError) as exc_info:
            parse_config("epsilon = 0.1\ngrid.zmin = 2\ngrid.zmax = 1\n")
        assert exc_info.value.line_number == 2
        assert exc_info.value.config_key == "grid"

    @pytest.mark.parametrize(
        "text",
        ["alpha = 0.5", "epsilon = 0.1, -0.1", "time.dt_factor = 0.5", "operator.backend = spectral"],
    )
    def test_invalid_values(self, text):
        with pytest.raises(ConfigParseError) as exc_info:
            parse_config(text + "\n")
        assert exc_info.value.line_number == 1

    def test_rendering_round_trips(self):
        config = parse_config(FULL)
        assert parse_config(config.to_dotted()) == config
        assert parse_config(RunConfig().to_dotted()) == RunConfig()

    def test_known_keys(self):
        keys = known_keys()
        assert "selection.coeffs" in keys
        assert "epsilon" in keys
        assert "harness.density_floor" in keys
        assert "harness.core_span" in keys
        assert "selection" not in keys


@pytest.mark.unit
class TestConfigHelpers:
    def test_with_overrides(self):
        config = RunConfig().with_overrides(out_dir="elsewhere", epsilon=[0.05])
        assert config.out_dir == "elsewhere"
        assert config.epsilon == [0.05]

    def test_with_overrides_validates(self):
        with pytest.raises(ConfigurationError) as exc_info:
            RunConfig().with_overrides(epsilon=[-1.0])
        assert exc_info.value.config_key == "epsilon"

    def test_load_config(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("z_star0 = 0.25\n")
        assert load_config(path).z_star0 == 0.25
        assert load_config(None) == RunConfig()

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.conf")

    def test_load_non_utf8_file(self, tmp_path):
        path = tmp_path / "latin1.conf"
        path.write_bytes(b"z_star0 = 0.25 # caf\xe9\n")
        with pytest.raises(ConfigurationError, match="UTF-8"):
            load_config(path)

    def test_find_config_file(self, tmp_path):
        nested = tmp_path / "a" / "b"
        nested.mkdir(parents=True)
        (tmp_path / DEFAULT_CONFIG_FILE).write_text("epsilon = 0.1\n")
        assert find_config_file(nested) == (tmp_path / DEFAULT_CONFIG_FILE).resolve()

    def test_check_buildable(self):
        check_buildable(RunConfig())
        bad = parse_config("selection.kind = double_well\nselection.coeffs = 1.0\n")
        with pytest.raises(ConfigurationError) as exc_info:
            check_buildable(bad)
        assert exc_info.value.config_key == "selection.coeffs"

    def test_build_trajectory(self):
        config = parse_config("time.t_end = 0.5\nz_star0 = 1.0\n")
        traj = config.build_trajectory()
        assert traj.times[-1] == pytest.approx(0.5)
        assert traj.z_star[0] == 1.0

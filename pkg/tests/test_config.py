import pytest

from hybridsqueeze.config import SweepSpec, load_config, parse_config
from hybridsqueeze.errors import ConfigError, ValidationError
from hybridsqueeze.solver import Method, SolverOptions

FIG2_TEXT = """\
[system]
kappa = 1000
gamma_m = 1e-5
gamma = 0.001   # both ensembles
g_a1 = 10
g_a2 = 10
delta_1 = 2
delta_2 = -2
n_th = 0
g_minus = 1

[solver]
"""


def test_fig2_reference_set_echo():
    cfg = parse_config(FIG2_TEXT)
    p = cfg.system()
    assert (p.kappa, p.gamma_m, p.g_a1, p.g_a2, p.delta_1, p.delta_2, p.n_th, p.g_minus) == (
        1000.0, 1e-5, 10.0, 10.0, 2.0, -2.0, 0.0, 1.0,
    )
    assert p.gamma_1 == p.gamma_2 == 0.001


def test_empty_solver_section_defaults():
    cfg = parse_config(FIG2_TEXT)
    assert cfg.solver == SolverOptions()
    assert cfg.solver.method is Method.HARMONIC_BALANCE and cfg.solver.harmonics == 6


def test_type_mismatch_names_key_and_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[system]\ng_minus = 1\nkappa = fast\n")
    err = exc.value
    assert err.key == "kappa" and err.line == 3
    assert "kappa" in str(err) and "line 3" in str(err)
    assert err.exit_code == 1


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown key") as exc:
        parse_config("[system]\nkappa = 1\ng_minus = 1\nkapa = 2\n")
    assert exc.value.key == "kapa" and exc.value.line == 4


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[plots]\ncolor = red\n")


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate key"):
        parse_config("[system]\nkappa = 1\nkappa = 2\n")


def test_missing_required_field():
    cfg = parse_config("[system]\nkappa = 10\n")
    with pytest.raises(ConfigError, match="missing required field") as exc:
        cfg.system()
    assert exc.value.key == "g_minus"


def test_invalid_physics_is_validation_error():
    cfg = parse_config("[system]\nkappa = 10\ng_minus = 1\ng_plus = 2\n")
    with pytest.raises(ValidationError, match="Bogoliubov-unstable"):
        cfg.system()


def test_solver_and_sweep_sections():
    cfg = parse_config(
        FIG2_TEXT
        + "method = time-integration\nharmonics = 8\n\n[sweep]\nparameter = kappa\nstart = 1\nstop = 1000\ncount = 4\nscale = log\noptimize = yes\n"
        + "\n[output]\npath = out.csv\n"
    )
    assert cfg.solver.method is Method.TIME_INTEGRATION and cfg.solver.harmonics == 8
    spec = cfg.sweep_spec()
    assert spec.optimize and list(spec.values()) == pytest.approx([1, 10, 100, 1000])
    assert cfg.output == "out.csv"


def test_solver_value_errors_carry_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[solver]\nharmonics = 0\n")
    assert exc.value.key == "harmonics" and exc.value.line == 2


def test_sweep_count_at_least_two():
    with pytest.raises(ConfigError, match="count must be >= 2") as exc:
        parse_config("[sweep]\ncount = 1\n")
    assert exc.value.line == 2
    with pytest.raises(ConfigError):
        SweepSpec(count=1)


def test_sweep_defaults_overlay():
    cfg = parse_config("[sweep]\ncount = 5\n")
    spec = cfg.sweep_spec(SweepSpec(stop=0.8))
    assert spec.count == 5 and spec.stop == 0.8


def test_defaults_fill_missing_system_keys():
    from hybridsqueeze.analysis import fig2_params

    cfg = parse_config("[system]\ng_plus = 0.5\n")
    p = cfg.system(fig2_params(0.005))
    assert p.g_plus == 0.5 and p.kappa == 1000.0 and p.gamma_1 == 0.005


def test_physical_coupling_mode():
    cfg = parse_config(
        "[system]\ncoupling_mode = physical\nkappa = 1000\ngamma_m = 1e-5\n"
        "g = 1e-3\ndrive_plus = 250500\ndrive_minus = 499000\n"
    )
    p = cfg.system()
    assert p.g_minus == pytest.approx(1.0) and p.g_plus == pytest.approx(0.5)


def test_physical_mode_needs_drives():
    cfg = parse_config("[system]\ncoupling_mode = physical\nkappa = 1000\ng = 1e-3\n")
    with pytest.raises(ConfigError, match="drive_plus"):
        cfg.system()


def test_load_from_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(FIG2_TEXT)
    assert load_config(path).system().kappa == 1000.0

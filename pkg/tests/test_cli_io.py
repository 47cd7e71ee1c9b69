import dataclasses
import os

import numpy as np
import pytest

from gnsch import cli_io, driver
from gnsch.config import parse_config_text, serialize_config
from gnsch.errors import ConfigError

MINIMAL = """
[grid]
nx = 16

[time]
t_final = 1e-5
"""


class TestParseConfig:
    def test_bundled_testcase1_values(self):
        cfg = cli_io.parse_config(cli_io.bundled_config_path("testcase1"))
        assert cfg.physics.gamma == pytest.approx(1.0 / 500.0)
        assert cfg.physics.nu0 == pytest.approx(1e-2)
        assert cfg.physics.eta == pytest.approx(1e-3)
        assert cfg.physics.a == pytest.approx(3.0)
        assert cfg.grid.nx == 128
        assert cfg.time.t_final == pytest.approx(0.3)
        assert cfg.physics.alpha1 == pytest.approx(1.2)
        assert cfg.physics.alpha2 == pytest.approx(0.5)

    def test_bundled_tumor_values(self):
        cfg = cli_io.parse_config(cli_io.bundled_config_path("tumor-symmetric"))
        assert cfg.physics.growth_rate == pytest.approx(20.0)
        assert cfg.physics.c_star == pytest.approx(0.9)
        assert cfg.physics.kappa1 == 0.0
        assert cfg.physics.kappa2 == pytest.approx(20.0)
        assert cfg.physics.gamma == pytest.approx(1.0 / 1000.0)
        assert cfg.grid.nx == cfg.grid.ny == 64

    def test_all_bundled_configs_parse(self):
        names = cli_io.bundled_config_names()
        assert {"testcase1", "conv-space", "conv-time",
                "tumor-symmetric", "tumor-asymmetric"} <= set(names)
        for name in names:
            cli_io.parse_config(cli_io.bundled_config_path(name))

    def test_asymmetric_parameter_block(self):
        cfg = cli_io.parse_config(cli_io.bundled_config_path("tumor-asymmetric"))
        assert cfg.physics.alpha1 == pytest.approx(1.2)
        assert cfg.physics.alpha2 == pytest.approx(0.8)
        assert cfg.physics.kappa2 == pytest.approx(100.0)
        assert cfg.physics.gamma == pytest.approx(1.0 / 1500.0)

    def test_range_error_names_key(self):
        text = MINIMAL + "\n[physics]\na = 0.5\n"
        with pytest.raises(ConfigError, match="a "):
            parse_config_text(text)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="viscosity"):
            parse_config_text(MINIMAL + "\n[physics]\nviscosity = 1.0\n")

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="turbulence"):
            parse_config_text(MINIMAL + "\n[turbulence]\nmodel = none\n")

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="nx"):
            parse_config_text("[time]\nt_final = 1.0\n")

    def test_type_mismatch_names_key(self):
        with pytest.raises(ConfigError, match="nx"):
            parse_config_text("[grid]\nnx = many\n\n[time]\nt_final = 1.0\n")

    def test_defaults_applied(self):
        cfg = parse_config_text(MINIMAL)
        assert cfg.solver.tol == 1e-10
        assert cfg.solver.restart == 50
        assert cfg.solver.maxiter == 2000
        assert cfg.scheme.transform == "logistic"
        assert cfg.time.cfl_safety == 0.9

    def test_round_trip(self):
        for name in cli_io.bundled_config_names():
            cfg = cli_io.parse_config(cli_io.bundled_config_path(name))
            again = parse_config_text(serialize_config(cfg))
            assert again == cfg


@pytest.fixture
def small_run(tmp_path):
    cfg = cli_io.parse_config(cli_io.bundled_config_path("testcase1"))
    cfg = cfg.with_overrides(
        grid=dataclasses.replace(cfg.grid, nx=16),
        time=dataclasses.replace(cfg.time, t_final=3e-5),
        output=dataclasses.replace(cfg.output, dir=str(tmp_path)))
    return cfg, driver.run(cfg, quiet=True)


class TestWriters:
    def test_snapshot_line_count(self, tmp_path):
        cfg = cli_io.parse_config(cli_io.bundled_config_path("testcase1"))
        cfg = cfg.with_overrides(grid=dataclasses.replace(cfg.grid, nx=4))
        snap = driver.make_snapshot(driver.init_state(cfg), cfg.physics)
        path = tmp_path / "snap.csv"
        cli_io.write_snapshot(snap, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 5
        assert lines[0] == "x,rho,c,vx,p,mu"

    def test_snapshot_round_trip_bit_exact(self, small_run, tmp_path):
        cfg, result = small_run
        snap = result.snapshots[-1]
        path = tmp_path / "final.csv"
        cli_io.write_snapshot(snap, path)
        cols = cli_io.read_csv_columns(path)
        assert np.array_equal(cols["rho"], snap.rho)
        assert np.array_equal(cols["c"], snap.c)
        assert np.array_equal(cols["vx"], snap.vel[0])
        assert np.array_equal(cols["mu"], snap.mu)
        assert np.array_equal(cols["x"], cfg.grid.x_centers())

    def test_snapshot_2d_layout(self, tmp_path):
        cfg = cli_io.parse_config(cli_io.bundled_config_path("tumor-symmetric"))
        cfg = cfg.with_overrides(grid=dataclasses.replace(cfg.grid, nx=6, ny=6))
        snap = driver.make_snapshot(driver.init_state(cfg), cfg.physics)
        path = tmp_path / "snap2d.csv"
        cli_io.write_snapshot(snap, path)
        cols = cli_io.read_csv_columns(path)
        assert cols["x"].size == 36
        assert np.array_equal(cols["c"].reshape(6, 6), snap.c)
        # lexicographic order: x varies slowest
        assert np.all(np.diff(cols["x"]) >= 0)

    def test_diagnostics_row_count_and_round_trip(self, small_run, tmp_path):
        _, result = small_run
        path = tmp_path / "diag.csv"
        cli_io.write_diagnostics(result.diagnostics, path)
        cols = cli_io.read_csv_columns(path)
        assert cols["t"].size == len(result.diagnostics)
        assert np.array_equal(cols["total_mass"],
                              np.array([r.total_mass for r in result.diagnostics]))

    def test_convergence_writer(self, tmp_path):
        table = driver.ConvergenceResult(
            kind="space", resolutions=[0.1, 0.05],
            errors={"rho": [1e-2, 5e-3], "c": [0, 0], "v": [0, 0],
                    "total": [1e-2, 5e-3]},
            orders={"rho": 1.0, "c": 0.0, "v": 0.0, "total": 1.0})
        path = tmp_path / "conv.csv"
        cli_io.write_convergence(table, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "resolution,error,order"
        assert len(lines) == 3


class TestCli:
    def write_cfg(self, tmp_path, text):
        path = tmp_path / "run.cfg"
        path.write_text(text)
        return str(path)

    def test_run_happy_path(self, tmp_path):
        cfg_path = self.write_cfg(tmp_path, MINIMAL + f"""
[init]
kind = constant
c_base = 0.45
rho0 = 0.9
v0 = 1.0

[output]
dir = {tmp_path}/out
""")
        rc = cli_io.cli_main(["run", cfg_path, "--quiet"])
        assert rc == 0
        assert os.path.exists(tmp_path / "out" / "diagnostics.csv")
        assert os.path.exists(tmp_path / "out" / "snapshot_0000.csv")

    def test_unknown_subcommand_exit_2(self):
        assert cli_io.cli_main(["frobnicate", "x.cfg"]) == 2

    def test_missing_config_exit_1(self):
        assert cli_io.cli_main(["run", "/nonexistent/path.cfg", "--quiet"]) == 1

    def test_check_ok(self, tmp_path, capsys):
        cfg_path = self.write_cfg(tmp_path, MINIMAL + """
[init]
kind = constant
c_base = 0.45
rho0 = 0.9
v0 = 1.0
""")
        assert cli_io.cli_main(["check", cfg_path]) == 0
        out = capsys.readouterr().out
        assert "mass drift" in out

    def test_check_cfl_violation_exit_1(self, tmp_path, capsys):
        cfg_path = self.write_cfg(tmp_path, """
[grid]
nx = 128

[time]
t_final = 1.0
dt_init = 0.01

[init]
kind = constant
c_base = 0.45
rho0 = 0.9
v0 = 1.0
""")
        rc = cli_io.cli_main(["check", cfg_path, "--quiet"])
        assert rc == 1
        err = capsys.readouterr().err
        assert "CFL" in err

    def test_seed_flag_overrides(self, tmp_path):
        base = MINIMAL + """
[init]
kind = noisy-constant
c_base = 0.5
c_noise = -0.05
rho0 = 0.9
v0 = 1.0
seed = 1
"""
        cfg_path = self.write_cfg(tmp_path, base)
        out1 = str(tmp_path / "a")
        out2 = str(tmp_path / "b")
        out3 = str(tmp_path / "c")
        assert cli_io.cli_main(["run", cfg_path, "--quiet", "--output", out1,
                                "--seed", "7"]) == 0
        assert cli_io.cli_main(["run", cfg_path, "--quiet", "--output", out2,
                                "--seed", "7"]) == 0
        assert cli_io.cli_main(["run", cfg_path, "--quiet", "--output", out3,
                                "--seed", "8"]) == 0
        a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
        b = (tmp_path / "b" / "diagnostics.csv").read_bytes()
        c = (tmp_path / "c" / "diagnostics.csv").read_bytes()
        assert a == b
        assert a != c

    def test_converge_space_tiny(self, tmp_path):
        cfg_path = self.write_cfg(tmp_path, f"""
[grid]
nx = 16

[time]
t_final = 1e-4
dt_max = 1e-5

[init]
kind = cosine
c_base = 0.5
c_amp = 0.01
c_modes = 3
rho0 = 0.9
v0 = 1.0

[output]
dir = {tmp_path}/conv

[convergence]
space_grids = 16 32 64
dt_space = 1e-5
t_final_space = 1e-4
""")
        assert cli_io.cli_main(["converge-space", cfg_path, "--quiet"]) == 0
        assert os.path.exists(tmp_path / "conv" / "convergence_space.csv")

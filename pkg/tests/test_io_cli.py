import json

import numpy as np
import pytest

from bornq import cli, io
from bornq.grid import GridField, GridSpec
from bornq.radial import RadialChargeSpec, geometric_grid, solve_radial
from bornq.report import SCHEMA_VERSION, SolveReport

SMALL = {
    "electro-radial": ["--set", "grid.nodes=400"],
    "electro-grid": ["--set", "grid.n=12", "--set", "grid.half_width=3", "--set", "source.total=5"],
    "magneto": ["--set", "grid.nr=33", "--set", "grid.nz=65", "--set", "grid.lift_n=17"],
    "decompose": ["--set", "grid.n=48", "--set", "grid.half_width=2"],
    "verify": ["--set", "checks.samples=2000"],
}


# -- configuration -------------------------------------------------------------------

def write_ini(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text)
    return p


def test_defaults_and_ini(tmp_path):
    p = write_ini(tmp_path, "[run]\nq = 1.25\nseed = 7\n[grid]\nn = 20\n")
    cfg = io.load_config(p, mode="electro-grid", environ={})
    assert cfg["run.q"] == 1.25 and cfg["run.seed"] == 7 and cfg["grid.n"] == 20
    assert cfg["solver.boundary"] == "monopole"
    assert cfg.mode == "electro-grid"


@pytest.mark.parametrize("text,where", [
    ("[run]\nbogus = 1\n", "run.bogus"),
    ("[nowhere]\nq = 1\n", "nowhere.q"),
    ("[grid]\nn = many\n", "grid.n"),
    ("[run]\ncheck = maybe\n", "run.check"),
])
def test_bad_keys_name_the_path(tmp_path, text, where):
    with pytest.raises(io.ConfigError, match=where):
        io.load_config(write_ini(tmp_path, text), mode="verify", environ={})


def test_q_range_depends_on_mode():
    with pytest.raises(io.ConfigError, match="run.q"):
        io.load_config(mode="magneto", overrides={"run.q": "1.1"}, environ={})
    with pytest.raises(io.ConfigError, match="run.q"):
        io.load_config(mode="electro-grid", overrides={"run.q": "2"}, environ={})
    assert io.load_config(mode="verify", overrides={"run.q": "2"}, environ={})["run.q"] == 2.0


def test_mode_conflict(tmp_path):
    with pytest.raises(io.ConfigError, match="run.mode"):
        io.load_config(write_ini(tmp_path, "[run]\nmode = magneto\n"), mode="verify", environ={})


def test_precedence_file_env_override(tmp_path):
    p = write_ini(tmp_path, "[grid]\nn = 20\nnodes = 100\n")
    env = {"BORNQ_GRID_N": "30", "BORNQ_SOLVER_TOL_G": "1e-8", "HOME": "/x"}
    cfg = io.load_config(p, mode="electro-grid", overrides={"grid.nodes": "50"}, environ=env)
    assert cfg["grid.n"] == 30
    assert cfg["grid.nodes"] == 50
    assert cfg["solver.tol_G"] == 1e-8
    with pytest.raises(io.ConfigError, match="BORNQ_GRID_SIZE"):
        io.load_config(mode="verify", environ={"BORNQ_GRID_SIZE": "3"})


# -- files ------------------------------------------------------------------------------

def test_vtk_of_zero_field_has_64_entries(tmp_path):
    spec = GridSpec((0.0, 0.0, 0.0), 1.0, (4, 4, 4))
    path = io.export_field(GridField(spec, np.zeros(spec.dims), "phi"), tmp_path / "z.vtk")
    lines = path.read_text().splitlines()
    k = lines.index("LOOKUP_TABLE default")
    body = lines[k + 1:]
    assert len(body) == 64 and all(float(v) == 0.0 for v in body)
    assert "DIMENSIONS 4 4 4" in lines and "SPACING 1 1 1" in lines


@pytest.mark.parametrize("fmt", ["csv", "vtk"])
@pytest.mark.parametrize("vector", [False, True])
def test_field_round_trip_is_exact(tmp_path, rng, fmt, vector):
    spec = GridSpec((-1.0, -0.5, 0.25), 0.1, (4, 5, 6))
    vals = rng.normal(size=spec.dims + ((3,) if vector else ())) * 10.0 ** rng.integers(-20, 20)
    fld = GridField(spec, vals, "A" if vector else "phi")
    back = io.import_field(io.export_field(fld, tmp_path / f"f.{fmt}"))
    assert back.spec == spec
    assert np.array_equal(back.values, vals)
    assert back.name == fld.name


def test_export_is_bit_stable(tmp_path, rng):
    spec = GridSpec.centered(1.0, 5)
    fld = GridField(spec, rng.normal(size=spec.dims))
    a = io.export_field(fld, tmp_path / "a.vtk").read_bytes()
    b = io.export_field(fld, tmp_path / "b.vtk").read_bytes()
    assert a == b


def test_unsupported_format_lists_supported(tmp_path):
    spec = GridSpec.centered(1.0, 4)
    with pytest.raises(ValueError, match="csv, vtk"):
        io.export_field(GridField(spec, np.zeros(spec.dims)), tmp_path / "f.h5")
    with pytest.raises(ValueError, match="csv, vtk"):
        io.import_field(tmp_path / "f.npy")


def test_radial_csv_columns(tmp_path):
    tau = geometric_grid(1e-3, 10.0, 50)
    sol = solve_radial(RadialChargeSpec(tau, point_charge=1.0), q=1.5)
    path = io.write_radial_csv(tmp_path / "r.csv", sol)
    header, cols, _ = io.read_columns(path)
    assert tuple(header) == io.RADIAL_COLUMNS == ("tau", "dphi", "phi", "flux", "slack")
    assert np.array_equal(cols[0], sol.grid) and np.array_equal(cols[2], sol.phi)


def test_columns_reject_ragged(tmp_path):
    with pytest.raises(ValueError):
        io.write_columns(tmp_path / "x.csv", ["a", "b"], [[1, 2], [1]])


def test_gnuplot_script(tmp_path):
    io.write_columns(tmp_path / "d.csv", ["tau", "phi"], [[1, 2], [3, 4]])
    text = io.write_gnuplot(tmp_path / "d.gp", "d.csv", "tau", ["phi"], logx=True).read_text()
    assert "using 1:2" in text and "set logscale x" in text


# -- reports -----------------------------------------------------------------------------

def test_report_round_trip_and_rejects_unknown_keys():
    rep = SolveReport(mode="verify", energy_final=1.5)
    rep.add_check("a", 1e-3, 1e-2)
    back = SolveReport.from_json(rep.to_json())
    assert back.to_json() == rep.to_json()
    data = json.loads(rep.to_json())
    data["surprise"] = 1
    with pytest.raises(ValueError, match="surprise"):
        SolveReport.from_dict(data)
    data = json.loads(rep.to_json())
    data["schema_version"] = SCHEMA_VERSION + 1
    with pytest.raises(ValueError):
        SolveReport.from_dict(data)


# -- command line ---------------------------------------------------------------------------

def run(tmp_path, mode, *extra, name="out"):
    out = tmp_path / name
    code = cli.main([mode, "--out", str(out), *SMALL[mode], *extra])
    rep = SolveReport.from_json((out / "report.json").read_text())
    return code, rep, out


@pytest.mark.parametrize("mode", sorted(SMALL))
def test_every_mode_runs_and_passes(tmp_path, mode):
    code, rep, out = run(tmp_path, mode)
    assert code == 0, [c for c in rep.checks if not c.passed]
    assert rep.mode == mode and rep.all_passed
    assert all(np.isfinite(c.tol) for c in rep.checks)


def test_radial_zero_charge(tmp_path):
    code, rep, out = run(tmp_path, "electro-radial", "--set", "source.kind=zero")
    assert code == 0
    header, cols, _ = io.read_columns(out / "radial.csv")
    assert np.all(cols[header.index("phi")] == 0)


def test_magneto_zero_current(tmp_path):
    code, rep, out = run(tmp_path, "magneto", "--set", "current.amplitude=0")
    assert code == 0
    assert rep.energy_final == 0.0
    _, cols, _ = io.read_columns(out / "u.csv")
    assert np.all(cols[-1] == 0)


def test_verify_reports_pass_counts(tmp_path):
    code, rep, _ = run(tmp_path, "verify")
    assert rep.extra["passed"] == rep.extra["total"] == len(rep.checks)


def test_determinism_modulo_timing(tmp_path):
    _, a, _ = run(tmp_path, "decompose", "--seed", "3", name="a")
    _, b, _ = run(tmp_path, "decompose", "--seed", "3", name="b")
    a.timing, b.timing = {}, {}
    a.config["run"]["out"] = b.config["run"]["out"] = ""
    assert a.to_json() == b.to_json()


def test_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["verify", "--set", "grid.bogus=1", "--out", str(tmp_path)]) == 2
    assert "grid.bogus" in capsys.readouterr().err
    assert cli.main(["verify", "--set", "novalue"]) == 2


def test_failed_check_gives_nonzero_exit(tmp_path):
    code, rep, _ = run(tmp_path, "electro-grid", "--set", "solver.max_iter=1")
    assert code == 1
    assert not rep.all_passed


def test_solver_failure_still_writes_report(tmp_path):
    code, rep, _ = run(tmp_path, "electro-radial", "--set", "source.kind=csv",
                       "--set", f"source.file={tmp_path / 'missing.csv'}")
    assert code == 1
    assert any(c.name == "solver_error" for c in rep.checks)


def test_checks_off(tmp_path):
    code, rep, _ = run(tmp_path, "electro-grid", "--check", "off")
    assert code == 0
    assert rep.config["run"]["check"] is False

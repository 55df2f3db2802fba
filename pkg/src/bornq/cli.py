"""Command line entry point: ``bornq <mode> [--config PATH] [--out DIR] ...``.

Every run writes ``report.json`` to the output directory plus mode-specific
field files.  The exit status is 0 exactly when every enabled check passed.
"""
from __future__ import annotations

import argparse
import sys
import time
import traceback
from pathlib import Path

import numpy as np
from scipy import fft
from scipy.interpolate import griddata

from . import electro as el
from . import grid as gr
from . import io
from . import magneto as mg
from . import symmetry as sy
from . import verify as vf
from .grid import GridField, GridSpec
from .radial import (RadialChargeSpec, RadialMagneticProfile, active_set_fraction,
                     geometric_grid, radial_weak_residual, solve_radial)
from .report import SolveReport


# -- generators ------------------------------------------------------------------------

def _b_profile(cfg):
    kind = cfg["field.kind"]
    if kind == "zero":
        return None
    if kind == "cylindrical-b":
        amp, dec = cfg["field.amplitude"], cfg["field.decay"]
        return lambda t: amp * np.exp(-(np.asarray(t) / dec) ** 2)
    if kind == "csv":
        tau, val = io.read_profile(cfg["field.file"])
        return lambda t: np.interp(t, tau, val, right=0.0)
    raise io.ConfigError(f"field.kind: unknown generator {kind!r} (zero, cylindrical-b, csv)")


def _radial_case(cfg, report, out):
    tau = geometric_grid(cfg["grid.tau_min"], cfg["grid.tau_max"], cfg["grid.nodes"])
    kind = cfg["source.kind"]
    Q, w = cfg["source.total"], cfg["source.width"]
    if kind == "zero":
        charge = RadialChargeSpec(tau)
    elif kind == "gaussian":
        charge = RadialChargeSpec(tau, density=el.gaussian_density(Q, w)(tau))
    elif kind == "point-approx":
        charge = RadialChargeSpec(tau, point_charge=Q)
    elif kind == "csv":
        t_in, r_in = io.read_profile(cfg["source.file"])
        charge = RadialChargeSpec(tau, density=np.interp(tau, t_in, r_in, right=0.0))
    else:
        raise io.ConfigError(f"source.kind: unknown generator {kind!r} (zero, gaussian, point-approx, csv)")
    bfun = _b_profile(cfg)
    bprof = None if bfun is None else RadialMagneticProfile(bfun(tau))
    sol = solve_radial(charge, bprof, q=cfg["run.q"])
    io.write_radial_csv(out / "radial.csv", sol)
    io.write_gnuplot(out / "radial.gp", "radial.csv", "tau", ["phi", "dphi"], logx=True,
                     title="radial potential")
    report.energy_initial = report.energy_final = sol.energy
    report.converged = True
    report.warnings.extend(sol.warnings)
    report.extra.update(total_charge=charge.total(), phi_origin=sol.phi_at_origin())
    if cfg["run.check"]:
        bsq = sol.b ** 2
        report.add_check("radial_admissible", float(np.max(sol.dphi ** 2 - bsq) - 1.0), 0.0,
                         passed=bool(np.all(sol.slack > 0)))
        psi = np.exp(-tau) - np.exp(-tau[-1])
        res = radial_weak_residual(sol, psi)
        tol = cfg["checks.tol_W"] * max(1.0, abs(charge.total()))
        report.add_check("radial_weak_residual", abs(res), tol, note="psi = exp(-tau) - exp(-tau_N)")
        frac = active_set_fraction(sol, 1e-3)
        report.add_check("active_set_fraction_1e-3", frac, 1.0, note="tau^2-weighted")
        report.add_check("energy_finite", 0.0 if np.isfinite(sol.energy) else 1.0, 0.0)


def _grid_problem(cfg):
    spec = GridSpec.centered(cfg["grid.half_width"], cfg["grid.n"])
    kind = cfg["source.kind"]
    Q, w = cfg["source.total"], cfg["source.width"]
    if kind == "zero":
        rho = GridField(spec, np.zeros(spec.dims), "rho")
    elif kind == "gaussian":
        rho = el.gaussian_charge(spec, Q, w)
    elif kind == "point-approx":
        rho = el.gaussian_charge(spec, Q, 2.0 * spec.h)
    elif kind == "file":
        rho = io.import_field(cfg["source.file"])
        spec = rho.spec
    else:
        raise io.ConfigError(f"source.kind: unknown generator {kind!r} (zero, gaussian, point-approx, file)")
    fkind = cfg["field.kind"]
    if fkind == "file":
        B = io.import_field(cfg["field.file"])
        return el.ElectroGridProblem(rho=rho, B=B, q=cfg["run.q"], boundary=cfg["solver.boundary"],
                                     stencil=cfg["solver.stencil"])
    return el.cylindrical_problem(spec, rho, _b_profile(cfg), q=cfg["run.q"],
                                  boundary=cfg["solver.boundary"], stencil=cfg["solver.stencil"])


def _grid_case(cfg, report, out):
    prob = _grid_problem(cfg)
    phi, rep = el.minimize_IB(prob, tol_E=cfg["solver.tol_E"], tol_G=cfg["solver.tol_G"],
                              max_iter=cfg["solver.max_iter"], method=cfg["solver.method"])
    for name in ("energy_initial", "energy_final", "iterations", "converged", "grad_norm",
                 "energy_decrease", "energy_history"):
        setattr(report, name, getattr(rep, name))
    report.warnings.extend(rep.warnings)
    report.extra.update(rep.extra)
    report.timing.update(rep.timing)
    io.write_vtk(out / "phi.vtk", phi)
    io.write_field_csv(out / "phi.csv", phi)
    if cfg["run.check"]:
        report.add_check("converged", 0.0 if rep.converged else 1.0, 0.0)
        rng = np.random.default_rng(cfg["run.seed"])
        eq = el.variational_inequality_check(phi, phi, prob)
        report.add_check("vi_equality_case", abs(eq.lhs - eq.rhs), 1e-10)
        worst = -np.inf
        for _ in range(cfg["checks.tests"]):
            psi = el.random_feasible(prob, rng, amplitude=0.9)
            vi = el.variational_inequality_check(phi, psi, prob, tol_V=cfg["checks.tol_V"])
            worst = max(worst, vi.lhs - vi.rhs)
            if not vi.ok:
                break
        tol_V = cfg["checks.tol_V"]
        if tol_V is None:
            tol_V = 1e-3 * (abs(float(np.sum(prob.rho.values * phi.values)) * prob.spec.cell_volume)
                            + float(np.sum(np.abs(prob.rho.values))) * prob.spec.cell_volume)
        report.add_check("vi_random_max_excess", worst, tol_V, note=f"{cfg['checks.tests']} random psi")
        ref = prob.reference_feasible()
        worst_w = 0.0
        for _ in range(cfg["checks.tests"]):
            psi = el.random_feasible(prob, rng, amplitude=0.9)
            v = GridField(prob.spec, psi.values - ref, "psi")
            wr = el.weak_residual_grid(phi, v, prob)
            worst_w = max(worst_w, abs(wr.value) / max(v.l2_norm(), 1e-300))
        report.add_check("weak_residual_relative", worst_w, cfg["checks.tol_W"],
                         note="interior test functions")


def _current(cfg, grid):
    kind = cfg["current.kind"]
    if kind == "zero":
        return mg.CurrentProfile.zeros(grid)
    if kind == "ring":
        return mg.ring_current(grid, cfg["current.amplitude"], cfg["current.r0"], cfg["current.z0"],
                               cfg["current.width"])
    if kind == "solenoid-slab":
        return mg.solenoid_slab(grid, cfg["current.amplitude"], cfg["current.r_in"], cfg["current.r_out"],
                                cfg["current.half_height"])
    if kind == "csv":
        _, cols, _ = io.read_columns(cfg["current.file"])
        R, Z = grid.mesh()
        j = griddata((cols[0], cols[1]), cols[2], (R, Z), method="linear", fill_value=0.0)
        return mg.CurrentProfile(grid, j, "csv")
    raise io.ConfigError(f"current.kind: unknown generator {kind!r} (zero, ring, solenoid-slab, csv)")


def _magneto_case(cfg, report, out):
    grid = mg.HalfPlaneGrid.uniform(cfg["grid.r_max"], cfg["grid.z_max"], cfg["grid.nr"], cfg["grid.nz"])
    j = _current(cfg, grid)
    q = cfg["run.q"]
    tol_G = min(cfg["solver.tol_G"], 1e-8)
    u, rep = mg.minimize_J(j, q, tol_G=tol_G, max_iter=cfg["solver.max_iter"])
    for name in ("energy_initial", "energy_final", "iterations", "converged", "grad_norm",
                 "energy_decrease", "energy_history"):
        setattr(report, name, getattr(rep, name))
    report.warnings.extend(rep.warnings)
    report.extra.update(rep.extra)
    report.timing.update(rep.timing)
    R, Z = grid.mesh()
    io.write_columns(out / "u.csv", ["r", "z", "u", "j"], [R, Z, u.u, j.j])
    spec3 = GridSpec.centered(cfg["grid.lift_half_width"], cfg["grid.lift_n"])
    A = mg.lift_to_3d(u, spec3)
    io.write_vtk(out / "A.vtk", A)
    io.write_vtk(out / "curlA.vtk", GridField(spec3, gr.curl(A.values, spec3.h), "curlA"))
    if cfg["run.check"]:
        report.add_check("converged", 0.0 if rep.converged else 1.0, 0.0)
        report.add_check("energy_nonpositive", max(rep.energy_final, 0.0), 1e-14)
        rng = np.random.default_rng(cfg["run.seed"])
        e0 = rep.energy_final
        worst = np.inf
        mask = grid.free_mask()
        for _ in range(cfg["checks.tests"]):
            v = np.where(mask, rng.normal(size=grid.shape), 0.0) * 1e-3 * (1 + np.max(np.abs(u.u)))
            worst = min(worst, mg.energy_J(mg.ToroidalPotential(grid, u.u + v), j, q) - e0)
        report.add_check("optimality_gap_min", -worst, 1e-12 * max(1.0, abs(e0)),
                         note="energy(u*+v) - energy(u*) over random v, must be >= 0")


def _decompose_case(cfg, report, out):
    if cfg["source.kind"] == "file":
        A = io.import_field(cfg["source.file"])
    else:
        spec = GridSpec.centered(cfg["grid.half_width"], cfg["grid.n"])
        A = sy.random_equivariant_field(spec, np.random.default_rng(cfg["run.seed"]))
    c = sy.decompose(A)
    for f in c.as_tuple():
        io.write_vtk(out / f"{f.name}.vtk", f)
    report.converged = True
    report.extra["equivariance_defect"] = sy.equivariance_defect(A)
    if cfg["run.check"]:
        report.add_check("pythagoras_pointwise", sy.pythagoras_defect(A, c), 1e-12)
        e = sy.curl_orthogonality_check(c)
        report.add_check("curl_orthogonality_rho_tau", e.e1, cfg["checks.tol_sym"])
        report.add_check("curl_orthogonality_tau_zeta", e.e2, cfg["checks.tol_sym"])
        report.add_check("gradient_pythagoras", sy.nabla_pythagoras_check(c), cfg["checks.tol_sym"])


def _verify_case(cfg, report, out):
    vf.run_suite(seed=cfg["run.seed"], samples=cfg["checks.samples"], report=report)


CASES = {"electro-radial": _radial_case, "electro-grid": _grid_case, "magneto": _magneto_case,
         "decompose": _decompose_case, "verify": _verify_case}


def run_case(cfg: io.RunConfig, out=None):
    """Run one configured case, write ``report.json`` and return the report."""
    out = Path(cfg["run.out"] if out is None else out)
    out.mkdir(parents=True, exist_ok=True)
    report = SolveReport(mode=cfg.mode, config=cfg.echo())
    t0 = time.perf_counter()
    try:
        with fft.set_workers(cfg["run.threads"]):
            CASES[cfg.mode](cfg, report, out)
    except Exception as exc:                       # the report is still written
        report.extra["error"] = f"{type(exc).__name__}: {exc}"
        report.add_check("solver_error", 1.0, 0.0, note=report.extra["error"])
        report.timing["traceback"] = traceback.format_exc()
    report.timing["wall_seconds"] = time.perf_counter() - t0
    (out / "report.json").write_text(report.to_json() + "\n")
    return report


def build_parser():
    p = argparse.ArgumentParser(prog="bornq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="mode", required=True)
    for mode in io.MODES:
        s = sub.add_parser(mode)
        s.add_argument("--config", type=Path, help="INI configuration file")
        s.add_argument("--out", help="output directory (default from config: out)")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("--check", choices=("on", "off"))
        s.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one config key (repeatable)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {}
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            print(f"bornq: --set expects SECTION.KEY=VALUE, got {item!r}", file=sys.stderr)
            return 2
        overrides[key.strip()] = val.strip()
    for flag in ("out", "seed", "threads", "check"):
        val = getattr(args, flag)
        if val is not None:
            overrides[f"run.{flag}"] = str(val)
    try:
        cfg = io.load_config(args.config, mode=args.mode, overrides=overrides)
    except (io.ConfigError, OSError) as exc:
        print(f"bornq: config error: {exc}", file=sys.stderr)
        return 2
    report = run_case(cfg)
    status = "ok" if report.all_passed else "FAILED"
    print(f"{cfg.mode}: {status} ({sum(c.passed for c in report.checks)}/{len(report.checks)} checks) "
          f"-> {Path(cfg['run.out']) / 'report.json'}")
    for c in report.checks:
        if not c.passed:
            print(f"  failed: {c.name} = {c.value:.3e} (tol {c.tol:.3e}) {c.note}")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())

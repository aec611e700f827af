"""Command line entry point.

Exit status: 0 on success, 1 on usage or configuration errors, 2 when the
numerics fail (lost positivity, Newton divergence, no admissible step).
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..ek_solver import run
from ..errors import DomainError, InsufficientViscosityError, NewtonError, PositivityError
from ..hamiltonian_solver import HamiltonianState, run_hamiltonian, smoothing_residual
from ..vn_stability import (
    LinearizedSetup,
    SpatialScheme,
    TemporalScheme,
    cfl_bound_closed_form,
    critical_dt_bisection,
    stability_scan,
    theta_scheme,
)
from .config import (
    FLUX_ALIASES,
    ConfigError,
    RunConfig,
    dump_config,
    load_config,
    normalise_flux,
    normalise_temporal,
)
from .io import (
    HAM_DIAGNOSTICS_HEADER,
    HAM_SNAPSHOT_HEADER,
    snapshot_name,
    write_csv,
    write_diagnostics,
    write_snapshot,
    write_stability_table,
)
from .scenarios import (
    QUOTED_NONDIM,
    QUOTED_U_N,
    ktest_scenario,
    liu_gollub_nondimensionalize,
    liu_gollub_scenario,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

SCHEME_ALIASES = {
    "lf": "lax_friedrichs",
    "mlf": "modified_lf",
    "godunov": "godunov_roe",
}
NUMERICAL_ERRORS = (PositivityError, NewtonError, InsufficientViscosityError, DomainError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p, simulate=True):
    p.add_argument("config_file", nargs="?", help="INI configuration file")
    p.add_argument("--config", help="INI configuration file (same as the positional argument)")
    p.add_argument("--out-dir", help="output directory (default from config, else ./out)")
    p.add_argument("--dx", type=float, help="grid spacing override")
    p.add_argument("--dt", help="time step override: number, <c>dx2 or auto-entropy-cfl")
    p.add_argument("--seed", type=int, help="recorded in the run config; the schemes are deterministic")
    if simulate:
        p.add_argument("--flux", choices=sorted(FLUX_ALIASES), help="numerical flux")
        p.add_argument("--temporal", choices=("fe", "be", "rk2", "rk4"), help="time integrator")
        p.add_argument("--enforce-w", action="store_true", help="reset rho w from h after every step")
        p.add_argument("--original", action="store_true",
                       help="original-variable comparison scheme instead of the extended one")
    p.add_argument("--end-time", type=float, help="end time override")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ekorteweg", description="Euler-Korteweg numerical laboratory")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    st = sub.add_parser("stability", help="Von Neumann scan of a linearised scheme")
    st.add_argument("--config", help="INI file with a [stability] section")
    st.add_argument("--out-dir", help="write stability.csv here")
    st.add_argument("--scheme", help="lf, mlf, rusanov, godunov, centered, muscl_lf, muscl_rusanov, muscl_centered")
    st.add_argument("--temporal", choices=("fe", "be", "cn", "rk2", "theta"))
    st.add_argument("--theta", type=float)
    st.add_argument("--q", type=float, help="Rusanov viscosity (default |u|+c)")
    st.add_argument("--rho-bar", type=float)
    st.add_argument("--u-bar", type=float)
    st.add_argument("--c-bar", type=float)
    st.add_argument("--sigma-bar", type=float)
    st.add_argument("--dx", type=float)
    st.add_argument("--dt", type=float)
    st.add_argument("--n-xi", type=int)
    st.add_argument("--seed", type=int, help="accepted for uniformity; unused")

    cf = sub.add_parser("cfl", help="closed-form CFL bounds against bisection of the exact symbol")
    cf.add_argument("--out-dir", help="write cfl.csv here")
    cf.add_argument("--u-bar", type=float, default=0.5)
    cf.add_argument("--c-bar", type=float, default=1.0)
    cf.add_argument("--sigma-bar", type=float, default=1.0)
    cf.add_argument("--dx", type=float, default=0.01)
    cf.add_argument("--thetas", default="0,0.25", help="comma-separated Theta values (< 1/2)")
    cf.add_argument("--n-xi", type=int, default=1025)
    cf.add_argument("--seed", type=int, help="accepted for uniformity; unused")

    nd = sub.add_parser("nondim", help="falling-film nondimensional numbers")
    nd.add_argument("--re", type=float, default=29.0)
    nd.add_argument("--nu", type=float, default=6.28e-6)
    nd.add_argument("--g", type=float, default=9.8)
    nd.add_argument("--theta-deg", type=float, default=6.4)
    nd.add_argument("--rho", type=float, default=1134.0)
    nd.add_argument("--sigma", type=float, default=0.067)
    nd.add_argument("--wavelength", type=float, default=0.01)
    nd.add_argument("--quoted-u-n", type=float, default=QUOTED_U_N,
                    help="reference u_N to compare with (default: the experiment's quoted value)")
    nd.add_argument("--out-dir", help="write nondim.csv here")

    _common(sub.add_parser("simulate", help="run a scenario with the entropy-stable scheme"))
    _common(sub.add_parser("hamiltonian", help="run the Hamiltonian scheme on the periodic bump"), simulate=False)
    return parser


# ---------------------------------------------------------------- helpers

def _load(args) -> RunConfig:
    path = args.config or args.config_file
    if args.config and args.config_file and args.config != args.config_file:
        raise UsageError("give the configuration file once")
    return load_config(path) if path else RunConfig()


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out_dir or cfg.output.dir)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    sc, so = cfg.scenario, cfg.solver
    if args.dx is not None:
        sc = replace(sc, dx=args.dx)
    if getattr(args, "end_time", None) is not None:
        sc = replace(sc, end_time=args.end_time,
                     snapshot_times=tuple(t for t in sc.snapshot_times if t <= args.end_time))
    if args.dt is not None:
        so = replace(so, dt=args.dt)
        cfg.hamiltonian = replace(cfg.hamiltonian, dt=float(args.dt)) if _is_number(args.dt) else cfg.hamiltonian
    if getattr(args, "flux", None):
        so = replace(so, flux=normalise_flux(args.flux))
    if getattr(args, "temporal", None):
        temporal = normalise_temporal(args.temporal)
        so = replace(so, temporal=temporal, reconstruction="muscl" if temporal == "RK2" else so.reconstruction)
    if getattr(args, "enforce_w", False):
        so = replace(so, enforce_w=True)
    if getattr(args, "original", False):
        so = replace(so, formulation="original")
    if args.seed is not None:
        cfg.output = replace(cfg.output, seed=args.seed)
    cfg.scenario, cfg.solver = sc, so
    return cfg.validate()


def _is_number(text):
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def build_scenario(cfg: RunConfig):
    sc = cfg.scenario
    if sc.name == "ktest":
        return ktest_scenario(sc.dx, None, sc.end_time, sc.snapshot_times)
    lg = cfg.liu_gollub
    quoted = QUOTED_U_N if lg.velocity_scale == "quoted" else None
    rep = liu_gollub_nondimensionalize(lg.reynolds, lg.nu, lg.g, lg.theta_deg, lg.rho, lg.sigma, lg.wavelength,
                                       quoted_u_n=quoted)
    nondim = rep.quoted_u if quoted is not None else rep.formula
    return liu_gollub_scenario(nondim, lg.inlet_freq, lg.domain_length, sc.dx, sc.end_time, lg.inlet_amp,
                               sc.snapshot_times)


# ---------------------------------------------------------------- subcommands

def cmd_simulate(args, out):
    cfg = _apply_overrides(_load(args), args)
    scen = build_scenario(cfg)
    config = cfg.solver_config(dx=scen.dx, sources=scen.sources)
    res = run(scen.model, scen.initial.copy(), config, scen.end_time, scen.snapshot_times,
              entropy_check=cfg.solver.entropy_check)
    out_dir = _out_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    for t, snap in sorted(res.snapshots.items()):
        write_snapshot(out_dir / snapshot_name(t), scen.model, snap)
    write_diagnostics(out_dir / "diagnostics.csv", res.diagnostics)
    first, last = res.diagnostics[0].total_entropy, res.diagnostics[-1].total_entropy
    print(f"scenario {scen.name}: {res.steps} steps to t={res.state.time:.6g}, "
          f"entropy {first:.10g} -> {last:.10g} (relative {last / first:.12f}), "
          f"{len(res.snapshots)} snapshots in {out_dir}", file=out)
    return EXIT_OK


def cmd_hamiltonian(args, out):
    cfg = _apply_overrides(_load(args), args)
    if cfg.scenario.name != "ktest":
        raise UsageError("the Hamiltonian scheme runs on the periodic ktest scenario only")
    scen = build_scenario(cfg)
    ham = cfg.hamiltonian
    st0 = HamiltonianState(scen.initial.rho.copy(), scen.initial.u.copy(), scen.dx)
    r0 = smoothing_residual(st0.rho)
    background = max(float(np.sqrt(np.mean(r0**2))), 1e-12 * float(np.mean(st0.rho)))

    def width(h):
        hot = np.flatnonzero(np.abs(smoothing_residual(h)) > 3.0 * background)
        return 0.0 if hot.size == 0 else (hot[-1] - hot[0] + 1) * scen.dx

    widths = [width(st0.rho)]
    res = run_hamiltonian(scen.model, st0, ham.dt, scen.end_time, ham.method, scen.snapshot_times,
                          ham.newton_tol, ham.newton_max_iter,
                          callback=lambda s, rep: widths.append(width(s.rho)))
    out_dir = _out_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    for t, snap in sorted(res.snapshots.items()):
        x = scen.initial.x
        write_csv(out_dir / snapshot_name(t), HAM_SNAPSHOT_HEADER, zip(x, snap.rho, snap.u))
    write_csv(out_dir / "diagnostics.csv", HAM_DIAGNOSTICS_HEADER,
              ((r[0], r[1], r[3], w) for r, w in zip(res.rows, widths)))
    h = np.array([r[1] for r in res.rows])
    print(f"hamiltonian {ham.method}: {len(res.rows) - 1} steps to t={res.state.time:.6g}, "
          f"H {h[0]:.10g} -> {h[-1]:.10g} (dx-weighted {h[-1] * scen.dx:.10g}), "
          f"max |H/H0 - 1| = {np.max(np.abs(h / h[0] - 1)):.3e}, "
          f"final zone width {widths[-1]:.6g}", file=out)
    return EXIT_OK


def _stability_inputs(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    st = cfg.stability
    pick = lambda flag, default: default if flag is None else flag  # noqa: E731
    scheme = pick(args.scheme, st.scheme)
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    q = pick(args.q, st.q)
    temporal = normalise_temporal(pick(args.temporal, st.temporal))
    theta = pick(args.theta, st.theta)
    setup = LinearizedSetup(pick(args.rho_bar, st.rho_bar), pick(args.u_bar, st.u_bar),
                            pick(args.c_bar, st.c_bar), pick(args.sigma_bar, st.sigma_bar))
    try:
        spatial = SpatialScheme(scheme, None if q is None or q < 0 else q)
        temp = theta_scheme(theta) if temporal == "THETA" else TemporalScheme(temporal)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dx, dt = pick(args.dx, st.dx), pick(args.dt, st.dt)
    if not (dx > 0 and dt > 0):
        raise UsageError("dx and dt must be positive")
    return cfg, setup, spatial, temp, dx, dt, pick(args.n_xi, st.n_xi)


def cmd_stability(args, out):
    cfg, setup, spatial, temporal, dx, dt, n_xi = _stability_inputs(args)
    verdict, (xi, gp, gm) = stability_scan(setup, spatial, temporal, dx, dt, n_xi=n_xi, return_table=True)
    ok = verdict.stable and verdict.necessary_condition
    if args.out_dir:
        path = write_stability_table(Path(args.out_dir) / "stability.csv", xi, gp, gm, 1e-10)
        print(f"table: {path}", file=out)
    print(f"scheme {spatial.kind} / {temporal.kind}"
          + (f" theta={temporal.theta:g}" if temporal.kind == "Theta" else "")
          + f", dx={dx:g}, dt={dt:g}", file=out)
    print(f"max |G| = {verdict.max_amplification:.12g} at xi = {verdict.worst_xi:.6g}; "
          f"xi Im(Lambda) >= 0 on the band: {'yes' if verdict.necessary_condition else 'no'} "
          f"(min {verdict.min_xi_imag:.3e})", file=out)
    print(f"verdict: {'STABLE' if ok else 'UNSTABLE'}", file=out)
    return EXIT_OK


def cfl_table(setup, dx, thetas, n_xi=1025):
    """Rows (scheme, temporal, theta, closed form, corrected closed form, bisection)."""
    rows = []
    for kind in ("lax_friedrichs", "modified_lf", "rusanov"):
        for th in thetas:
            printed = cfl_bound_closed_form(setup, kind, th, dx)
            fixed = cfl_bound_closed_form(setup, kind, th, dx, corrected=True)
            if isinstance(printed, dict):
                printed, fixed = printed["dt"], fixed["dt"]
            crit = critical_dt_bisection(setup, SpatialScheme(kind), theta_scheme(th), dx, n_xi=n_xi)
            rows.append((kind, "Theta", th, printed, fixed, crit.dt))
    for kind in ("muscl_lf", "muscl_rusanov"):
        bound = cfl_bound_closed_form(setup, kind, 0.0, dx)
        crit = critical_dt_bisection(setup, SpatialScheme(kind), TemporalScheme("RK2"), dx, n_xi=n_xi)
        rows.append((kind, "RK2", math.nan, bound, bound, crit.dt))
    crit = critical_dt_bisection(setup, SpatialScheme("godunov_roe"), TemporalScheme("FE"), dx, n_xi=n_xi)
    rows.append(("godunov_roe", "FE", math.nan, math.nan, math.nan, crit.dt))
    return rows


def cmd_cfl(args, out):
    try:
        thetas = [float(t) for t in args.thetas.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --thetas: {exc}") from exc
    if any(not 0 <= t < 0.5 for t in thetas):
        raise UsageError("Theta values must lie in [0, 1/2)")
    setup = LinearizedSetup(1.0, args.u_bar, args.c_bar, args.sigma_bar)
    rows = cfl_table(setup, args.dx, thetas, args.n_xi)
    header = ("scheme", "temporal", "theta", "closed_form", "closed_form_corrected", "bisection")
    print(f"{'scheme':<16}{'time':<7}{'theta':>7}{'closed form':>15}{'corrected':>15}{'bisection':>15}", file=out)
    for r in rows:
        print(f"{r[0]:<16}{r[1]:<7}{r[2]:>7.3g}{r[3]:>15.6e}{r[4]:>15.6e}{r[5]:>15.6e}", file=out)
    if args.out_dir:
        write_csv(Path(args.out_dir) / "cfl.csv", header, rows)
    return EXIT_OK


def cmd_nondim(args, out):
    try:
        rep = liu_gollub_nondimensionalize(args.re, args.nu, args.g, args.theta_deg, args.rho, args.sigma,
                                           args.wavelength, quoted_u_n=args.quoted_u_n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    names = ("h_N", "u_N", "T_N", "froude_sq", "weber", "epsilon")
    print(f"{'quantity':<10}{'formula u_N':>15}{'quoted u_N':>15}{'reference':>12}", file=out)
    rows = []
    for name in names:
        a = getattr(rep.formula, name)
        b = getattr(rep.quoted_u, name) if rep.quoted_u else math.nan
        ref = QUOTED_NONDIM.get(name, math.nan)
        rows.append((name, a, b, ref))
        print(f"{name:<10}{a:>15.6g}{b:>15.6g}{ref:>12.4g}", file=out)
    if rep.u_ratio is not None:
        print(f"note: u_N = nu Re / h_N gives {rep.formula.u_N:.4g}, the quoted value is "
              f"{rep.quoted_u.u_N:.4g} (ratio {rep.u_ratio:.4f}); T_N and We follow the velocity used", file=out)
    if args.out_dir:
        write_csv(Path(args.out_dir) / "nondim.csv", ("quantity", "formula_u", "quoted_u", "reference"), rows)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "hamiltonian": cmd_hamiltonian,
    "stability": cmd_stability,
    "cfl": cmd_cfl,
    "nondim": cmd_nondim,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except (UsageError, ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Every command writes CSV files and a ``manifest.json`` into the output
directory (``--out``, else ``$NBODY_MAJORANTS_OUT``, else ``./results``).
``radii`` and ``series`` also print their table to stdout.

Exit codes: 0 success with all consistency checks passing, 1 a consistency
check failed, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    InternalConsistencyError,
    InvalidParametersError,
    NonConvergenceError,
    NumericFailure,
    OutOfDomainError,
    SingularConfigurationError,
)
from .nbody import KINDS, RenormSpec, SystemState

OUT_ENV = "NBODY_MAJORANTS_OUT"
EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

R_ANCHOR = 0.0839968103939379
VPLUS_ANCHOR = 0.149902575567304
R_HAT_ANCHOR = 0.094790093
R_HALF_ANCHOR = 0.42812819
R_HAT_OLD_HALF_ANCHOR = 0.25796556


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


class Run:
    """Collects output files and checks of one command and writes the manifest."""

    def __init__(self, args: argparse.Namespace, command: str):
        self.command = command
        self.args = args
        self.out = Path(args.out or os.environ.get(OUT_ENV) or "results")
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.checks: dict[str, bool] = {}
        self.extra: dict = {}
        self.start = time.perf_counter()

    def write_csv(self, name: str, header: list[str], rows, echo: bool = False) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
        path = self.out / name
        path.write_text(buf.getvalue())
        self.files.append(str(path))
        if echo:
            sys.stdout.write(buf.getvalue())
        return path

    def check(self, name: str, ok: bool) -> bool:
        self.checks[name] = bool(ok)
        return ok

    def finish(self) -> int:
        manifest = {
            "command": self.command,
            "config": {k: _jsonable(v) for k, v in sorted(vars(self.args).items()) if k != "func"},
            "version": __version__,
            "outputs": self.files,
            "checks": self.checks,
            "duration_s": time.perf_counter() - self.start,
            **self.extra,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        failed = [k for k, v in self.checks.items() if not v]
        if failed:
            print(f"consistency checks failed: {', '.join(failed)}", file=sys.stderr)
            return EXIT_CHECK
        return EXIT_OK


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# ---------------------------------------------------------------------------
# radii
# ---------------------------------------------------------------------------


def cmd_radii(args) -> int:
    from .majorants import radii

    run = Run(args, "radii")
    tol = args.tol if args.tol is not None else 1e-12
    rows = []
    for eta0 in args.eta0:
        r = radii.radius_r(eta0, tol=min(tol, 1e-10))
        rh = radii.radius_r_hat_old(eta0)
        anchor_r = R_HALF_ANCHOR if eta0 == 0.5 else ""
        anchor_rh = R_HAT_OLD_HALF_ANCHOR if eta0 == 0.5 else ""
        rows.append([f"r({eta0})", r, 1e-10, anchor_r])
        rows.append([f"r_hat_old({eta0})", rh, 1e-10, anchor_rh])
        run.check(f"r_hat_old({eta0}) <= r({eta0})", rh <= r)
    R, vplus = radii.radius_R(tol)
    closed = radii.vplus_closed_form()
    fold, xi_fold = radii.fold_radius_hat()
    ratio = radii.midpoint_radius_ratio_estimate()
    rows += [
        ["R", float(R), tol, R_ANCHOR],
        ["v_plus", vplus, 1e-12, VPLUS_ANCHOR],
        ["v_plus_closed_form", closed, 1e-12, VPLUS_ANCHOR],
        ["R_hat", fold, 1e-4, R_HAT_ANCHOR],
        ["R_hat_ratio_estimate", ratio, 1e-3, R_HAT_ANCHOR],
        ["xi_hat_at_fold", xi_fold, 1e-10, ""],
    ]
    run.check("v_plus closed form agrees with root", abs(closed - vplus) <= 1e-12)
    run.check("R_hat fold agrees with ratio estimate", abs(fold - ratio) / fold <= 1e-3)
    run.check("R_hat > R", fold > R)
    run.write_csv("radii.csv", ["name", "value", "tolerance", "anchor"], rows, echo=True)
    return run.finish()


# ---------------------------------------------------------------------------
# series
# ---------------------------------------------------------------------------


def _model_from_args(args):
    from .majorants.flow import MajorantModel

    if args.kind in ("original", "cheap"):
        return MajorantModel()
    if args.kind == "pnorm":
        return MajorantModel(p=args.p, alpha=args.alpha)
    if args.kind == "energy":
        if args.kappa is None:
            raise InvalidParametersError("--kappa is required for the energy kind")
        return MajorantModel(p=args.p, alpha=args.alpha, kappa=args.kappa)
    raise InvalidParametersError(f"kind {args.kind!r} has no renormalized majorant")


def cmd_series(args) -> int:
    from .majorants import flow

    run = Run(args, "series")
    K = args.order
    rows = []
    if args.which == "rho":
        pm = flow.rho_series(args.mu0, args.nu0, K)
        rows += [["rho", k, c] for k, c in pm.rho.csv_rows()]
        lam = flow.lambda_series(pm.eta0, K)
        rescaled = np.array([lam.coeffs[k] * pm.time_scale**k for k in range(K + 1)])
        rescaled[0] += 1.0
        res = float(np.max(np.abs(rescaled - pm.rho.coeffs) / np.maximum(1.0, np.abs(pm.rho.coeffs))))
        rows.append(["check:rho_vs_lambda", "", res])
        run.check("rho(t) = 1 + lambda(t sqrt(mu0^2 + nu0))", res <= 1e-10)
    elif args.which == "lambda":
        lam = flow.lambda_series(args.eta0, K)
        rows += [["lambda", k, c] for k, c in lam.csv_rows()]
        run.check("lambda coefficients nonnegative", bool(np.all(lam.coeffs >= 0)))
    elif args.which == "xi-zeta":
        prof = flow.xi_zeta_series(K, _model_from_args(args))
        rows += [["xi", k, c] for k, c in prof.xi.csv_rows()]
        rows += [["zeta", k, c] for k, c in prof.zeta.csv_rows()]
        for name, val in flow.identity_residuals(prof).items():
            rows.append([f"check:{name}", "", val])
            run.check(f"identity {name}", val <= 1e-10)
        rows.append(["radius", "", prof.radius])
    else:
        prof = flow.midpoint_xi_zeta_hat(K, _model_from_args(args))
        rows += [["xi_hat", k, c] for k, c in prof.xi.csv_rows()]
        rows += [["zeta_hat", k, c] for k, c in prof.zeta.csv_rows()]
        val = flow.midpoint_identity_residual(prof)
        rows.append(["check:zeta_hat_of_xi_hat", "", val])
        run.check("zeta_hat(xi_hat) relation", val <= 1e-10)
        rows.append(["radius", "", prof.radius])
    run.write_csv(f"series_{args.which}.csv", ["series", "degree", "coefficient"], rows, echo=True)
    return run.finish()


# ---------------------------------------------------------------------------
# integration commands
# ---------------------------------------------------------------------------


def _load_state(args) -> tuple[SystemState, dict]:
    from .presets import PRESET_UNITS, get_preset, load_system

    if args.system:
        with open(args.system) as fh:
            units = json.load(fh).get("unit_system", {})
        return load_system(args.system), units
    name = args.preset or "circular"
    return get_preset(name), PRESET_UNITS[name]


def _spec_from_args(args, kind: str | None = None) -> RenormSpec:
    return RenormSpec(kind or args.renorm, p=args.p, alpha=args.alpha)


def _config(args, spec: RenormSpec, step: float):
    from .integrator import IntegrationConfig
    from .tableau import gauss_tableau

    return IntegrationConfig(
        tableau=gauss_tableau(args.stages),
        step=step,
        nsteps=args.nsteps,
        fp_tol=args.fp_tol,
        fp_maxiter=args.fp_maxiter,
        renorm=spec,
        predictor=args.predictor,
    )


def _default_step(state: SystemState, spec: RenormSpec, nsteps: int) -> float:
    from .kepler import fictitious_period

    if state.n != 2:
        raise InvalidParametersError("step size is required for systems other than two bodies")
    return fictitious_period(state, spec) / max(nsteps, 1)


def cmd_integrate(args) -> int:
    from .integrator import ERROR_COLUMNS, TRAJECTORY_COLUMNS, error_probe, integrate

    run = Run(args, "integrate")
    state, units = _load_state(args)
    spec = _spec_from_args(args).freeze_energy(state)
    step = args.step if args.step is not None else _default_step(state, spec, args.nsteps)
    cfg = _config(args, spec, step)
    run.extra["units"] = units
    run.extra["resolved"] = cfg.as_dict()
    if args.local_errors or args.certify:
        table = error_probe(state, cfg, "local", reference=args.reference, certify=args.certify)
        traj = table.trajectory
        run.write_csv("local_errors.csv", ERROR_COLUMNS, table.rows())
        if args.certify and table.bounds is not None:
            b = table.bounds
            ok = np.isnan(b) | (table.errors <= b)
            run.check("local errors within certificates", bool(np.all(ok)))
    else:
        traj = integrate(state, cfg)
    run.write_csv("trajectory.csv", TRAJECTORY_COLUMNS, traj.rows())
    if not traj.completed:
        run.extra["failure"] = {"step": len(traj.records), "error": repr(traj.failure)}
        print(f"integration stopped at step {len(traj.records)}: {traj.failure}", file=sys.stderr)
        run.finish()
        return EXIT_NUMERIC
    return run.finish()


def _summary_row(label: str, kind: str, cfg, table) -> list:
    traj = table.trajectory
    e = table.errors
    per_step = np.nanmax(e, axis=1) if len(e) else np.array([np.nan])
    med = float(np.nanmedian(per_step)) if len(e) else math.nan
    mx = float(np.nanmax(per_step)) if len(e) else math.nan
    spikes = int(np.sum(per_step > 10.0 * med)) if len(e) else 0
    failed = "" if traj.completed else len(traj.records)
    return [label, kind, cfg.nsteps, cfg.step, traj.completed, failed, mx, med,
            mx / med if med > 0 else math.nan, spikes, *table.max_per_body]


def cmd_compare(args) -> int:
    from .integrator import ERROR_COLUMNS, TRAJECTORY_COLUMNS, error_probe, integrate

    run = Run(args, "compare")
    state, units = _load_state(args)
    n = args.nsteps
    phys = _spec_from_args(args, "physical")
    ren = _spec_from_args(args).freeze_energy(state)
    if ren.kind == "physical":
        raise InvalidParametersError("compare needs a renormalized kind for --renorm")
    dt = args.dt if args.dt is not None else _default_step(state, phys, n)
    dtau = args.dtau if args.dtau is not None else _default_step(state, ren, n)
    run.extra["units"] = units
    rows = []
    summary = []
    for label, spec, step in (("physical", phys, dt), ("renormalized", ren, dtau)):
        cfg = _config(args, spec, step)
        run.extra[f"resolved_{label}"] = cfg.as_dict()
        if args.probe == "none":
            traj = integrate(state, cfg)
            run.write_csv(f"{label}_trajectory.csv", TRAJECTORY_COLUMNS, traj.rows())
            failed = "" if traj.completed else len(traj.records)
            summary.append([label, spec.kind, cfg.nsteps, step, traj.completed, failed]
                           + [math.nan] * (4 + state.n))
            continue
        modes = ("local", "global") if args.probe == "both" else (args.probe,)
        for mode in modes:
            table = error_probe(state, cfg, mode, reference=args.reference)
            run.write_csv(f"{label}_{mode}_errors.csv", ERROR_COLUMNS, table.rows())
            if mode == "local":
                summary.append(_summary_row(label, spec.kind, cfg, table))
                run.extra[f"{label}_reference_fallbacks"] = table.reference_fallbacks
    header = ["run", "kind", "nsteps", "step", "completed", "failed_step", "max_local_err",
              "median_local_err", "max_over_median", "spike_steps"] + [f"max_err_{nm}" for nm in state.names]
    run.write_csv("summary.csv", header, summary, echo=True)
    return run.finish()


# ---------------------------------------------------------------------------
# validate-bounds
# ---------------------------------------------------------------------------


def cmd_validate_bounds(args) -> int:
    from .majorants.validate import DominanceReport, check_physical, check_renormalized, check_rk_stages, random_state
    from .tableau import gauss_tableau

    run = Run(args, "validate-bounds")
    rng = np.random.default_rng(args.seed)
    report = DominanceReport()
    K = args.order
    for t in range(args.states):
        n = args.bodies[t % len(args.bodies)]
        st = random_state(rng, n)
        check_physical(st, K, report)
        for kind in args.kinds:
            spec = RenormSpec(kind, p=args.p, alpha=args.alpha)
            check_renormalized(st, spec, K, report)
            check_rk_stages(st, spec, gauss_tableau(args.stages), K, report)
    rows = [[name, margin, margin >= 0] for name, margin in sorted(report.margins.items())]
    run.write_csv("dominance.csv", ["check", "worst_relative_margin", "holds"], rows, echo=True)
    for name, margin in report.margins.items():
        run.check(name, margin >= 0)
    return run.finish()


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_float(x: str) -> float:
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    def global_flags(q, suppress: bool):
        # subcommand copies must not overwrite values given before the subcommand
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        q.add_argument("--out", default=d(None), help=f"output directory (default: ${OUT_ENV} or ./results)")
        q.add_argument("--tol", type=_positive_float, default=d(None), help="quadrature tolerance for radii")
        q.add_argument("--order", type=int, default=d(None), help="truncation order K")
        q.add_argument("--seed", type=int, default=d(0), help="seed for randomized sweeps")

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, suppress=True)

    p = argparse.ArgumentParser(prog="nbody-majorants", description=__doc__.split("\n")[0])
    global_flags(p, suppress=False)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("radii", parents=[common], help="convergence radii and related constants")
    r.add_argument("--eta0", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    r.set_defaults(func=cmd_radii)

    s = sub.add_parser("series", parents=[common], help="majorant series coefficients")
    s.add_argument("which", choices=["rho", "lambda", "xi-zeta", "midpoint"])
    s.add_argument("--mu0", type=float, default=1.0)
    s.add_argument("--nu0", type=float, default=1.0)
    s.add_argument("--eta0", type=float, default=0.5)
    s.add_argument("--kind", choices=["original", "cheap", "pnorm", "energy"], default="original")
    s.add_argument("--p", type=int, default=2)
    s.add_argument("--alpha", type=float, default=3.0)
    s.add_argument("--kappa", type=float, default=None, help="U/(E0+U) for the energy kind")
    s.set_defaults(func=cmd_series)

    def integration_flags(q):
        src = q.add_mutually_exclusive_group()
        src.add_argument("--system", help="system JSON file")
        src.add_argument("--preset", choices=["circular", "ellipse099", "figure8", "synthetic15"])
        q.add_argument("--renorm", choices=list(KINDS), default="pnorm")
        q.add_argument("--p", type=int, default=2)
        q.add_argument("--alpha", type=float, default=3.0)
        q.add_argument("--stages", type=int, default=1, help="Gauss stages (1 = implicit midpoint)")
        q.add_argument("--nsteps", type=int, default=1000)
        q.add_argument("--fp-tol", type=_positive_float, default=1e-14)
        q.add_argument("--fp-maxiter", type=int, default=100)
        q.add_argument("--predictor", choices=["constant", "euler"], default="constant")
        q.add_argument("--reference", choices=["auto", "kepler", "substep"], default="auto")

    i = sub.add_parser("integrate", parents=[common], help="fixed-step integration")
    integration_flags(i)
    i.add_argument("--step", type=float, default=None, help="step in the independent variable")
    i.add_argument("--local-errors", action="store_true")
    i.add_argument("--certify", action="store_true", help="attach majorant certificates to local errors")
    i.set_defaults(func=cmd_integrate)

    c = sub.add_parser("compare", parents=[common], help="physical versus renormalized integration")
    integration_flags(c)
    c.add_argument("--dt", type=float, default=None, help="physical time step")
    c.add_argument("--dtau", type=float, default=None, help="fictitious time step")
    c.add_argument("--probe", choices=["local", "global", "both", "none"], default="both",
                   help="error tables to produce; none only integrates (smoke mode)")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate-bounds", parents=[common], help="randomized majorant dominance sweep")
    v.add_argument("--states", type=int, default=100)
    v.add_argument("--bodies", type=int, nargs="+", default=[2, 3])
    v.add_argument("--kinds", nargs="+", choices=["original", "cheap", "pnorm", "energy"],
                   default=["original", "cheap", "pnorm", "energy"])
    v.add_argument("--stages", type=int, default=1)
    v.add_argument("--p", type=int, default=2)
    v.add_argument("--alpha", type=float, default=3.0)
    v.set_defaults(func=cmd_validate_bounds)
    return p


_ORDER_DEFAULTS = {"series": 60, "validate-bounds": 10}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.order is None:
        args.order = _ORDER_DEFAULTS.get(args.command, 60)
    try:
        return args.func(args)
    except (InvalidParametersError, OutOfDomainError, SingularConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalConsistencyError as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (NumericFailure, NonConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

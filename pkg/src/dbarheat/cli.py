"""Command-line entry point.

Every experiment is a subcommand driven by one config (a preset name or
an INI file, optionally overridden with --set section.key=value) and
writes CSV artifacts plus a manifest echoing the exact config, code
version, and wall time into the output directory.  Exit codes: 0 ok,
1 config/validation error, 2 numerical failure (non-convergence or
blow-up), 3 a verified bound was violated.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .boxop import assemble_box, operator_audit
from .config import load_config
from .errors import (
    BoundViolationError,
    ConfigError,
    ConvergenceError,
    NumericalError,
)
from .grid import ComplexField, lp_norm, sample
from .mild import Nonlinearity, picard_solve
from .presets import get_preset, preset_names
from .reportio import (
    decay_table,
    field_table,
    fit_summary_table,
    kernel_table,
    matrix_dump_table,
    series_table,
    write_csv,
    write_manifest,
)
from .semigroup import evolve_linear, heat_kernel, kernel_bound_check
from .stability import beta_identity_check, lp_lq_probe, stability_experiment
from .weights import delta as delta_scan

__all__ = ["main", "build_parser"]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dbarheat",
        description="weighted dbar heat flow experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hlp in [
        ("delta", "flatness invariant delta(phi) and its argmin"),
        ("audit", "operator assembly checks (Hermitian, positive, factored)"),
        ("evolve", "linear heat flow with norm decay schedule"),
        ("kernel", "heat kernel columns vs Gaussian envelope"),
        ("picard", "mild solution by Picard iteration"),
        ("perturb", "stability of two nearby mild solutions"),
        ("lplq", "L^p-L^q norm-ratio decay of the linear flow"),
        ("beta-check", "singular Beta-function identity quadrature"),
    ]:
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--config", metavar="PATH", help="INI config file")
        p.add_argument("--preset", metavar="NAME",
                       help="built-in config (%s)" % ", ".join(preset_names()))
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="max parallel workers (default 1)")
        p.add_argument("--seed", type=int, default=None, metavar="N",
                       help="override the config's random seed")
        p.add_argument("--set", action="append", default=[], metavar="S.K=V",
                       dest="overrides", help="override a config key")
    return parser


def _resolve_config(args):
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        cfg = get_preset(args.preset)
    elif args.config:
        cfg = load_config(args.config)
    else:
        raise ConfigError("a config source is required: --preset or --config")
    cfg.apply_overrides(args.overrides)
    declared = cfg.get_str("experiment", "command", None)
    if declared is not None and declared != args.command:
        raise ConfigError(
            "config declares command %r but %r was invoked"
            % (declared, args.command))
    return cfg


def _outdir(args, cfg):
    label = args.preset or (os.path.splitext(
        os.path.basename(args.config))[0] if args.config else "run")
    path = (args.out
            or cfg.get_str("output", "directory", None)
            or os.path.join("dbarheat-out", "%s-%s" % (args.command, label)))
    os.makedirs(path, exist_ok=True)
    return path


def _operator(cfg):
    return assemble_box(cfg.grid(), cfg.weight())


def _delta_report(cfg):
    return delta_scan(
        cfg.weight(),
        extent=cfg.get_float("delta", "extent", 4.0),
        resolution=cfg.get_int("delta", "resolution", 41),
        refine_rounds=cfg.get_int("delta", "refine_rounds", 3),
        j_max=cfg.get_int("delta", "j_max", None),
    )


def _oracle_rate(op):
    audit = operator_audit(op, trials=0, compute_lambda_min=True)
    if audit.lambda_min is None or not audit.lambda_min_converged:
        raise NumericalError("bottom-eigenvalue oracle did not converge")
    return float(audit.lambda_min)


def _rate_target(cfg, section, op):
    raw = cfg.get_str(section, "target_rate", None)
    if raw is None:
        return None
    if raw == "oracle":
        return _oracle_rate(op)
    return cfg.get_float(section, "target_rate")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_delta(cfg, outdir, args):
    report = _delta_report(cfg)
    header = ("weight", "delta", "argmin_re", "argmin_im", "classification",
              "analytic_lower_bound", "scan_extent", "scan_resolution")
    lower = report.analytic_lower_bound
    row = (cfg.weight().name, report.delta,
           report.argmin.real, report.argmin.imag, report.classification,
           "" if lower is None else lower, report.extent, report.resolution)
    write_csv(os.path.join(outdir, "delta.csv"), header, [row])
    print("delta(%s) = %.12g  [%s]  argmin = %.6g%+.6gi"
          % (cfg.weight().name, report.delta, report.classification,
             report.argmin.real, report.argmin.imag))
    return 0


def cmd_audit(cfg, outdir, args):
    op = _operator(cfg)
    audit = operator_audit(
        op,
        trials=cfg.get_int("audit", "trials", 20),
        seed=cfg.seed(args.seed),
        compute_lambda_min=cfg.get_bool("audit", "lambda_min", True),
    )
    header = ("n", "h", "weight", "hermitian_defect", "rayleigh_min",
              "factorization_defect", "lambda_min", "lambda_min_converged")
    row = (audit.points, audit.h, audit.weight_name, audit.hermitian_defect,
           audit.rayleigh_min,
           audit.factorization_defect,
           "" if audit.lambda_min is None else audit.lambda_min,
           audit.lambda_min_converged)
    write_csv(os.path.join(outdir, "audit.csv"), header, [row])
    if cfg.get_bool("audit", "matrix_dump", False):
        header_m, rows_m = matrix_dump_table(op.matrix)
        write_csv(os.path.join(outdir, "matrix.csv"), header_m, rows_m)
    print("audit(%s, n=%d): hermitian defect %.3g, rayleigh min %.3g"
          % (audit.weight_name, audit.points, audit.hermitian_defect,
             audit.rayleigh_min))
    return 0


def cmd_evolve(cfg, outdir, args):
    op = _operator(cfg)
    schedule = cfg.schedule()
    u0 = cfg.datum(op.spec)
    traj = evolve_linear(op, u0, float(schedule[-1]), cfg.stepper(),
                         snapshot_times=[t for t in schedule if t > 0])
    header, rows = decay_table(traj)
    write_csv(os.path.join(outdir, "decay.csv"), header, rows)
    header, rows = field_table(traj.fields[-1])
    write_csv(os.path.join(outdir, "final_field.csv"), header, rows)
    print("evolve: t_final=%.4g, final l2=%.6g, boundary mass %.3g"
          % (traj.times[-1], lp_norm(traj.fields[-1], 2),
             traj.boundary_masses()[-1]))
    return 0


def cmd_kernel(cfg, outdir, args):
    op = _operator(cfg)
    stepper = cfg.stepper()
    source = complex(cfg.get_float("kernel", "source_re", 0.0),
                     cfg.get_float("kernel", "source_im", 0.0))
    times = cfg.get_floats("kernel", "times")
    mode = cfg.get_str("kernel", "mode", "general")
    slices = []
    for t in times:
        sl = heat_kernel(op, t, source, stepper)
        slices.append(sl)
        header, rows = kernel_table(sl)
        write_csv(os.path.join(outdir, "kernel_t%s.csv"
                               % ("%g" % t).replace(".", "p")), header, rows)
    report = kernel_bound_check(
        slices, mode=mode,
        slack=cfg.get_float("kernel", "slack", 0.05),
        tail_floor=cfg.get_float("kernel", "tail_floor", 1e-3),
        weight=cfg.weight() if mode == "polynomial" else None,
    )
    header = ("t", "peak_ratio", "mass")
    rows = [(sl.t, sl.peak_ratio, sl.mass()) for sl in slices]
    write_csv(os.path.join(outdir, "kernel_peaks.csv"), header, rows)
    header = ("mode", "slack", "worst_ratio", "worst_t", "passed",
              "c_fit", "c_prime")
    row = (report.mode, report.slack, report.worst_ratio, report.worst_t,
           report.passed,
           "" if report.c_fit is None else report.c_fit,
           "" if report.c_prime is None else report.c_prime)
    write_csv(os.path.join(outdir, "kernel_bound.csv"), header, [row])
    print("kernel[%s]: worst envelope ratio %.4f at t=%.3g -> %s"
          % (report.mode, report.worst_ratio, report.worst_t,
             "ok" if report.passed else "VIOLATED"))
    if not report.passed:
        raise BoundViolationError(
            "kernel envelope exceeded by factor %.4f" % report.worst_ratio)
    return 0


def cmd_picard(cfg, outdir, args):
    op = _operator(cfg)
    schedule = cfg.schedule()
    u0 = cfg.datum(op.spec)
    nl = Nonlinearity(cfg.get_float("picard", "m", 3.0))
    traj, report = picard_solve(
        op, nl, u0, schedule, cfg.stepper(),
        q=cfg.get_float("picard", "q", 3.0),
        tol=cfg.get_float("picard", "tol", 1e-9),
        max_iter=cfg.get_int("picard", "max_iter", 25),
    )
    rows = []
    for i, d in enumerate(report.distances):
        ratio = report.ratios[i - 1] if 0 < i <= len(report.ratios) else ""
        rows.append((i + 1, d, ratio))
    write_csv(os.path.join(outdir, "picard_iterates.csv"),
              ("iter", "d_k", "ratio"), rows)
    header, rows = decay_table(traj)
    write_csv(os.path.join(outdir, "decay.csv"), header, rows)
    header, rows = field_table(traj.fields[-1])
    write_csv(os.path.join(outdir, "final_field.csv"), header, rows)
    status = ("converged in %d iterations" % report.iterations
              if report.converged else
              "DIVERGED after %d iterations" % report.iterations
              if report.diverged else
              "stopped at max_iter=%d without meeting tol" % report.iterations)
    print("picard: %s, final Y-norm %.6g" % (status, report.y_norm_final))
    if not report.converged:
        raise ConvergenceError("Picard iteration did not converge")
    return 0


def cmd_perturb(cfg, outdir, args):
    op = _operator(cfg)
    schedule = cfg.schedule()
    u0 = cfg.datum(op.spec)
    rel = cfg.get_float("perturb", "rel_perturbation", 0.01)
    u0_hat = (1.0 + rel) * u0
    nl = Nonlinearity(cfg.get_float("perturb", "m", 3.0))
    dr = _delta_report(cfg)
    window = None
    if cfg.has("perturb", "window_lo"):
        window = (cfg.get_float("perturb", "window_lo"),
                  cfg.get_float("perturb", "window_hi"))
    subsample = None
    nsub = cfg.get_int("perturb", "subsample", None)
    if nsub:
        lo = window[0] if window else float(schedule[schedule > 0][0])
        hi = window[1] if window else float(schedule[-1])
        subsample = list(np.geomspace(lo, hi, nsub))
    report = stability_experiment(
        op, nl, u0, u0_hat, schedule, cfg.stepper(),
        q=cfg.get_float("perturb", "q", 3.0),
        window=window,
        delta_positive=dr.is_positive,
        target_rate=_rate_target(cfg, "perturb", op),
        solver=cfg.get_str("perturb", "solver", "picard"),
        picard_tol=cfg.get_float("perturb", "picard_tol", 1e-9),
        fit_subsample=subsample,
    )
    header, rows = series_table(report.times, report.distances, report.fit)
    write_csv(os.path.join(outdir, "perturb_series.csv"), header, rows)
    header, rows = fit_summary_table(report.fit)
    write_csv(os.path.join(outdir, "perturb_summary.csv"), header, rows)
    write_csv(os.path.join(outdir, "perturb_constant.csv"),
              ("model", "constant", "initial_gap", "q", "m", "solver",
               "converged"),
              [(report.model, report.constant, report.initial_gap,
                report.q, report.m, report.solver, report.converged)])
    fitted = (report.fit.rate if report.model == "exponential"
              else report.fit.exponent)
    tgt = report.fit.target
    print("perturb[%s]: fitted %.5g%s, R^2=%.5f, constant %.5g"
          % (report.model, fitted,
             "" if tgt is None else " (target %.5g)" % tgt,
             report.fit.r_squared, report.constant))
    if not report.converged:
        raise ConvergenceError("a mild-solution solve did not converge")
    return 0


def cmd_lplq(cfg, outdir, args):
    op = _operator(cfg)
    schedule = cfg.schedule()
    p = cfg.get_float("lplq", "p")
    q = cfg.get_float("lplq", "q")
    n_probes = cfg.get_int("lplq", "n_probes", 4)
    width = cfg.get_float("lplq", "probe_width", 1.0)
    rng = np.random.default_rng(cfg.seed(args.seed))
    spec = op.spec
    probes = []
    for _ in range(n_probes):
        c = complex(*(rng.uniform(-spec.extent / 4, spec.extent / 4, 2)))
        w = width * rng.uniform(0.8, 1.2)
        probes.append(sample(spec, lambda z: np.exp(-np.abs(z - c)**2 / w**2)))
    window = None
    if cfg.has("lplq", "window_lo"):
        window = (cfg.get_float("lplq", "window_lo"),
                  cfg.get_float("lplq", "window_hi"))
    dr = _delta_report(cfg)
    model = cfg.get_str("lplq", "model", None)
    target_rate = _rate_target(cfg, "lplq", op)
    stepper = cfg.stepper()

    def run_one(probe):
        return lp_lq_probe(op, p, q, [probe], schedule, stepper,
                           window=window, model=model,
                           delta_positive=dr.is_positive,
                           target_rate=target_rate)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            parts = list(pool.map(run_one, probes))
    else:
        parts = [run_one(pr) for pr in probes]

    fits = [pt.fits[0] for pt in parts]
    for i, pt in enumerate(parts):
        header, rows = series_table(pt.times, pt.ratios[0], fits[i])
        write_csv(os.path.join(outdir, "lplq_probe%d.csv" % i), header, rows)
    header = ("probe", "model", "fitted_exponent", "fitted_rate",
              "target", "rel_deviation", "r_squared")
    rows = []
    for i, f in enumerate(fits):
        rows.append((i, f.model, f.exponent, f.rate,
                     "" if f.target is None else f.target,
                     "" if f.rel_deviation is None else f.rel_deviation,
                     f.r_squared))
    mean_exp = float(np.mean([f.exponent for f in fits]))
    mean_rate = float(np.mean([f.rate for f in fits]))
    rows.append(("mean", parts[0].model, mean_exp, mean_rate, "", "", ""))
    write_csv(os.path.join(outdir, "lplq_summary.csv"), header, rows)
    print("lplq p=%g q=%g [%s]: mean exponent %.5g (target %.5g), "
          "mean rate %.5g"
          % (p, q, parts[0].model, mean_exp, parts[0].target_exponent,
             mean_rate))
    return 0


def cmd_beta(cfg, outdir, args):
    raw = cfg.get_raw("beta", "pairs")
    pairs = []
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        toks = line.replace(",", " ").split()
        if len(toks) != 2:
            raise ConfigError("[beta] pairs: each record is 'k l', got %r"
                              % line)
        pairs.append((float(toks[0]), float(toks[1])))
    t_values = cfg.get_floats("beta", "t_values", [1.0])
    rows = []
    worst = 0.0
    for k, l in pairs:
        for t in t_values:
            rep = beta_identity_check(k, l, t)
            rows.append((k, l, t, rep.quadrature, rep.closed_form,
                         rep.abs_error))
            worst = max(worst, rep.abs_error)
    write_csv(os.path.join(outdir, "beta.csv"),
              ("k", "l", "t", "quadrature", "closed_form", "abs_error"),
              rows)
    print("beta-check: %d cases, worst |quad - closed| = %.3g"
          % (len(rows), worst))
    return 0


DISPATCH = {
    "delta": cmd_delta,
    "audit": cmd_audit,
    "evolve": cmd_evolve,
    "kernel": cmd_kernel,
    "picard": cmd_picard,
    "perturb": cmd_perturb,
    "lplq": cmd_lplq,
    "beta-check": cmd_beta,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    started = time.time()
    cfg = outdir = None
    try:
        cfg = _resolve_config(args)
        outdir = _outdir(args, cfg)
        return DISPATCH[args.command](cfg, outdir, args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 2
    except BoundViolationError as exc:
        print("bound violation: %s" % exc, file=sys.stderr)
        return 3
    except NumericalError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 2
    finally:
        # the manifest records exactly what ran, even on failure exits
        if cfg is not None and outdir is not None:
            write_manifest(
                os.path.join(outdir, "manifest.ini"),
                args.command, cfg.echo(),
                extra={"preset": args.preset or "", "jobs": args.jobs,
                       "seed_override": "" if args.seed is None else args.seed},
                started=started,
            )


if __name__ == "__main__":
    sys.exit(main())

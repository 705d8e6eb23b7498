"""Command-line front end.

Four subcommands drive the labs and persist results for external plotting:

    proxmse msd     --structure sparse:500:20 --lambda-grid 0:0.1:3 ...
    proxmse bounds  --structure lowrank:30:4 --lambda 10.95 ...
    proxmse denoise --structure sparse:200:10 --estimator regularized ...
    proxmse lasso   --structure sparse:500:20 --m-grid 20:20:400 ...

Structures are given either as colon shorthand (sparse:n:k, block:t:b:k,
lowrank:d:r; the signal seed is --seed) or as a JSON descriptor such as
{"kind":"sparse","n":500,"k":20,"seed":1}. Seeds are mandatory everywhere;
identical configs produce byte-identical output files. Every output embeds
the fully resolved configuration (CSV: leading '#' comment line; JSON: a
"config" field next to the "rows" array).

Exit codes: 0 success, 2 configuration error, 3 numerical/run-quality error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import denoise as denoise_lab
from . import geometry, lasso, signals
from .errors import (
    BoundNotValidError,
    InvalidStructureError,
    NumericalError,
    RunQualityError,
)


class ConfigError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """Parse 'start:step:stop' (inclusive of stop when it lands on the grid)
    or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            start, step, stop = (float(p) for p in parts)
            if step <= 0:
                raise ConfigError(f"grid step must be positive in {text!r}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            if count < 1:
                raise ConfigError(f"empty grid {text!r}")
            return [start + i * step for i in range(count)]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc
    raise ConfigError(f"bad grid {text!r}: use a number or start:step:stop")


def parse_structure(text: str, seed: int, magnitude_law: str) -> tuple[signals.SignalInstance, dict]:
    """Instance plus the resolved descriptor dict (for the config header)."""
    text = text.strip()
    if text.startswith("{"):
        try:
            desc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid structure JSON: {exc}") from exc
        if "seed" not in desc:
            raise ConfigError("structure JSON must carry a seed")
        try:
            inst = signals.instance_from_descriptor(desc, magnitude_law)
        except InvalidStructureError as exc:
            raise ConfigError(str(exc)) from exc
        return inst, desc
    parts = text.split(":")
    kind = parts[0]
    try:
        args = [int(p) for p in parts[1:]]
    except ValueError as exc:
        raise ConfigError(f"bad structure {text!r}: {exc}") from exc
    try:
        if kind == "sparse" and len(args) == 2:
            desc = {"kind": "sparse", "n": args[0], "k": args[1], "seed": seed}
        elif kind == "block" and len(args) == 3:
            desc = {"kind": "block", "t": args[0], "b": args[1], "k": args[2], "seed": seed}
        elif kind == "lowrank" and len(args) == 2:
            desc = {"kind": "lowrank", "d": args[0], "r": args[1], "seed": seed}
        else:
            raise ConfigError(
                f"bad structure {text!r}: use sparse:n:k, block:t:b:k, lowrank:d:r or JSON"
            )
        inst = signals.instance_from_descriptor(desc, magnitude_law)
    except InvalidStructureError as exc:
        raise ConfigError(str(exc)) from exc
    return inst, desc


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_output(columns: list[str], rows: list[dict], config: dict, fmt: str) -> str:
    """Render rows as CSV (with a '#' config header line) or JSON."""
    if fmt == "csv":
        lines = ["# config: " + json.dumps(config, sort_keys=True)]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_fmt(row.get(c)) for c in columns))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        clean_rows = [{c: row.get(c) for c in columns} for row in rows]
        return json.dumps({"config": config, "rows": clean_rows}, sort_keys=True) + "\n"
    raise ConfigError(f"unknown format {fmt!r}")


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Subcommand runners
# ---------------------------------------------------------------------------

def run_msd(args) -> int:
    inst, desc = parse_structure(args.structure, args.seed, args.magnitude_law)
    if args.lambda_grid is None and not args.cone:
        raise ConfigError("msd needs --lambda-grid and/or --cone")
    mc = geometry.McConfig(samples=args.samples, seed=args.seed, chunk=args.chunk)
    label = signals.structure_label(inst.structure)
    config = {
        "command": "msd", "structure": desc, "lambda_grid": args.lambda_grid,
        "cone": args.cone, "samples": args.samples, "seed": args.seed,
        "chunk": args.chunk, "format": args.format,
    }
    rows = []
    if args.lambda_grid is not None:
        lams = parse_grid(args.lambda_grid)
        for est in geometry.msd_lambda_curve(inst.structure, lams, mc):
            rows.append({"structure": label, "lambda": est.lam, "mean": est.mean,
                         "stderr": est.stderr, "samples": est.samples})
    if args.cone:
        est = geometry.msd_cone(inst.structure, mc)
        rows.append({"structure": label, "lambda": None, "mean": est.mean,
                     "stderr": est.stderr, "samples": est.samples})
    columns = ["structure", "lambda", "mean", "stderr", "samples"]
    _write(args.output, render_output(columns, rows, config, args.format))
    return 0


def run_bounds(args) -> int:
    inst, desc = parse_structure(args.structure, args.seed, args.magnitude_law)
    s = inst.structure
    gc = geometry.geometry_constants(s)
    label = signals.structure_label(s)
    config = {
        "command": "bounds", "structure": desc, "lambda": args.lam,
        "cone_msd": args.cone_msd, "seed": args.seed, "format": args.format,
    }
    row = {
        "structure": label,
        "lambda": args.lam,
        "table1_bound": None,
        "bound_valid": None,
        "threshold": geometry.table1_threshold(s),
        "subgradient_radius": gc.subgradient_radius,
        "sphere_max_value": gc.sphere_max_value,
        "tuning_lipschitz": gc.tuning_lipschitz,
        "dof": gc.dof,
        "sandwich_gap": 2.0 * gc.subgradient_radius / gc.sphere_max_value,
        "cone_msd": args.cone_msd,
        "lipschitz_bound": None,
    }
    if args.lam is not None:
        try:
            row["table1_bound"] = geometry.table1_bound(s, args.lam)
            row["bound_valid"] = True
        except BoundNotValidError:
            row["bound_valid"] = False
    if args.cone_msd is not None:
        row["lipschitz_bound"] = geometry.lipschitz_upper_bound(s, args.cone_msd)
    columns = ["structure", "lambda", "table1_bound", "bound_valid", "threshold",
               "subgradient_radius", "sphere_max_value", "tuning_lipschitz", "dof",
               "sandwich_gap", "cone_msd", "lipschitz_bound"]
    _write(args.output, render_output(columns, [row], config, args.format))
    return 0


def run_denoise(args) -> int:
    inst, desc = parse_structure(args.structure, args.seed, args.magnitude_law)
    estimator = args.estimator
    if estimator in ("regularized", "mixed") and args.lam is None:
        raise ConfigError(f"--lambda is required for the {estimator} estimator")
    if args.sigma_grid is not None:
        grid = parse_grid(args.sigma_grid)
    else:
        grid = denoise_lab.default_sigma_grid(inst).tolist()
    config = {
        "command": "denoise", "structure": desc, "estimator": estimator,
        "lambda": args.lam, "sigma_grid": grid, "trials": args.trials,
        "seed": args.seed, "reference_samples": args.reference_samples,
        "format": args.format,
    }
    d_ref = None
    if estimator == "regularized":
        run = denoise_lab.run_regularized(inst, args.lam, grid, args.trials, args.seed)
        if args.reference_samples:
            mc = geometry.McConfig(samples=args.reference_samples, seed=args.seed)
            d_ref = geometry.msd_lambda(inst.structure, args.lam, mc).mean
    elif estimator == "constrained":
        run = denoise_lab.run_constrained(inst, grid, args.trials, args.seed)
        if args.reference_samples:
            mc = geometry.McConfig(samples=args.reference_samples, seed=args.seed)
            d_ref = geometry.msd_cone(inst.structure, mc).mean
    elif estimator == "mixed":
        run = denoise_lab.run_mixed_nonneg_sparse(
            signals.nonnegative(inst), args.lam, grid, args.trials, args.seed
        )
    else:
        raise ConfigError(f"unknown estimator {estimator!r}")
    label = signals.structure_label(inst.structure)
    rows = []
    for rec in run.records:
        rows.append({
            "structure": label, "estimator": estimator, "lambda": run.lam,
            "sigma": rec.sigma, "nmse_mean": rec.nmse_mean,
            "nmse_stderr": rec.nmse_stderr, "trials": rec.trials,
            "d_reference": rec.d_mean if rec.d_mean is not None else d_ref,
        })
    columns = ["structure", "estimator", "lambda", "sigma", "nmse_mean",
               "nmse_stderr", "trials", "d_reference"]
    _write(args.output, render_output(columns, rows, config, args.format))
    return 0


def run_lasso(args) -> int:
    inst, desc = parse_structure(args.structure, args.seed, args.magnitude_law)
    m_grid = [int(m) for m in parse_grid(args.m_grid)]
    sigma = lasso.default_sigma(inst, args.sigma_scale)
    cfg = lasso.SolverConfig(max_iters=args.max_iters, tol=args.tol)
    config = {
        "command": "lasso", "structure": desc, "m_grid": m_grid,
        "trials": args.trials, "sigma": sigma, "matrix_kind": args.matrix,
        "samples": args.samples, "max_iters": args.max_iters, "tol": args.tol,
        "seed": args.seed, "format": args.format,
    }
    mc = geometry.McConfig(samples=args.samples, seed=args.seed)
    records = lasso.sweep_measurements(
        inst, m_grid, sigma=sigma, trials=args.trials, matrix_kind=args.matrix,
        cfg=cfg, seed=args.seed, mc=mc,
    )
    label = signals.structure_label(inst.structure)
    rows = []
    for rec in records:
        rows.append({
            "structure": label, "matrix_kind": args.matrix, "m": rec.m,
            "eta_mean": rec.eta_mean, "eta_stderr": rec.eta_stderr,
            "f_mean": rec.f_mean, "f_stderr": rec.f_stderr,
            "e_mean": rec.e_mean, "e_stderr": rec.e_stderr,
            "predicted_eta": rec.predicted_eta, "trials": rec.trials,
            "excluded_trials": rec.excluded_trials,
        })
    columns = ["structure", "matrix_kind", "m", "eta_mean", "eta_stderr",
               "f_mean", "f_stderr", "e_mean", "e_stderr", "predicted_eta",
               "trials", "excluded_trials"]
    _write(args.output, render_output(columns, rows, config, args.format))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxmse",
        description="Worst-case NMSE geometry of proximal denoising: "
                    "mean-squared-distance estimates, closed-form bounds, "
                    "denoising and constrained-LASSO experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--structure", required=True,
                       help="sparse:n:k | block:t:b:k | lowrank:d:r | JSON descriptor")
        p.add_argument("--seed", type=int, required=True,
                       help="seed for all randomness (mandatory; no wall-clock default)")
        p.add_argument("--output", required=True, help="result file path")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--magnitude-law", choices=["unit", "uniform"], default="uniform",
                       dest="magnitude_law", help="signal magnitude distribution")

    p = sub.add_parser("msd", help="Monte Carlo mean-squared-distance estimates")
    common(p)
    p.add_argument("--lambda-grid", dest="lambda_grid", help="scale grid start:step:stop")
    p.add_argument("--cone", action="store_true", help="also estimate the cone MSD")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--chunk", type=int, default=4096)
    p.set_defaults(runner=run_msd)

    p = sub.add_parser("bounds", help="closed-form bound and sandwich constants")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--cone-msd", dest="cone_msd", type=float, default=None,
                   help="cone MSD value to feed the Lipschitz upper bound")
    p.set_defaults(runner=run_bounds)

    p = sub.add_parser("denoise", help="NMSE-vs-sigma denoising experiments")
    common(p)
    p.add_argument("--estimator", choices=["regularized", "constrained", "mixed"],
                   required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--sigma-grid", dest="sigma_grid", default=None,
                   help="noise grid start:step:stop (default: log grid from the signal)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--reference-samples", dest="reference_samples", type=int, default=0,
                   help="MC samples for the matching distance reference (0 = skip)")
    p.set_defaults(runner=run_denoise)

    p = sub.add_parser("lasso", help="constrained-LASSO measurement sweeps")
    common(p)
    p.add_argument("--m-grid", dest="m_grid", required=True)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--sigma-scale", dest="sigma_scale", type=float, default=1e-4,
                   help="noise level as a fraction of ||x0||")
    p.add_argument("--matrix", choices=["unitary", "gaussian"], default="unitary")
    p.add_argument("--samples", type=int, default=20_000,
                   help="MC samples for the cone MSD prediction")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=600_000)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(runner=run_lasso)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.runner(args)
    except (ConfigError, InvalidStructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, RunQualityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

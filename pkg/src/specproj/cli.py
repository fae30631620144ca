"""Experiment runner.

Subcommands kernel / scaling / remainder / randomwave / loopset each read
one INI config, run the experiment, and write CSV (and JSONL) reports plus
a manifest.json holding the full config text, the package version, and
wall time.  Exit status: 0 success, 2 validation error, 3 budget error;
every failure prints one machine-parseable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import (
    EXPERIMENT_KINDS,
    ConfigError,
    ExperimentConfig,
    KernelConfig,
    LoopsetConfig,
    RandomwaveConfig,
    RemainderConfig,
    ScalingConfig,
    config_as_text,
    format_multi_index,
    load_config,
)
from .kernels import (
    DerivOrder,
    default_quad_degree,
    limit_kernel_batch,
    multi_indices,
    sphere_pair_deriv_batch,
    torus_pair_deriv_batch,
)
from .loopset import loopset_fraction
from .models import BudgetError, Model, SpectralWindow, TorusModel, exp_map
from .randomwave import ensemble_summary_rows, sample_ensemble
from .remainder import ProbeGrid, remainder_sweep
from .reports import write_csv, write_jsonl, write_manifest
from .special import sphere_quadrature


def _probe_pairs(model: Model, radius: float, points_per_axis: int):
    """All ordered pairs of tangent offsets from a cubical probe grid."""
    offsets = ProbeGrid(radius=radius,
                        points_per_axis=points_per_axis).offsets(model.dim)
    count = offsets.shape[0]
    us = np.repeat(offsets, count, axis=0)
    vs = np.tile(offsets, (count, 1))
    return us, vs


def _rescaled_sup_error(model: Model, x0: np.ndarray, lam: float,
                        delta: float, us: np.ndarray, vs: np.ndarray,
                        order: DerivOrder, limit_vals: np.ndarray) -> float:
    window = SpectralWindow(lo=lam, hi=lam + delta)
    scale = lam ** (-(model.dim - 1) - order.omega)
    if isinstance(model, TorusModel):
        vals = torus_pair_deriv_batch(model, window, (us - vs) / lam, order)
    else:
        vals = sphere_pair_deriv_batch(model, window, x0, us / lam,
                                       vs / lam, order)
    return float(np.max(np.abs(scale * vals - limit_vals)))


def convergence_report(model: Model, x0, lambdas, delta: float, max_j: int,
                       max_k: int, probe_radius: float,
                       points_per_axis: int):
    """Sup distance between the rescaled kernel and its universal limit.

    One row (lambda, alpha, beta, sup_error) per window position and
    derivative pair with |alpha| <= max_j, |beta| <= max_k; the limit side
    is integrated once per derivative pair since it does not move.
    """
    x0 = np.asarray(x0, dtype=float)
    us, vs = _probe_pairs(model, probe_radius, points_per_axis)
    diffs = us - vs
    reach = float(np.max(np.linalg.norm(diffs, axis=1)))
    sups = {}
    for alpha in multi_indices(model.dim, max_j):
        for beta in multi_indices(model.dim, max_k):
            order = DerivOrder(alpha=alpha, beta=beta)
            quad = sphere_quadrature(
                model.dim, default_quad_degree(reach, order.omega))
            limit_vals = delta * limit_kernel_batch(model.dim, diffs, order,
                                                    quad)
            for lam in lambdas:
                sups[(lam, alpha, beta)] = _rescaled_sup_error(
                    model, x0, lam, delta, us, vs, order, limit_vals)
    rows = []
    for lam in lambdas:
        for alpha in multi_indices(model.dim, max_j):
            for beta in multi_indices(model.dim, max_k):
                rows.append((float(lam), format_multi_index(alpha),
                             format_multi_index(beta),
                             sups[(lam, alpha, beta)]))
    return rows


def _run_kernel(config: KernelConfig, out_dir: Path) -> list[str]:
    model = config.model
    x0 = np.asarray(config.x0, dtype=float)
    us, vs = _probe_pairs(model, config.probe_radius, config.points_per_axis)
    order = DerivOrder(alpha=config.alpha, beta=config.beta)
    if isinstance(model, TorusModel):
        values = torus_pair_deriv_batch(model, config.window, us - vs, order)
    else:
        values = sphere_pair_deriv_batch(model, config.window, x0, us, vs,
                                         order)
    dim = model.dim
    header = ([f"u_{i + 1}" for i in range(dim)]
              + [f"v_{i + 1}" for i in range(dim)]
              + ["alpha", "beta", "value"])
    alpha_text = format_multi_index(config.alpha)
    beta_text = format_multi_index(config.beta)
    rows = [tuple(us[i]) + tuple(vs[i]) + (alpha_text, beta_text,
                                           float(values[i]))
            for i in range(us.shape[0])]
    write_csv(out_dir / "kernel_field.csv", header, rows)
    return ["kernel_field.csv"]


def _run_scaling(config: ScalingConfig, out_dir: Path) -> list[str]:
    rows = convergence_report(config.model, config.x0, config.lambdas,
                              config.delta, config.max_j, config.max_k,
                              config.probe_radius, config.points_per_axis)
    write_csv(out_dir / "scaling_report.csv",
              ["lambda", "alpha", "beta", "sup_error"], rows)
    return ["scaling_report.csv"]


def _run_remainder(config: RemainderConfig, out_dir: Path,
                   threads: int) -> list[str]:
    order = DerivOrder(alpha=config.alpha, beta=config.beta)
    probe = ProbeGrid(radius=config.probe_radius,
                      points_per_axis=config.points_per_axis)
    report = remainder_sweep(config.model, np.asarray(config.x0, dtype=float),
                             probe, config.lambdas, order=order,
                             threads=threads)
    write_csv(out_dir / "remainder.csv", ["lambda", "sup_remainder"],
              report.csv_rows())
    write_jsonl(out_dir / "remainder_summary.jsonl",
                [report.summary_record()])
    return ["remainder.csv", "remainder_summary.jsonl"]


def _run_randomwave(config: RandomwaveConfig, out_dir: Path) -> list[str]:
    model = config.model
    x0 = np.asarray(config.x0, dtype=float)
    offsets = ProbeGrid(radius=config.probe_radius,
                        points_per_axis=config.points_per_axis).offsets(
                            model.dim)
    grid = np.stack([exp_map(model, x0, offset) for offset in offsets])
    ensemble = sample_ensemble(model, config.window, config.samples,
                               config.seed, grid)
    write_csv(out_dir / "randomwave_summary.csv",
              ["point_index", "mean", "variance", "covariance_to_x0",
               "stderr"],
              ensemble_summary_rows(ensemble))
    outputs = ["randomwave_summary.csv"]
    if config.dump_samples:
        raw = np.ascontiguousarray(ensemble.values)
        (out_dir / "samples.bin").write_bytes(raw.tobytes())
        header = {
            "dtype": str(raw.dtype),
            "model": model.model_id,
            "seed": config.seed,
            "shape": list(raw.shape),
            "window": [config.window.lo, config.window.hi],
        }
        (out_dir / "samples.json").write_text(
            json.dumps(header, indent=2, sort_keys=True) + "\n")
        outputs += ["samples.bin", "samples.json"]
    return outputs


def _run_loopset(config: LoopsetConfig, out_dir: Path) -> list[str]:
    estimate = loopset_fraction(config.surface, np.asarray(config.x0),
                                config.n_directions, config.t_max,
                                config.tol, h=config.step, seed=config.seed,
                                t_min=config.t_min)
    write_csv(out_dir / "loopset.csv",
              ["direction_angle", "first_return_time_or_-1", "min_distance"],
              estimate.csv_rows())
    return ["loopset.csv"]


def run(kind: str, config: ExperimentConfig, out_dir: Path,
        threads: int = 1) -> list[str]:
    """Execute one experiment and write its reports plus manifest.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    if kind == "kernel":
        outputs = _run_kernel(config, out_dir)
    elif kind == "scaling":
        outputs = _run_scaling(config, out_dir)
    elif kind == "remainder":
        outputs = _run_remainder(config, out_dir, threads)
    elif kind == "randomwave":
        outputs = _run_randomwave(config, out_dir)
    elif kind == "loopset":
        outputs = _run_loopset(config, out_dir)
    else:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    from . import __version__
    write_manifest(out_dir, config_as_text(kind, config), outputs,
                   time.perf_counter() - start, __version__)
    return outputs


def _fail(kind: str, exc: BaseException) -> None:
    msg = str(exc).replace('"', "'").replace("\n", " ")
    print(f'error kind={kind} msg="{msg}"', file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="specproj",
        description="spectral projector kernel experiments on model "
                    "surfaces")
    subparsers = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        sub = subparsers.add_parser(kind)
        sub.add_argument("--config", required=True, help="INI config file")
        sub.add_argument("--out", required=True, help="output directory")
        sub.add_argument("--threads", type=int, default=1,
                         help="parallelism cap")
        sub.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args.kind, seed_override=args.seed)
        run(args.kind, config, Path(args.out), threads=max(1, args.threads))
    except ConfigError as exc:
        _fail("validation", exc)
        return 2
    except BudgetError as exc:
        _fail("budget", exc)
        return 3
    except (ValueError, OSError) as exc:
        _fail("validation", exc)
        return 2
    except ArithmeticError as exc:
        _fail("numerical", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

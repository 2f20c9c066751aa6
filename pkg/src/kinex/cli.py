"""Command-line driver.

Subcommands: ``equilibrium``, ``simulate``, ``ensemble``, ``verify`` and
``preset <name>``. Exit codes: 0 success, 1 verification failure or
non-convergence, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .kinetic import ClassSystem
from .metrics import DegenerateDistributionError, gini, mobility, observables, summarize_ensemble
from .presets import PRESETS, get_preset
from .sde import find_equilibrium, run_ensemble, run_trajectory
from .verify import run_checks

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

RNG_DESCRIPTION = ("numpy PCG64; realization k seeded by SeedSequence(seed, spawn_key=(k,)); "
                   "Gaussian deviates from Generator.standard_normal (ziggurat)")

log = logging.getLogger("kinex")


class OutputError(OSError):
    pass


def fmt(v: float) -> str:
    """17 significant digits: parses back to the identical double."""
    return format(float(v), ".17g")


def _open(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def write_csv(path: Path, header: list[str], rows) -> Path:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (str, int, np.integer)) else fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def write_json(path: Path, doc: dict) -> Path:
    with _open(path) as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_text(path: Path, text: str) -> Path:
    with _open(path) as fh:
        fh.write(text)
    return path


def _safe_mobility(x, sys):
    try:
        return mobility(x, sys)
    except DegenerateDistributionError:
        return float("nan")


def _starting_state(cfg: RunConfig, sys: ClassSystem):
    x0 = cfg.initial_state()
    info = {"equilibrated": cfg.init.equilibrate}
    if cfg.init.equilibrate:
        eq = find_equilibrium(x0, sys)
        info.update(converged=eq.converged, residual=eq.residual, steps=eq.steps)
        if not eq.converged:
            log.warning("pre-run did not converge (residual %.3g); starting anyway", eq.residual)
        x0 = eq.state
    return x0, info


def _out_dir(cfg: RunConfig) -> Path:
    return Path(cfg.output.directory)


def percent_table(labels, columns: dict[str, np.ndarray]) -> str:
    head = f"{'':<12s}" + "".join(f"{lab:>8}" for lab in labels)
    lines = [head]
    for name, vals in columns.items():
        lines.append(f"{name:<12s}" + "".join(f"{100 * v:8.2f}" for v in vals))
    return "\n".join(lines) + "\n"


def cmd_equilibrium(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    sys_ = cfg.system()
    eq = find_equilibrium(cfg.initial_state(), sys_)
    x = eq.state
    report = {
        "state": x,
        "percent": 100 * x,
        "mu": float(x @ sys_.incomes),
        "gini": gini(x, sys_.incomes),
        "mobility": _safe_mobility(x, sys_),
        "converged": eq.converged,
        "residual": eq.residual,
        "steps": eq.steps,
        "config": cfg.to_dict(),
    }
    out = _out_dir(cfg)
    if "csv" in cfg.output.formats:
        write_csv(out / "equilibrium.csv", ["class", "income", "fraction", "percent"],
                  [(i + 1, sys_.incomes[i], x[i], 100 * x[i]) for i in range(sys_.n)])
    if "json" in cfg.output.formats:
        write_json(out / "equilibrium.json", report)
    table = percent_table(range(1, sys_.n + 1), {"x_i (%)": x})
    table += (f"mu = {report['mu']:.6f}  G = {report['gini']:.6f}  M = {report['mobility']:.6g}\n"
              f"converged = {eq.converged}  residual = {eq.residual:.3e}  steps = {eq.steps}\n")
    if "txt" in cfg.output.formats:
        write_text(out / "equilibrium.txt", table)
    stdout.write(table)
    if not eq.converged:
        stdout.write(f"no convergence: residual {eq.residual:.3e}\n")
        return EXIT_FAIL
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, plot_scales: dict | None = None, series=(), stdout=None) -> int:
    stdout = stdout or sys.stdout
    sys_ = cfg.system()
    sde = cfg.sde_config()
    x0, start = _starting_state(cfg, sys_)
    traj = run_trajectory(x0, sys_, sde)
    obs = observables(traj.states, sys_)
    out = _out_dir(cfg)
    n = sys_.n
    header = ["step"] + [f"x_{i}" for i in range(1, n + 1)] + ["mu", "gini", "mobility"]
    rows = ([int(t)] + list(x) + [obs["mu"][j], obs["gini"][j], obs["mobility"][j]]
            for j, (t, x) in enumerate(zip(traj.times, traj.states)))
    if "csv" in cfg.output.formats:
        write_csv(out / "trajectory.csv", header, rows)
        for name in series:
            write_csv(out / f"series_{name}.csv", ["step", name],
                      zip((int(t) for t in traj.times), obs[name]))
    meta = {
        "seed": sde.seed,
        "rng": RNG_DESCRIPTION,
        "config": cfg.to_dict(),
        "start": start,
        "samples": len(traj),
        "rejected_steps": traj.rejected_steps,
        "fallback_steps": traj.fallback_steps,
        "plot_scales": plot_scales or {},
    }
    if "json" in cfg.output.formats:
        write_json(out / "trajectory.meta.json", meta)
    stdout.write(f"{len(traj)} samples, {traj.rejected_steps} noise redraws, "
                 f"{len(traj.fallback_steps)} drift-only fallbacks -> {out}\n")
    return EXIT_OK


def cmd_ensemble(cfg: RunConfig, workers: int = 1, stdout=None) -> int:
    stdout = stdout or sys.stdout
    sys_ = cfg.system()
    sde = cfg.sde_config()
    x0, start = _starting_state(cfg, sys_)
    trajs = run_ensemble(x0, sys_, sde, cfg.sde.realizations, workers=workers)
    summary = summarize_ensemble(trajs, sys_, cfg.histogram_classes(), cfg.output.bin_width)
    out = _out_dir(cfg)
    n = sys_.n
    if "csv" in cfg.output.formats:
        write_csv(out / "ensemble_summary.csv",
                  ["class", "mean", "std", "mean_percent", "std_percent"],
                  [(i + 1, summary.means[i], summary.stds[i],
                    100 * summary.means[i], 100 * summary.stds[i]) for i in range(n)])
        for c, h in summary.histograms.items():
            write_csv(out / f"histogram_x{c}.csv", ["bin_left", "bin_right", "count"],
                      zip(h.lefts, h.rights, (int(v) for v in h.counts)))
    table = percent_table(range(1, n + 1), {"mean (%)": summary.means, "std (%)": summary.stds})
    table += f"{summary.realizations} realizations, {summary.n_samples} pooled samples\n"
    if "txt" in cfg.output.formats:
        write_text(out / "ensemble_summary.txt", table)
    if "json" in cfg.output.formats:
        write_json(out / "ensemble_summary.json", {
            "means": summary.means,
            "stds": summary.stds,
            "n_samples": summary.n_samples,
            "realizations": summary.realizations,
            "correlations": summary.correlations,
            "histograms": {c: {"bin_width": h.bin_width, "bin_left": h.lefts, "count": h.counts}
                           for c, h in summary.histograms.items()},
            "rejected_steps": [t.rejected_steps for t in trajs],
            "fallback_steps": [t.fallback_steps for t in trajs],
            "seed": sde.seed,
            "rng": RNG_DESCRIPTION,
            "start": start,
            "config": cfg.to_dict(),
        })
    stdout.write(table)
    return EXIT_OK


def cmd_verify(sys_: ClassSystem | None = None, seed: int = 0, stdout=None) -> int:
    stdout = stdout or sys.stdout
    checks = run_checks(sys_, seed=seed)
    for c in checks:
        stdout.write(c.line() + "\n")
    failed = [c.name for c in checks if not c.passed]
    stdout.write(f"{len(checks) - len(failed)}/{len(checks)} checks passed\n")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (sectioned key = value)")
    common.add_argument("--seed", type=int, help="master seed (overrides sde.seed)")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kinex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("equilibrium", "deterministic equilibrium report"),
                        ("simulate", "one Langevin trajectory to CSV"),
                        ("ensemble", "ensemble statistics and histograms"),
                        ("verify", "randomized invariant audit")]:
        sub.add_parser(name, parents=[common], help=help_)
    p = sub.add_parser("preset", parents=[common], help="run a named experiment preset")
    p.add_argument("name", choices=sorted(PRESETS))
    return parser


def _resolve(args) -> tuple[str, RunConfig, dict]:
    base = RunConfig()
    command = args.command
    extras: dict = {}
    if command == "preset":
        preset = get_preset(args.name)
        base = preset.config(base)
        command = preset.command
        extras = {"plot_scales": dict(preset.plot_scales), "series": preset.series}
    cfg = load_config(args.config, base) if args.config else base
    if args.seed is not None:
        cfg = cfg.replace("sde", seed=args.seed)
    if args.out is not None:
        cfg = cfg.replace("output", directory=args.out)
    return command, cfg, extras


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        command, cfg, extras = _resolve(args)
        if command == "verify":
            return cmd_verify(cfg.system(), seed=cfg.sde.seed)
        if command == "equilibrium":
            return cmd_equilibrium(cfg)
        if command == "simulate":
            return cmd_simulate(cfg, **extras)
        return cmd_ensemble(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    rodlimit simulate|sweep-eps|converge-space|converge-time|energy \\
        --config run.cfg --out result.csv [--variant S] [--kind limit] [--lambda 1]

Every CSV starts with ``# schema=1``; summaries go into trailing ``#`` lines.
Exit status: 0 on success, 1 when a run did not converge, 2 for bad input.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import tempfile
from contextlib import contextmanager

from .config import ConfigError, RunConfig, load_config, with_overrides
from .engine import simulate
from .planar import PlanarModel
from .solver import NonConvergence, SingularMatrix, SolverConfig
from .studies import convergence_space, convergence_time, energy_history, eps_sweep, worker_count
from .types import PLANAR_COMPONENTS, SystemKind

SCHEMA = "# schema=1"
log = logging.getLogger("rodlimit")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@contextmanager
def _csv_out(path: str):
    """Write to a sibling temp file and move it into place only on success."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".rodlimit-", suffix=".csv", dir=folder)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(SCHEMA + "\n")
            yield fh, csv.writer(fh, lineterminator="\n")
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _footer(fh, **items) -> None:
    for key, val in items.items():
        fh.write(f"# {key}={val}\n")


def _solver(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(tol=cfg.tol, max_iter=cfg.max_iter)


def cmd_simulate(cfg: RunConfig, out: str) -> int:
    model = PlanarModel(cfg.params, cfg.variant, cfg.kind)
    with_corr = cfg.kind is SystemKind.CORRECTION
    header = ["t", "s", *PLANAR_COMPONENTS]
    if with_corr:
        header += [f"corr_{c}" for c in PLANAR_COMPONENTS]
    grid = cfg.grid
    nodes = grid.nodes

    with _csv_out(out) as (fh, writer):
        writer.writerow(header)

        def emit(j, t, state, stats, corr):
            for i, s in enumerate(nodes):
                row = [_fmt(t), _fmt(s), *map(_fmt, state.values[i])]
                if with_corr:
                    row += map(_fmt, corr.values[i])
                writer.writerow(row)

        traj = simulate(model, grid, cfg.t_end, callbacks=[emit], config=_solver(cfg), keep=False)
        _footer(fh, variant=cfg.variant.value, kind=cfg.kind.value,
                mean_newton_iterations=_fmt(traj.mean_newton_iterations()))
    return 0


def cmd_sweep_eps(cfg: RunConfig, out: str) -> int:
    result = eps_sweep(cfg.eps_list, cfg.variant, cfg.grid, cfg.study_t_end,
                       cfg.params.with_epsilon(0.0), _solver(cfg))
    with _csv_out(out) as (fh, writer):
        writer.writerow(["eps", "c1_star", "c1", "c2_star", "c2", "phi1_norm"])
        for r in result.reports:
            writer.writerow([_fmt(r.epsilon), _fmt(r.norm_c1_star), _fmt(r.norm_c1),
                             _fmt(r.norm_c2_star), _fmt(r.norm_c2), _fmt(r.norm_phi1)])
        for name, (lo, hi) in (("c1", cfg.c1_window), ("c2", cfg.c2_window)):
            slope = result.slope(name, lo, hi)
            if slope is not None:
                _footer(fh, **{f"slope_{name}_star[{lo:g},{hi:g}]": _fmt(slope)})
        if result.failed:
            _footer(fh, not_converged=",".join(_fmt(e) for e in result.failed))
    if result.failed:
        log.error("no convergence for eps in %s", list(result.failed))
        return 1
    return 0


def cmd_converge(cfg: RunConfig, out: str, axis: str) -> int:
    if cfg.kind is SystemKind.CORRECTION:
        raise ConfigError(None, "refinement studies run kind 'eps' or 'limit'")
    model = PlanarModel(cfg.params, cfg.variant, cfg.kind)
    if axis == "space":
        res = convergence_space(model, cfg.steps, cfg.ref_ds, cfg.dt, cfg.lam, cfg.study_t_end,
                                _solver(cfg))
        ref = cfg.ref_ds
    else:
        res = convergence_time(model, cfg.steps, cfg.ref_dt, cfg.time_ds, cfg.lam, cfg.study_t_end,
                               _solver(cfg))
        ref = cfg.ref_dt
    with _csv_out(out) as (fh, writer):
        writer.writerow(["step", "error"])
        for h, e in zip(res.steps, res.errors):
            writer.writerow([_fmt(h), _fmt(e)])
        _footer(fh, axis=axis, reference_step=_fmt(ref),
                order="nan" if res.order is None else _fmt(res.order))
    return 0


def cmd_energy(cfg: RunConfig, out: str) -> int:
    model = PlanarModel(cfg.params, cfg.variant, cfg.kind)
    hist = energy_history(model, cfg.grid, cfg.t_end, _solver(cfg))
    with _csv_out(out) as (fh, writer):
        writer.writerow(["t", "w0", "w1", "total"])
        for row in zip(hist.times, hist.w0, hist.w1, hist.total):
            writer.writerow([_fmt(x) for x in row])
        _footer(fh, drift=_fmt(hist.drift), initial=_fmt(hist.total[0]), final=_fmt(hist.total[-1]))
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-eps": cmd_sweep_eps,
    "converge-space": lambda cfg, out: cmd_converge(cfg, out, "space"),
    "converge-time": lambda cfg, out: cmd_converge(cfg, out, "time"),
    "energy": cmd_energy,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rodlimit", description="Slender-rod asymptotics solver")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="key = value configuration file")
    parser.add_argument("--out", required=True, help="CSV output path")
    parser.add_argument("--variant", choices=["M", "T", "S"])
    parser.add_argument("--kind", choices=["eps", "limit", "correction"])
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = with_overrides(load_config(args.config), args.variant, args.kind, args.lam)
        cfg.grid.n_steps(cfg.t_end)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"rodlimit: {args.config}: {exc}", file=sys.stderr)
        return 2
    try:
        worker_count(1)
    except ValueError as exc:
        print(f"rodlimit: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"rodlimit: {exc}", file=sys.stderr)
        return 2
    except (NonConvergence, SingularMatrix) as exc:
        print(f"rodlimit: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

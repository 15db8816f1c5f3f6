"""Command-line entry point.

Subcommands: solve-barrier, sample, verify-embedding, solve-pde, sweep-delta.
Every output file starts with a metadata header (version, seed, resolved
config); runs are byte-for-byte reproducible at a fixed seed.  CSV output is
plot-ready; no rendering happens here.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 runtime
invariant violation.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .barrier import BarrierTable, residuals, solve_barrier
from .embedding import RngStream, sample_increments
from .errors import ConfigError, InvariantViolation, NumericalError, RootBarrierError
from .measures import make_power_measure, measure_from_config
from .verification import ks_embedding_test
from .walk import domain_from_config, solve_pde, sweep_delta


def _meta(args, command):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {
        "version": __version__,
        "command": command,
        "seed": getattr(args, "seed", None),
        "config": config,
    }


def _meta_line(meta):
    return "#" + json.dumps(meta, sort_keys=True) + "\n"


def _load_table(path):
    try:
        return BarrierTable.load_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read barrier table {path}: {exc}") from exc


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path} is not valid JSON: {exc}") from exc


def _cmd_solve_barrier(args):
    if args.measure_json is not None:
        mu = measure_from_config(_load_json(args.measure_json, "measure config"))
    elif args.family == "power":
        mu = make_power_measure(args.k, args.alpha)
    elif args.family == "table":
        raise ConfigError("tabulated measures are specified via --measure-json")
    else:
        raise ConfigError(f"unknown measure family {args.family!r}")
    table = solve_barrier(mu, args.n, tol=args.tol)
    rep = residuals(table, mu)
    meta = _meta(args, "solve-barrier")
    meta["solver"] = table.solver_meta
    meta["max_abs_residual"] = rep.max_abs_residual
    out = BarrierTable(k=table.k, r_values=table.r_values, solver_meta=meta)
    out.save_csv(args.out)
    print(f"solve-barrier: n={args.n} r(0)={table.r_values[0]:.6f} "
          f"max|residual|={rep.max_abs_residual:.3g} -> {args.out}")
    return 0


def _cmd_sample(args):
    table = _load_table(args.barrier)
    stream = RngStream(args.seed, args.stream_id)
    dt, dx, u = sample_increments(table, args.eps, stream.generator(), args.n)
    with open(args.out, "w") as fh:
        fh.write(_meta_line(_meta(args, "sample")))
        for i in range(args.n):
            fh.write(f"{i},{dt[i]:.17g},{dx[i]:.17g},{u[i]:.17g}\n")
    print(f"sample: {args.n} increments at eps={args.eps} -> {args.out}")
    return 0


def _cmd_verify_embedding(args):
    table = _load_table(args.barrier)
    stream = RngStream(args.seed)
    report = ks_embedding_test(table, args.paths, args.dt, stream, workers=args.workers)
    payload = {"meta": _meta(args, "verify-embedding"), "report": report.as_dict()}
    with open(args.out, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    ok = report.ks_statistic <= report.ks_threshold
    print(f"verify-embedding: ks={report.ks_statistic:.5f} "
          f"threshold={report.ks_threshold:.5f} ({'pass' if ok else 'FAIL'}) -> {args.out}")
    return 0


def _domain_and_point(args):
    dom = domain_from_config(_load_json(args.config, "problem config"))
    try:
        inside = dom.lower(args.t0) < args.x0 < dom.upper(args.t0) and 0 <= args.t0 < dom.T
    except Exception as exc:
        raise ConfigError(f"cannot evaluate boundaries at t0={args.t0}: {exc}") from exc
    if not inside:
        raise ConfigError(f"start point (t0, x0) = ({args.t0}, {args.x0}) is not interior")
    return dom


def _cmd_solve_pde(args):
    dom = _domain_and_point(args)
    table = _load_table(args.barrier)
    stream = RngStream(args.seed)
    stats = solve_pde(dom, table, args.t0, args.x0, args.delta, args.samples,
                      stream, workers=args.workers)
    payload = {"meta": _meta(args, "solve-pde"), "stats": stats.as_dict()}
    with open(args.out, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"solve-pde: estimate={stats.estimate:.6f} +- {stats.std_error:.6f} "
          f"mean_steps={stats.mean_steps:.2f} -> {args.out}")
    return 0


def _parse_deltas(spec):
    try:
        start, stop, count = spec.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError as exc:
        raise ConfigError(f"--deltas expects start:stop:count, got {spec!r}") from exc
    if count < 1 or start <= 0 or stop < start:
        raise ConfigError(f"bad delta sweep {spec!r}")
    return np.linspace(start, stop, count)


def _cmd_sweep_delta(args):
    dom = _domain_and_point(args)
    table = _load_table(args.barrier)
    deltas = _parse_deltas(args.deltas)
    stream = RngStream(args.seed)
    stats = sweep_delta(dom, table, args.t0, args.x0, deltas, args.samples,
                        stream, workers=args.workers)
    with open(args.out, "w") as fh:
        fh.write(_meta_line(_meta(args, "sweep-delta")))
        for s in stats:
            fh.write(f"{s.delta:.17g},{s.estimate:.17g},{s.std_error:.17g},"
                     f"{s.mean_steps:.17g}\n")
    print(f"sweep-delta: {len(stats)} rows -> {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rootbarrier",
        description="Barrier solving, bounded Brownian increments, and "
                    "walk-over-barriers Monte Carlo for parabolic problems.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-barrier", help="solve the barrier integral equation")
    p.add_argument("--family", default="power", choices=["power", "table"])
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--measure-json", default=None,
                   help="measure config file (overrides --family/--k/--alpha)")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve_barrier)

    p = sub.add_parser("sample", help="draw bounded time-space increments")
    p.add_argument("--barrier", required=True)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream-id", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("verify-embedding", help="fine-grid statistical validation")
    p.add_argument("--barrier", required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_verify_embedding)

    p = sub.add_parser("solve-pde", help="walk-over-barriers Monte Carlo estimate")
    p.add_argument("--config", required=True, help="problem JSON")
    p.add_argument("--barrier", required=True)
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve_pde)

    p = sub.add_parser("sweep-delta", help="solve-pde across a delta sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--barrier", required=True)
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--deltas", required=True, help="start:stop:count")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep_delta)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    except RootBarrierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

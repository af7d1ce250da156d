"""Command-line front end emitting plot-ready CSV.

Usage::

    python -m relaytree evolve --alpha0 0.1 --beta0 0.2 --schedule quadratic:p0=0.1 --height 20
    python -m relaytree scaling --prior0 0.4 --p0 0.1 -o fig5.csv

Exit codes: 0 ok, 2 configuration error, 3 domain error, 4 internal failure.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .bounds import (bounds_report, check_step_ratios, classify_decay, estimate_c,
                     required_sensors, sensor_height)
from .core import DomainError, FailureSchedule, evolve, log2_inv, weighted_error
from .geometry import boundary_grid, classify
from .sim import ORACLE_MAX_HEIGHT, exact_pair_distribution, monte_carlo

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4
OUTPUT_DIR_ENV = "RELAYTREE_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def fmt(v) -> str:
    """17 significant digits for numbers so values round-trip."""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, mpmath.mpf):
        if v == 0 or 1e-300 < abs(v) < 1e300:
            return format(float(v), ".17g")
        return mpmath.nstr(v, 17, strip_zeros=True)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(out, header, rows) -> None:
    out.write(f"# relaytree {__version__}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(row[h]) for h in header) + "\n")


@dataclass
class ExperimentConfig:
    alpha0: float
    beta0: float
    schedule: FailureSchedule
    height: int
    prior0: float = 0.5
    trials: int = 100_000
    seed: int = 0
    output: str | None = None

    @classmethod
    def from_args(cls, args) -> "ExperimentConfig":
        height = getattr(args, "height", None)
        sensors = getattr(args, "sensors", None)
        if (height is None) == (sensors is None):
            raise ConfigError("give exactly one of --height or --sensors")
        if sensors is not None:
            try:
                height = sensor_height(sensors)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if height < 0:
            raise ConfigError("height must be non-negative")
        try:
            schedule = FailureSchedule.parse(args.schedule)
        except DomainError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not (0 <= args.alpha0 and 0 <= args.beta0 and args.alpha0 + args.beta0 < 1):
            raise ConfigError("need alpha0, beta0 >= 0 and alpha0 + beta0 < 1")
        if not 0 < args.prior0 < 1:
            raise ConfigError("--prior0 must lie in (0, 1)")
        if schedule.horizon < height:
            raise ConfigError(f"schedule covers levels 0..{schedule.horizon}, need {height}")
        return cls(args.alpha0, args.beta0, schedule, height, args.prior0,
                   getattr(args, "trials", 100_000), getattr(args, "seed", 0), args.output)


# --------------------------------------------------------------------------
# subcommands; each returns (header, rows) or a preformatted text body


def cmd_evolve(args):
    cfg = ExperimentConfig.from_args(args)
    traj = evolve((cfg.alpha0, cfg.beta0), cfg.schedule, cfg.height, wide=True)
    header = ["k", "alpha", "beta", "q", "L", "halfL", "starvation", "region"]
    return header, traj.to_rows()


def cmd_bounds(args):
    cfg = ExperimentConfig.from_args(args)
    if cfg.height < 1:
        raise ConfigError("bounds need at least two sensors")
    traj = evolve((cfg.alpha0, cfg.beta0), cfg.schedule, cfg.height, wide=True)
    c = args.c if args.c is not None else estimate_c(traj, cfg.height - 1)
    L0 = cfg.alpha0 + cfg.beta0
    rep = bounds_report(L0, c, 2 ** cfg.height, cfg.prior0)
    flat = rep.as_flat()
    root = traj.root
    err = root.alpha + root.beta if cfg.prior0 == 0.5 else weighted_error(root, cfg.prior0)
    flat["measured_bits"] = log2_inv(err)
    flat["in_R_at_start"] = classify(traj.triplets[0]).in_R
    if args.format == "record":
        return "".join(f"{k}={fmt(v)}\n" for k, v in flat.items())
    return list(flat), [flat]


def cmd_simulate(args):
    cfg = ExperimentConfig.from_args(args)
    if cfg.height < 1:
        raise ConfigError("simulation needs height >= 1")
    if args.trials < 1:
        raise ConfigError("--trials must be positive")
    est = monte_carlo((cfg.alpha0, cfg.beta0), cfg.schedule, cfg.height, args.trials, args.seed,
                      prior0=cfg.prior0, workers=args.workers)
    traj = evolve((cfg.alpha0, cfg.beta0), cfg.schedule, cfg.height)
    row = est.as_flat()
    row.update(rec_typeI=traj.root.alpha, rec_typeII=traj.root.beta,
               rec_starvation=traj[cfg.height].starvation)
    for name, rec, se in (("typeI", traj.root.alpha, est.se_typeI),
                          ("typeII", traj.root.beta, est.se_typeII),
                          ("starvation", traj[cfg.height].starvation, est.se_starvation)):
        row[f"z_{name}"] = (row[f"est_{name}"] - rec) / se
    if args.format == "record":
        return "".join(f"{k}={fmt(v)}\n" for k, v in row.items())
    return list(row), [row]


def cmd_oracle(args):
    cfg = ExperimentConfig.from_args(args)
    if cfg.height > ORACLE_MAX_HEIGHT:
        raise ConfigError(f"oracle height capped at {ORACLE_MAX_HEIGHT}")
    rows = []
    for h in range(1, cfg.height + 1):
        dist = exact_pair_distribution((cfg.alpha0, cfg.beta0), cfg.schedule, h)
        traj = evolve((cfg.alpha0, cfg.beta0), cfg.schedule, h)
        ma, mb = dist.mean
        sil = max(abs(a - b) for a, b in zip(dist.silence, traj.q))
        rows.append(dict(height=h, atoms=len(dist), oracle_typeI=ma, rec_typeI=traj.root.alpha,
                         resid_typeI=ma - traj.root.alpha, oracle_typeII=mb,
                         rec_typeII=traj.root.beta, resid_typeII=mb - traj.root.beta,
                         oracle_starvation=dist.starvation, rec_starvation=traj[h].starvation,
                         max_silence_resid=sil))
    return list(rows[0]) if rows else ["height"], rows


def cmd_regions(args):
    qs = _floats(args.q)
    if any(not 0 <= q < 1 for q in qs):
        raise ConfigError("--q values must lie in [0, 1)")
    rows = [dict(q=q, alpha=a, b_upper=b, ru_upper=r)
            for q, a, b, r in boundary_grid(qs, args.alpha_step)]
    return ["q", "alpha", "b_upper", "ru_upper"], rows


def cmd_ratios(args):
    if args.grid_alphas:
        return _ratio_grid(args)
    cfg = ExperimentConfig.from_args(args)
    traj = evolve((cfg.alpha0, cfg.beta0), cfg.schedule, cfg.height, wide=True)
    c = args.c if args.c is not None else estimate_c(traj)
    rep = check_step_ratios(traj, c)
    rows = []
    for k, ratio in enumerate(rep.two_step_ratio):
        rows.append(dict(k=k, L=traj.L[k], ratio=ratio, c=c, lower=0.5, upper=6 * c + 2,
                         region=traj[k].region, applicable=rep.two_step_applicable[k],
                         ok=rep.two_step_ok[k]))
    return ["k", "L", "ratio", "c", "lower", "upper", "region", "applicable", "ok"], rows


def _ratio_grid(args):
    """Two-step ratio versus beta for fixed alpha with ``q = C * L`` (p = 0 after)."""
    from .core import ErrorTriplet, fuse_step
    from .geometry import b_upper_boundary, ru_upper_boundary

    c = 1.0 if args.c is None else args.c
    rows = []
    for a in _floats(args.grid_alphas):
        for b in np.linspace(a, 1 - a, args.grid_points, endpoint=False):
            q = c * (a + b)
            if q >= 1:
                continue
            t = ErrorTriplet(a, float(b), q)
            lab = classify(t)
            if not lab.in_R:
                continue
            t2 = fuse_step(fuse_step(t, 0.0), 0.0)
            rows.append(dict(alpha=a, beta=float(b), q=q, region=lab,
                             ratio=(t2.alpha + t2.beta) / (a + b) ** 2, upper=6 * c + 2,
                             b_upper=b_upper_boundary(a, q), ru_upper=ru_upper_boundary(a, q)))
    return ["alpha", "beta", "q", "region", "ratio", "upper", "b_upper", "ru_upper"], rows


PROFILES = ("none", "quadratic", "constant")


def scaling_rows(alpha0, beta0, p0, prior0, heights, window):
    """``(log2 N, log2 log2 1/P_N)`` per failure profile with an OLS slope
    fitted over ``window``."""
    schedules = {"none": FailureSchedule.none(), "quadratic": FailureSchedule.quadratic(p0),
                 "constant": FailureSchedule.constant(p0)}
    rows = []
    for name in PROFILES:
        traj = evolve((alpha0, beta0), schedules[name], max(heights), wide=True)
        pts = []
        for h in heights:
            t = traj[h].triplet
            P = weighted_error(t, prior0)
            pts.append((h, P, math.log2(log2_inv(P))))
        xs = np.array([h for h, _, _ in pts if window[0] <= h <= window[1]], float)
        ys = np.array([y for h, _, y in pts if window[0] <= h <= window[1]], float)
        slope = float(np.polyfit(xs, ys, 1)[0]) if len(xs) >= 2 else math.nan
        for h, P, y in pts:
            rows.append(dict(profile=name, log2_N=h, P_N=P, log2_log2_inv_P_N=y, fitted_slope=slope))
    return rows


def cmd_scaling(args):
    heights = list(range(args.min_height, args.max_height + 1))
    lo, hi = _floats(args.window)
    if not heights or heights[0] < 0 or lo > hi:
        raise ConfigError("invalid height range or window")
    rows = scaling_rows(args.alpha0, args.beta0, args.p0, args.prior0, heights, (lo, hi))
    return ["profile", "log2_N", "P_N", "log2_log2_inv_P_N", "fitted_slope"], rows


def cmd_size(args):
    n = required_sensors(args.epsilon, args.L0, args.c)
    row = dict(epsilon=args.epsilon, L0=args.L0, c=args.c, n_sensors=n, height=sensor_height(n))
    return list(row), [row]


def cmd_decay(args):
    sched = FailureSchedule.parse(args.schedule)
    return "".join([f"schedule={sched}\n", f"horizon={args.horizon}\n",
                    f"verdict={classify_decay(sched, args.horizon, args.delta)}\n",
                    "note=finite-horizon surrogate\n"])


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


# --------------------------------------------------------------------------


def _add_model(p, height=True):
    p.add_argument("--alpha0", type=float, default=0.1)
    p.add_argument("--beta0", type=float, default=0.2)
    p.add_argument("--schedule", default="none", help="e.g. quadratic:p0=0.1")
    p.add_argument("--prior0", type=float, default=0.5)
    if height:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--height", type=int)
        g.add_argument("--sensors", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaytree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"relaytree {__version__}")
    parser.add_argument("--config", help="key=value file supplying option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("-o", "--output")
        return p

    _add_model(add("evolve", cmd_evolve, "trajectory of the triplet recursion"))

    p = add("bounds", cmd_bounds, "error bounds for N sensors")
    _add_model(p)
    p.add_argument("--c", type=float, help="override the estimated C")
    p.add_argument("--format", choices=("record", "csv"), default="record")

    p = add("simulate", cmd_simulate, "Monte Carlo on randomly pruned trees")
    _add_model(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("record", "csv"), default="csv")

    _add_model(add("oracle", cmd_oracle, "exact oracle versus recursion per height"))

    p = add("regions", cmd_regions, "boundary curves of B and R_U")
    p.add_argument("--q", default="0.1,0.01")
    p.add_argument("--alpha-step", type=float, default=1e-3)

    p = add("ratios", cmd_ratios, "two-step ratio diagnostics")
    _add_model(p)
    p.add_argument("--c", type=float)
    p.add_argument("--grid-alphas", help="sweep beta for these alphas instead of a trajectory")
    p.add_argument("--grid-points", type=int, default=200)

    p = add("scaling", cmd_scaling, "log log error versus log N for three failure profiles")
    p.add_argument("--alpha0", type=float, default=0.1)
    p.add_argument("--beta0", type=float, default=0.2)
    p.add_argument("--p0", type=float, default=0.1)
    p.add_argument("--prior0", type=float, default=0.4)
    p.add_argument("--min-height", type=int, default=1)
    p.add_argument("--max-height", type=int, default=20)
    p.add_argument("--window", default="10,20")

    p = add("size", cmd_size, "sensors needed for a target error")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--L0", type=float, required=True)
    p.add_argument("--c", type=float, default=0.0)

    p = add("decay", cmd_decay, "classify the decay of a failure schedule")
    p.add_argument("--schedule", required=True)
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--delta", type=float, default=0.05)
    return parser


def _read_config(path: str) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ConfigError(f"bad config line {line!r}")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = _read_config(known.config)
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            defaults = {}
            for a in sp._actions:
                if a.dest in values:
                    conv = a.type or str
                    defaults[a.dest] = conv(values[a.dest])
            sp.set_defaults(**defaults)


def _destination(args):
    if args.output:
        return Path(args.output)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / f"{args.command}.csv"
    return None


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    except (ConfigError, OSError, ValueError) as exc:
        print(f"relaytree: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = args.func(args)
    except ConfigError as exc:
        print(f"relaytree: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"relaytree: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"relaytree: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"relaytree: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL

    buf = io.StringIO()
    if isinstance(result, str):
        buf.write(f"# relaytree {__version__}\n{result}")
    else:
        write_csv(buf, *result)
    dest = _destination(args)
    if dest is None:
        sys.stdout.write(buf.getvalue())
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(buf.getvalue())
    return EXIT_OK

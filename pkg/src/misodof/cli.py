"""Command-line front end.

Exit codes: 0 success, 1 domain/input error, 2 usage error, 3 failed
verification.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import bounds, numerics, region, scheduler
from .model import (
    DoFPoint,
    DomainError,
    MisoError,
    SystemConfig,
    format_rational,
    parse_rational,
    parse_rational_vector,
)

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3


@dataclass(frozen=True)
class CurveRow:
    delta: Fraction
    outer: Fraction
    inner: Fraction
    optimal: Fraction | None
    cost: Fraction

    def csv(self) -> str:
        opt = "" if self.optimal is None else format_rational(self.optimal)
        return ",".join([format_rational(self.delta), format_rational(self.cost), format_rational(self.outer),
                         format_rational(self.inner), opt])


CURVE_HEADER = "delta,cost,outer,inner,optimal"


def uniform_grid(points: int, top: Fraction = Fraction(1)) -> list[Fraction]:
    if points < 2:
        raise DomainError("a curve needs at least 2 grid points")
    return [top * i / (points - 1) for i in range(points)]


def alternating_curve(cfg: SystemConfig, deltas: Sequence[Fraction]) -> list[CurveRow]:
    rows = []
    for d in deltas:
        outer = bounds.sum_dof_outer_alternating(cfg, d)
        inner = bounds.inner_sum_dof(cfg, d)
        rows.append(CurveRow(d, outer, inner, outer if inner == outer else None, cfg.k * d))
    return rows


def delayed_curve(k: int, deltas: Sequence[Fraction]) -> list[CurveRow]:
    """Delayed-only feedback, M=2: the outer bound is the delayed-CSIT value Lambda."""
    outer = bounds.mat_dof(SystemConfig(2, k))
    rows = []
    for d in deltas:
        inner = bounds.inner_sum_dof_delayed(k, d)
        rows.append(CurveRow(d, outer, inner, outer if inner == outer else None, k * d))
    return rows


# ---------------------------------------------------------------------------


def _cfg(args) -> SystemConfig:
    return SystemConfig(args.m, args.k)


def _vector(text: str, cfg: SystemConfig, what: str) -> list[Fraction]:
    values = parse_rational_vector(text, unit_interval=True)
    if len(values) == 1 and cfg.k > 1:
        values = values * cfg.k
    if len(values) != cfg.k:
        raise DomainError(f"--{what} needs {cfg.k} entries (or one to broadcast), got {len(values)}")
    return values


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_bounds(args) -> int:
    cfg = _cfg(args)
    rep = bounds.bound_report(cfg, _vector(args.alpha, cfg, "alpha"))
    _emit({"m": cfg.m, "k": cfg.k, **rep.to_json()})
    return EXIT_OK


def cmd_curve(args) -> int:
    cfg = _cfg(args)
    top = parse_rational(args.max_delta)
    grid = uniform_grid(args.grid, top)
    if args.mode == "alternating":
        rows = alternating_curve(cfg, grid)
    else:
        if cfg.m != 2:
            raise DomainError("the delayed-feedback curve is defined for M = 2")
        rows = delayed_curve(cfg.k, grid)
    lines = [CURVE_HEADER] + [r.csv() for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check_point(args) -> int:
    cfg = _cfg(args)
    alpha = _vector(args.alpha, cfg, "alpha")
    dof = parse_rational_vector(args.dof)
    if len(dof) != cfg.k:
        raise DomainError(f"--dof needs {cfg.k} entries")
    verdict = region.tightest_permutation(cfg, alpha, DoFPoint(tuple(dof)))
    _emit(verdict.to_json())
    return EXIT_OK


def cmd_schedule(args) -> int:
    cfg = _cfg(args)
    if args.scheme in ("delayed-4/3", "delayed-3/2"):
        if cfg.m != 2:
            raise DomainError("delayed block schedules assume M = 2")
        sched = scheduler.delayed_block_schedule(cfg.k, parse_rational(args.scheme.split("-")[1]))
    else:
        if args.delta is None:
            raise DomainError(f"--delta is required for the {args.scheme} scheme")
        deltas = _vector(args.delta, cfg, "delta")
        if args.scheme == "greedy":
            sched = scheduler.greedy_schedule(cfg, deltas)
        else:
            if (cfg.m, cfg.k) != (2, 3):
                raise DomainError("the two-block scheme is defined for M = 2, K = 3")
            sched = scheduler.two_block_schedule(deltas)
    print(sched.dumps())
    return EXIT_OK


def cmd_min_cost(args) -> int:
    cfg = _cfg(args)
    if args.target is not None:
        if (cfg.m, cfg.k) != (2, 3):
            raise DomainError("a target-specific minimum cost is characterized only for M = 2, K = 3")
        _emit({"cost": format_rational(bounds.min_cost_m2k3(parse_rational(args.target)))})
        return EXIT_OK
    res = bounds.min_cost_max_dof(cfg)
    out = {
        "target": format_rational(cfg.rank),
        "cost": format_rational(res.cost),
        "lower_bound": format_rational(res.lower_bound),
        "min_perfect_users": bounds.min_active_users_for_max_dof(cfg),
    }
    if res.tdma:
        out["note"] = "min{M,K} = 1: TDMA is DoF-optimal without current CSIT"
    _emit(out)
    return EXIT_OK


def _float_vector(text: str, k: int) -> list[float]:
    values = [float(v) for v in parse_rational_vector(text, unit_interval=True)]
    if len(values) == 1:
        values = values * k
    if len(values) != k:
        raise DomainError(f"--alpha needs {k} entries (or one to broadcast)")
    return values


def cmd_simulate(args) -> int:
    cfg = _cfg(args)
    grid = numerics.parse_grid(args.snr)
    res = numerics.zf_slope(cfg, _float_vector(args.alpha, cfg.k), grid, args.trials, args.seed)
    csv = "\n".join(res.csv_lines()) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    _emit({
        "slope": res.fit.slope,
        "stderr": res.fit.stderr,
        "per_user_slopes": res.extra["per_user_slopes"],
        "active_users": [u + 1 for u in res.extra["active"]],
        "resampled_trials": res.extra["resampled"],
    })
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.check == "lemma1":
        grid = numerics.parse_grid(args.snr or "40:70:10")
        out = numerics.verify_lemma1(args.trials or 10000, args.seed, grid)
    elif args.check == "lemma2":
        out = numerics.verify_lemma2(args.trials or 1000, args.seed)
    elif args.check == "lemma3":
        out = numerics.verify_lemma3(args.trials or 200, args.seed)
    else:
        grid = numerics.parse_grid(args.snr or "30:70:10")
        out = numerics.verify_prop4(args.trials or 2000, args.seed, grid)
    _emit(out)
    return EXIT_OK if out["pass"] else EXIT_VERIFY


# ---------------------------------------------------------------------------


REQUIRED = {
    "bounds": ("m", "k", "alpha"),
    "curve": ("m", "k"),
    "check-point": ("m", "k", "alpha", "dof"),
    "schedule": ("m", "k"),
    "min-cost": ("m", "k"),
    "simulate": ("m", "k", "alpha", "seed"),
    "verify": ("seed",),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the long flags")

    mk = argparse.ArgumentParser(add_help=False)
    mk.add_argument("--m", type=int, help="transmit antennas M")
    mk.add_argument("--k", type=int, help="users K")

    p = argparse.ArgumentParser(prog="misodof", description="DoF vs CSIT-feedback bounds for the MISO BC")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bounds", parents=[common, mk], help="closed-form sum-DoF bounds")
    s.add_argument("--alpha", help="per-user average CSIT exponents, e.g. 1/3,1/3,1/3")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("curve", parents=[common, mk], help="sum-DoF vs feedback curve as CSV")
    s.add_argument("--mode", choices=["alternating", "delayed"], default="alternating")
    s.add_argument("--grid", type=int, default=96, help="number of grid points")
    s.add_argument("--max-delta", default="1", help="upper end of the feedback-fraction grid")
    s.add_argument("--out", help="write CSV here instead of stdout")
    s.set_defaults(func=cmd_curve)

    s = sub.add_parser("check-point", parents=[common, mk], help="membership of a DoF point in the outer region")
    s.add_argument("--alpha")
    s.add_argument("--dof", help="DoF tuple, e.g. 1/2,1/2,1/2")
    s.set_defaults(func=cmd_check_point)

    s = sub.add_parser("schedule", parents=[common, mk], help="synthesize an achievability schedule")
    s.add_argument("--delta", help="per-user perfect-CSIT fractions")
    s.add_argument("--scheme", choices=["greedy", "two-block", "delayed-4/3", "delayed-3/2"], default="greedy")
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("min-cost", parents=[common, mk], help="minimum total perfect-CSIT cost")
    s.add_argument("--target", help="target sum DoF (M=2, K=3 only)")
    s.set_defaults(func=cmd_min_cost)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo link-level DoF slopes")
    s.add_argument("scheme", choices=["zf"])
    s.add_argument("--m", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--alpha", help="CSIT exponent(s); one value is broadcast to all users")
    s.add_argument("--snr", default="30:70:10", help="SNR grid in dB, start:stop:step")
    s.add_argument("--trials", type=int, default=10000)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="write the CSV here instead of stdout")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", parents=[common], help="randomized checks of the matrix lemmas")
    s.add_argument("check", choices=["lemma1", "lemma2", "lemma3", "prop4"])
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--snr", help="SNR grid in dB for the slope checks")
    s.set_defaults(func=cmd_verify)
    return p


def _load_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            conf = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if not isinstance(conf, dict):
        parser.error("config file must hold a JSON object")
    # explicit flags win over the file
    given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    known = vars(args)
    for key, value in conf.items():
        name = key.replace("-", "_")
        if name not in known or name in ("command", "func", "config"):
            parser.error(f"unknown config key {key!r}")
        if name in given:
            continue
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        setattr(args, name, value)
    return args


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _load_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    missing = [f"--{name}" for name in REQUIRED[args.command] if getattr(args, name, None) is None]
    if missing:
        parser.print_usage(sys.stderr)
        print(f"misodof {args.command}: error: missing {', '.join(missing)}", file=sys.stderr)
        return EXIT_USAGE
    for name in ("m", "k", "trials", "seed", "grid"):
        val = getattr(args, name, None)
        if isinstance(val, str):
            try:
                setattr(args, name, int(val))
            except ValueError:
                print(f"misodof: error: --{name} must be an integer", file=sys.stderr)
                return EXIT_USAGE
    for name in ("alpha", "dof", "delta", "target", "max_delta"):
        val = getattr(args, name, None)
        if val is not None and not isinstance(val, str):
            setattr(args, name, str(val))
    try:
        return args.func(args)
    except MisoError as exc:
        print(f"misodof {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

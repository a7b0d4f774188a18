"""Command line entry point: ``qswitch capacity | yield | simulate | verify``.

Exit codes: 0 success, 1 invalid input or configuration, 2 a failed check.
Files are written to a temporary name and renamed, so a failed run leaves
no partial output.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from qswitch import checks
from qswitch.capacity import (
    CapacityError,
    ColumnSet,
    ZeroCapacityError,
    boundary_sweep,
    capacity_boundary,
)
from qswitch.config import ConfigError, build_switch, parse_config, protocol_id
from qswitch.sim import estimate_stability

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 1, 2


def fmt(x: float) -> str:
    return format(float(x), ".12g")


def num(x: float) -> float:
    """Float rounded to 12 significant digits; its repr is the short form."""
    return float(fmt(x))


@contextlib.contextmanager
def atomic_write(path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    buf = io.StringIO()
    yield buf
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def _config(args):
    cfg = parse_config(args.config, args.preset, args.set or [])
    if getattr(args, "arch", None):
        cfg = cfg.with_overrides(arch=args.arch)
    return cfg


def _pair_label(pair) -> str:
    return f"{pair[0] + 1}{pair[1] + 1}"


def cmd_capacity(args) -> int:
    cfg = _config(args)
    model = build_switch(cfg)
    cols = ColumnSet(model, p_cut=cfg.p_cut, cap=cfg.column_cap)
    points = boundary_sweep(model, args.angles, columns=cols)
    idx = {pr: n for n, pr in enumerate(model.pairs)}
    i12, i13 = idx[(0, 1)], idx[(0, 2)]
    out = Path(args.out)
    with atomic_write(out) as fh:
        fh.write("architecture,protocol,w12,w13,lambda_star,lam12,lam13\n")
        for pt in points:
            lam = pt.rates
            fh.write(
                ",".join(
                    [
                        model.arch.value,
                        cfg.protocol,
                        fmt(pt.weights[i12]),
                        fmt(pt.weights[i13]),
                        fmt(pt.lambda_star),
                        fmt(lam[i12]),
                        fmt(lam[i13]),
                    ]
                )
                + "\n"
            )
    if args.json:
        records = []
        for pt in points:
            res = capacity_boundary(model, pt.weights, columns=cols)
            records.append(
                {
                    "angle": num(pt.angle),
                    "weights": {_pair_label(pr): num(w) for pr, w in zip(model.pairs, pt.weights)},
                    "lambda_star": num(res.lambda_star),
                    "status": res.status,
                    "gap": num(res.gap),
                    "truncated_mass": num(res.truncated_mass),
                    "certificate": [
                        {"state": [int(v) for v in c.state], "schedule": [int(v) for v in c.schedule], "b": num(c.fraction)}
                        for c in res.columns
                    ],
                }
            )
        doc = {
            "architecture": model.arch.value,
            "protocol": cfg.protocol,
            "noise": cfg.noise,
            "rounds": model.spec.rounds,
            "points": records,
        }
        with atomic_write(out.with_suffix(".json")) as fh:
            fh.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(points)} boundary points to {out}")
    return EXIT_OK


def cmd_yield(args) -> int:
    cfg = _config(args)
    model = build_switch(cfg)
    ym = model.yields
    x_max = min(args.x_max, ym.x_max)
    out = Path(args.out_dir)
    with atomic_write(out / "yield_pmf.csv") as fh:
        fh.write("x,y,p\n")
        for x in range(x_max + 1):
            for y in range(x + 1):
                fh.write(f"{x},{y},{fmt(ym.pmf[x, y])}\n")
    with atomic_write(out / "yield_mean.csv") as fh:
        fh.write("x,mean\n")
        for x in range(x_max + 1):
            fh.write(f"{x},{fmt(ym.mean[x])}\n")
    spec = model.spec
    print(f"{protocol_id(cfg).value}: L={spec.rounds}, output fidelity {spec.output_fidelity:.6f}")
    return EXIT_OK


def _parse_vector(text: str, n: int) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    vals += [0.0] * (n - len(vals))
    if len(vals) != n:
        raise ConfigError(f"expected at most {n} comma-separated values, got {text!r}")
    return np.array(vals)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    model = build_switch(cfg)
    n_pairs = len(model.pairs)
    if args.along:
        w = _parse_vector(args.along, n_pairs)
        res = capacity_boundary(model, w, columns=ColumnSet(model, p_cut=cfg.p_cut, cap=cfg.column_cap))
        rates = args.scale * res.rates
    elif cfg.rates:
        rates = args.scale * np.array(cfg.rates)
    else:
        raise ConfigError("give --along or traffic.rates")
    horizon = args.horizon or cfg.horizon
    replicas = args.replicas or cfg.replicas
    seed = cfg.seed if args.seed is None else args.seed
    traces: list[str] = []
    on_trace = (lambda tr: traces.append(tr.to_json())) if args.trace else None
    report = estimate_stability(model, rates, horizon, replicas, seed, cfg.arrivals, on_trace)
    with atomic_write(Path(args.out)) as fh:
        fh.write(report.to_json() + "\n")
    if args.trace:
        with atomic_write(Path(args.trace)) as fh:
            fh.write("\n".join(traces) + ("\n" if traces else ""))
    print(f"verdict: {report.verdict} (median slope {report.slope:.3g}/slot)")
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(checks.SUITES) if args.suite == "all" else [args.suite]
    results = []
    for name in names:
        fn = checks.SUITES[name]
        if name == "yield":
            results += fn(seed=args.seed, samples=args.samples)
        elif name == "mw":
            results += fn(seed=args.seed)
        else:
            results += fn()
    for c in results:
        print(c.line())
    failed = sum(not c.passed for c in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qswitch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def config_args(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--preset", default="table4", help="starting preset (default table4)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--arch", choices=["PS", "SP", "NoiseLess"])

    p = sub.add_parser("capacity", help="capacity region boundary sweep")
    config_args(p)
    p.add_argument("--angles", type=int, default=17)
    p.add_argument("--out", default="boundary.csv")
    p.add_argument("--json", action="store_true", help="also write certificates as JSON")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("yield", help="conditional yield tables")
    config_args(p)
    p.add_argument("--x-max", type=int, default=64)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_yield)

    p = sub.add_parser("simulate", help="max-weight stability simulation")
    config_args(p)
    p.add_argument("--along", help="weights w12,w13[,w23] of the boundary point to scale")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--horizon", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="stability.json")
    p.add_argument("--trace", help="write per-slot NDJSON records of the first replica")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run oracle cross-checks")
    p.add_argument("--suite", choices=["yield", "mw", "lp", "all"], default="all")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--samples", type=int, default=10**6)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ZeroCapacityError, CapacityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

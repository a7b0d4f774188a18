#!/usr/bin/env python3
"""Max-weight simulations below and above the capacity boundary.

For PS and SP, scales the symmetric boundary point by each --scale and
records the stability verdict, the median tail slope and the per-pair
departure rates in results/stability.csv.

Usage: python scripts/stability_runs.py [--horizon 100000] [--scale 0.9 --scale 1.2]
"""

import argparse
import time
from pathlib import Path

import numpy as np

from qswitch.capacity import Architecture, capacity_boundary
from qswitch.cli import atomic_write, fmt
from qswitch.config import build_switch, preset
from qswitch.sim import estimate_stability


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=100_000)
    ap.add_argument("--replicas", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scale", type=float, action="append")
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    scales = args.scale or [0.5, 0.9, 0.95, 1.05, 1.2]

    cfg = preset("table4")
    with atomic_write(args.out / "stability.csv") as fh:
        fh.write("architecture,scale,lambda12,lambda13,verdict,slope,tail_mean,dep12,dep13\n")
        for arch in (Architecture.PS, Architecture.SP):
            model = build_switch(cfg, arch)
            point = capacity_boundary(model, (1, 1, 0)).rates
            for s in scales:
                t0 = time.perf_counter()
                rep = estimate_stability(model, s * point, args.horizon, args.replicas, args.seed)
                dep = np.median(np.array(rep.departure_rates), axis=0)
                row = [arch.value, fmt(s), fmt(s * point[0]), fmt(s * point[1]), rep.verdict]
                row += [fmt(rep.slope), fmt(rep.mean_queue), fmt(dep[0]), fmt(dep[1])]
                fh.write(",".join(row) + "\n")
                print(f"{arch.value} {s:.2f}x: {rep.verdict:12s} slope {rep.slope:.4g}  ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Capacity boundary sweeps for the six comparison panels.

Writes one CSV per panel to --out (default results/), with a ``label``
column naming the curve, then the usual boundary columns. Each panel
varies one thing around the default three-user setup:

  arch      NoiseLess vs PS vs SP
  protocol  DEJMPS vs BBPSSW vs pumping at F_th = 0.9
  noise     white vs bit-flip noise at F_th = 0.85 and 0.9
  alpha     alpha_max in {2, 4, 6}
  flink     F_link in {0.86, 0.88, 0.90, 0.92}
  fth       F_th in {0.8, 0.85, 0.9}

Usage: python scripts/boundary_panels.py [--panel arch ...] [--angles 17]
"""

import argparse
import sys
import time
from pathlib import Path

from qswitch.capacity import ZeroCapacityError, boundary_sweep
from qswitch.cli import atomic_write, fmt
from qswitch.config import build_switch, preset

BASE = preset("table4")

PANELS = {
    "arch": [(a, BASE.with_overrides(arch=a)) for a in ("NoiseLess", "PS", "SP")],
    "protocol": [(p, preset("strict").with_overrides(protocol=p)) for p in ("dejmps", "bbpssw", "pumping")],
    "noise": [
        (f"{n} F_th={t}", BASE.with_overrides(noise=n, f_th=t))
        for t in (0.85, 0.9)
        for n in ("werner", "binary")
    ],
    "alpha": [(f"alpha_max={a}", BASE.with_overrides(alpha_max=a)) for a in (2, 4, 6)],
    "flink": [(f"F_link={f}", BASE.with_overrides(f_link=f)) for f in (0.86, 0.88, 0.90, 0.92)],
    "fth": [(f"F_th={t}", BASE.with_overrides(f_th=t)) for t in (0.8, 0.85, 0.9)],
}


def run_panel(name: str, angles: int, out: Path) -> None:
    t0 = time.perf_counter()
    with atomic_write(out / f"panel_{name}.csv") as fh:
        fh.write("label,architecture,protocol,rounds,w12,w13,lambda_star,lam12,lam13\n")
        for label, cfg in PANELS[name]:
            try:
                model = build_switch(cfg)
            except ZeroCapacityError as exc:
                print(f"  {label}: zero capacity ({exc})", file=sys.stderr)
                continue
            for pt in boundary_sweep(model, angles):
                w, lam = pt.weights, pt.rates
                row = [label, model.arch.value, cfg.protocol, str(model.spec.rounds)]
                row += [fmt(w[0]), fmt(w[1]), fmt(pt.lambda_star), fmt(lam[0]), fmt(lam[1])]
                fh.write(",".join(row) + "\n")
            mid = boundary_sweep(model, 3)[1].lambda_star
            print(f"  {label:24s} L={model.spec.rounds}  lambda*(symmetric)={mid:.6f}")
    print(f"{name}: {time.perf_counter() - t0:.1f}s")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--panel", action="append", choices=sorted(PANELS))
    ap.add_argument("--angles", type=int, default=17)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    for name in args.panel or list(PANELS):
        run_panel(name, args.angles, args.out)


if __name__ == "__main__":
    main()

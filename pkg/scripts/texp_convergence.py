"""Convergence of the midpoint ordered exponential against a fine variational reference.

Prints one row per factor count with the error at each sample time and the
observed order between successive rows (midpoint products are second order).
"""

from __future__ import annotations

import argparse
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from jmech import dynamics
from jmech.dynamics import PhasePoint
from jmech.symcalc import HamiltonianSystem


@dataclass
class Config:
    hamiltonian: str = "0.5*(p1^2 + (1 + 0.1*sin(t))^2*q1^2)"
    factors: list = field(default_factory=lambda: [25, 50, 100, 200, 400, 800])
    times: list = field(default_factory=lambda: [math.pi / 2, 5.0, 10.0])
    ref_dt: float = 2.5e-4
    out: Path | None = None


def run(cfg: Config) -> list:
    system = HamiltonianSystem.from_string(cfg.hamiltonian, 1)
    x0 = PhasePoint(0.0, [0.3], [-0.7])
    j0 = (np.array([1.0]), np.array([0.5]))
    t_end = max(cfg.times)
    base = dynamics.integrate(system, x0, t_end, cfg.ref_dt)
    ref = dynamics.jacobi_integrate(system, base, j0)
    v0 = np.concatenate(j0)
    rows = []
    for n in cfg.factors:
        errs = []
        for t in cfg.times:
            i = int(np.argmin(np.abs(base.times - t)))
            E = dynamics.time_ordered_exp(system, base, base.times[i], n=n)
            errs.append(float(np.abs(v0 @ E - ref.jacobi[i]).max()))
        rows.append({"n": n, **{f"err@{t:.3g}": e for t, e in zip(cfg.times, errs)}})
    for prev, cur in zip(rows, rows[1:]):
        for key in list(cur):
            if key.startswith("err@") and prev[key] > 0 and cur[key] > 0:
                ratio = prev[key] / cur[key]
                cur[key.replace("err", "order")] = math.log2(ratio) / math.log2(cur["n"] / prev["n"])
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--factors", type=lambda s: [int(x) for x in s.split(",")], default=None)
    ap.add_argument("--ref-dt", type=float, default=Config.ref_dt)
    ap.add_argument("--out", type=Path, default=None, help="CSV destination")
    args = ap.parse_args(argv)
    cfg = Config(ref_dt=args.ref_dt, out=args.out)
    if args.factors:
        cfg.factors = args.factors
    rows = run(cfg)
    keys = sorted({k for r in rows for k in r}, key=lambda k: (k != "n", k))
    print("  ".join(f"{k:>12}" for k in keys))
    for r in rows:
        print("  ".join(f"{r[k]:12.4g}" if k in r else f"{'':>12}" for k in keys))
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Harmonic-oscillator reproduction: pass/fail table plus trajectory and Jacobi-field data.

    python scripts/reproduce_oscillator.py --omega 1.0 --out-dir runs/oscillator
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from jmech import dynamics
from jmech.demo import oscillator, run_demo
from jmech.dynamics import PhasePoint


@dataclass
class Config:
    omega: float = 1.0
    q0: float = 0.3
    p0: float = -0.7
    c: float = 1.0
    s: float = 0.5
    t_end: float = 10.0
    dt: float = 1e-3
    N: int = 32
    out_dir: Path = Path("runs/oscillator")


def main(argv=None) -> int:
    cfg = Config()
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in asdict(cfg).items():
        ap.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    cfg = Config(**vars(ap.parse_args(argv)))

    rows = run_demo(omega=cfg.omega, N=cfg.N, t_end=cfg.t_end, dt=cfg.dt)
    for row in rows:
        print(row.line())

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    ho = oscillator(cfg.omega)
    base = dynamics.integrate(ho, PhasePoint(0.0, [cfg.q0], [cfg.p0]), cfg.t_end, cfg.dt)
    dynamics.jacobi_integrate(ho, base, ([cfg.c], [cfg.s])).write_csv(cfg.out_dir / "trajectory.csv")
    summary = {"config": {k: str(v) for k, v in asdict(cfg).items()}, "rows": [asdict(r) for r in rows]}
    (cfg.out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0 if all(r.passed is not False for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())

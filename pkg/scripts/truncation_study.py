"""Truncation study of the Hermite representation as the mode count N grows.

For each N: generator-table deviation on the clean subspace, captured norm and
eigen residuals of f_{a,b}, Weyl-shift cosine, and the pi Hermiticity defect.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from jmech import hilbert


@dataclass
class Config:
    sizes: list = field(default_factory=lambda: [8, 16, 24, 32, 40, 48])
    a: float = 0.5
    b: float = 0.3
    alpha: float = 0.2
    hbar: float = 1.0


def run(cfg: Config) -> list:
    rows = []
    for N in cfg.sizes:
        basis = hilbert.HermiteBasis(N, 1, cfg.hbar)
        gens = hilbert.build_generators(basis)
        v, captured = hilbert.project_eigenstate(basis, [cfg.a], [cfg.b], min_capture=0.0)
        target, _ = hilbert.project_eigenstate(basis, [cfg.a + cfg.alpha], [cfg.b], min_capture=0.0)
        res = hilbert.eigen_residuals(basis, v, [cfg.a], [cfg.b], gens)
        rows.append({
            "N": N,
            "table_dev": hilbert.commutator_check(basis)["max_deviation"],
            "1-captured": 1 - captured,
            "residual": max(res.values()),
            "weyl_cos": (hilbert.weyl_operator(basis, "shift_a", [cfg.alpha]) @ v).cosine(target),
            "pi_defect": hilbert.hermiticity_report(basis, gens.pi[0])["defect"],
        })
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=lambda s: [int(x) for x in s.split(",")], default=None)
    ap.add_argument("--hbar", type=float, default=1.0)
    args = ap.parse_args(argv)
    cfg = Config(hbar=args.hbar)
    if args.sizes:
        cfg.sizes = args.sizes
    rows = run(cfg)
    keys = list(rows[0])
    print("  ".join(f"{k:>11}" for k in keys))
    for r in rows:
        print("  ".join(f"{r[k]:11.3e}" if k != "N" else f"{r[k]:>11}" for k in keys))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

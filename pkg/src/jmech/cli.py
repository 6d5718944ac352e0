"""Command-line front end: ``jmech simulate | jacobi | quantize | check-brackets``.

Exit codes: 0 success, 1 a bracket axiom failed, 2 invalid input (parse or
validation error), 3 numeric blow-up, 4 a quantization check could not run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, hilbert, poisson
from .demo import run_demo
from .symcalc import ParseError, load_system

EXIT_OK, EXIT_AXIOM, EXIT_INPUT, EXIT_BLOWUP, EXIT_CHECK = 0, 1, 2, 3, 4


class UsageError(ValueError):
    pass


def _floats(text: str) -> list:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


@dataclass
class RunConfig:
    """Validated settings shared by the subcommands."""

    system: Path | None = None
    t0: float = 0.0
    t_end: float = 10.0
    dt: float = 1e-3
    N: int = 32
    hbar: float = 1.0
    seed: int = 0
    out: Path | None = None
    fmt: str = "csv"
    extra: dict = field(default_factory=dict)

    def validate(self):
        if not self.dt > 0:
            raise UsageError("dt must be positive")
        if self.t_end < self.t0:
            raise UsageError("t_end must not precede the start time")
        if self.N < 4:
            raise UsageError("N must be at least 4")
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise UsageError(f"cannot write to {self.out}")
        return self


def _config_args(parser: argparse.ArgumentParser, path: str) -> list:
    """Translate ``key = value`` lines into flags placed ahead of the real argv."""
    actions = parser._option_string_actions
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, 1)
        key, _, value = (s.strip() for s in line.partition("="))
        flag = "--" + key.replace("_", "-")
        if flag not in actions:
            flag = "-" + key if "-" + key in actions else flag
        if flag not in actions:
            raise ParseError(f"unknown config key {key!r}", lineno, 1)
        action = actions[flag]
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                out.append(flag)
        else:
            out += [flag, value]
    return out


def _common(p, system_required=True):
    p.add_argument("--config", help="file of 'key = value' lines mirroring the flags")
    p.add_argument("--system", required=system_required, help="system file (dim/param/H)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jmech", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate the Hamilton equations")
    _common(s)
    s.add_argument("--q0", type=_floats, required=True)
    s.add_argument("--p0", type=_floats, required=True)
    s.add_argument("--qd0", type=_floats, help="initial Jacobi field (qd); integrates the vertical-extended system")
    s.add_argument("--pd0", type=_floats)
    s.add_argument("--t0", type=float, default=0.0)
    s.add_argument("--t-end", type=float, required=True)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--scheme", choices=dynamics.SCHEMES, default="rk4")
    s.add_argument("--sweep", help="extra initial points 'q,..,p,..;q,..,p,..'; outputs get a _<i> suffix")
    s.add_argument("--out", required=True)

    j = sub.add_parser("jacobi", help="cross-check Jacobi-field computations against each other")
    _common(j)
    j.add_argument("--q0", type=_floats, required=True)
    j.add_argument("--p0", type=_floats, required=True)
    j.add_argument("--c", type=_floats, required=True, help="initial qd")
    j.add_argument("--s", type=_floats, required=True, help="initial pd")
    j.add_argument("--t-end", type=float, required=True)
    j.add_argument("--dt", type=float, default=1e-3)
    j.add_argument("--eps", type=float, default=1e-6)
    j.add_argument("--factors", type=int, default=None, help="ordered-exponential factors (default span/dt)")
    j.add_argument("--samples", type=int, default=11, help="report times")
    j.add_argument("--out", required=True, help="trajectory CSV (base + variational Jacobi field)")
    j.add_argument("--report", required=True, help="comparison JSON")

    q = sub.add_parser("quantize", help="truncated Hermite representation checks")
    _common(q, system_required=False)
    q.add_argument("-N", type=int, default=32)
    q.add_argument("--hbar", type=float, default=1.0)
    q.add_argument("--t", type=float, default=1.0)
    q.add_argument("--a", type=_floats, default=None)
    q.add_argument("--b", type=_floats, default=None)
    q.add_argument("--alpha", type=float, default=0.2)
    q.add_argument("--dt-fd", type=float, default=1e-5)
    q.add_argument("--min-capture", type=float, default=None)
    q.add_argument("--demo-oscillator", action="store_true")
    q.add_argument("--out", help="report JSON (stdout when omitted)")
    q.add_argument("--operators-out", help="directory for generator matrix JSON files")

    c = sub.add_parser("check-brackets", help="symbolic Poisson axiom checks")
    c.add_argument("--config")
    c.add_argument("--kinds", default="base,vertical,alt,second")
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--m", type=int, default=2)
    c.add_argument("--out", help="report JSON (stdout when omitted)")
    return ap


def _parse(argv):
    parser = build_parser()
    argv = list(argv)
    if "--config" in argv[1:]:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            raise UsageError("--config needs a path")
        sub = parser._subparsers._group_actions[0].choices.get(argv[0])
        if sub is None:
            raise UsageError(f"unknown command {argv[0]!r}")
        # config values first so explicit flags override them
        argv = [argv[0]] + _config_args(sub, argv[i + 1]) + argv[1:]
    return parser.parse_args(argv)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("JMECH_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def _write(text: str, path):
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def _point(system, t0, q, p, qd=None, pd=None):
    m = system.m
    for name, v in (("q0", q), ("p0", p), ("qd0", qd), ("pd0", pd)):
        if v is not None and len(v) != m:
            raise UsageError(f"{name} needs {m} value(s)")
    return dynamics.PhasePoint(t0, q, p, qd, pd)


def cmd_simulate(args) -> int:
    cfg = RunConfig(Path(args.system), args.t0, args.t_end, args.dt, out=Path(args.out)).validate()
    system = load_system(cfg.system)
    if (args.qd0 is None) != (args.pd0 is None):
        raise UsageError("give both --qd0 and --pd0")
    points = [_point(system, cfg.t0, args.q0, args.p0, args.qd0, args.pd0)]
    if args.sweep:
        m = system.m
        for chunk in args.sweep.split(";"):
            vals = _floats(chunk)
            if len(vals) != 2 * m:
                raise UsageError(f"sweep points need {2 * m} values")
            points.append(_point(system, cfg.t0, vals[:m], vals[m:], args.qd0, args.pd0))

    def run(pt):
        return dynamics.integrate(system, pt, cfg.t_end, cfg.dt, args.scheme)

    if len(points) == 1:
        run(points[0]).write_csv(cfg.out)
        return EXIT_OK
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        trajs = list(pool.map(run, points))
    for i, tr in enumerate(trajs):
        tr.write_csv(cfg.out.with_name(f"{cfg.out.stem}_{i}{cfg.out.suffix}"))
    return EXIT_OK


def cmd_jacobi(args) -> int:
    cfg = RunConfig(Path(args.system), 0.0, args.t_end, args.dt, out=Path(args.out)).validate()
    system = load_system(cfg.system)
    x0 = _point(system, 0.0, args.q0, args.p0)
    c, s = args.c, args.s
    if len(c) != system.m or len(s) != system.m:
        raise UsageError(f"--c and --s need {system.m} value(s)")
    base = dynamics.integrate(system, x0, cfg.t_end, cfg.dt)
    var = dynamics.jacobi_integrate(system, base, (c, s))
    fd = dynamics.jacobi_fd_oracle(system, x0, (c, s), args.eps, cfg.t_end, cfg.dt)
    var.write_csv(cfg.out)
    quadratic = system.is_quadratic()
    idx = np.unique(np.linspace(0, len(base.times) - 1, max(2, args.samples)).round().astype(int))
    v0 = np.concatenate([c, s])
    rows = []
    grid = dynamics.time_ordered_exp_grid(system, base) if quadratic and args.factors is None else None
    for i in idx:
        t = float(base.times[i])
        row = {"t": t, "fd_vs_variational": float(np.abs(fd.jacobi[i] - var.jacobi[i]).max())}
        if quadratic:
            if grid is not None:
                E = grid[i]
            else:
                n = max(1, round(args.factors * t / cfg.t_end)) if cfg.t_end > 0 else 1
                E = dynamics.time_ordered_exp(system, base, t, n=n)
            row["texp_vs_variational"] = float(np.abs(v0 @ E - var.jacobi[i]).max())
        rows.append(row)
    report = {
        "system": system.digest(),
        "dt": base.dt,
        "eps": args.eps,
        "samples": rows,
        "max_fd_vs_variational": max(r["fd_vs_variational"] for r in rows),
    }
    if quadratic:
        report["max_texp_vs_variational"] = max(r["texp_vs_variational"] for r in rows)
    else:
        report["note"] = "H is not quadratic; ordered-exponential comparison skipped"
    _write(json.dumps(report, indent=2, sort_keys=True), args.report)
    return EXIT_OK


def cmd_quantize(args) -> int:
    if args.demo_oscillator:
        rows = run_demo(N=max(args.N, 4), hbar=args.hbar)
        for r in rows:
            print(r.line())
        report = {"demo": [r.__dict__ for r in rows]}
        if args.out:
            _write(json.dumps(report, indent=2, sort_keys=True), args.out)
        return EXIT_OK if all(r.passed is not False for r in rows) else EXIT_CHECK
    if args.N < 4:
        raise UsageError("N must be at least 4")
    system = load_system(args.system) if args.system else None
    m = system.m if system else 1
    try:
        basis = hilbert.HermiteBasis(args.N, m, args.hbar)
    except hilbert.HilbertError as err:
        raise UsageError(str(err)) from None
    degraded = args.N < 16
    min_capture = args.min_capture if args.min_capture is not None else (0.99 if degraded else 1 - 1e-8)
    report = {"basis": basis.to_dict(), "degraded": degraded, "gram_deviation": basis.gram_deviation()}
    report["commutators"] = hilbert.commutator_check(basis)
    gens = hilbert.build_generators(basis)
    report["hermiticity"] = {
        name: hilbert.hermiticity_report(basis, op)["defect"] for name, op in gens.named().items()
    }
    status = EXIT_OK
    a = args.a or [0.5] * m
    b = args.b or [0.3] * m
    try:
        v, captured = hilbert.project_eigenstate(basis, a, b, min_capture)
        eig = {"a": a, "b": b, "captured": captured, "residuals": hilbert.eigen_residuals(basis, v, a, b, gens)}
        if m == 1:
            R = hilbert.weyl_operator(basis, "shift_a", [args.alpha])
            target, _ = hilbert.project_eigenstate(basis, [a[0] + args.alpha], b, min_capture)
            eig["weyl_shift_a"] = {
                "alpha": args.alpha,
                "cosine": (R @ v).cosine(target),
                "function_overlap": abs(hilbert.weyl_function_overlap(basis, a, b, "shift_a", [args.alpha])),
            }
        report["eigenstates"] = eig
    except hilbert.CaptureError as err:
        report["eigenstates"] = {"error": str(err)}
        status = EXIT_CHECK
    if system is not None:
        if system.is_quadratic():
            report["instant"] = hilbert.instant_commutator_check(system, basis, args.t)
            if args.t >= args.dt_fd:
                report["evolution"] = hilbert.evolution_residual(system, basis, args.t, args.dt_fd)
        else:
            report["instant"] = {"skipped": "H is not quadratic"}
    if args.operators_out:
        out_dir = Path(args.operators_out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, op in gens.named().items():
            (out_dir / f"{name}.json").write_text(op.to_json())
    _write(json.dumps(report, indent=2, sort_keys=True, default=float), args.out)
    return status


def cmd_check_brackets(args) -> int:
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    try:
        kinds = [poisson.BracketKind(k) for k in kinds]
    except ValueError as err:
        raise UsageError(str(err)) from None
    reports = [poisson.check_axioms(k, args.trials, args.seed, args.m) for k in kinds]
    payload = [json.loads(r.to_json()) for r in reports]
    _write(json.dumps(payload, indent=2, sort_keys=True), args.out)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_AXIOM


COMMANDS = {
    "simulate": cmd_simulate,
    "jacobi": cmd_jacobi,
    "quantize": cmd_quantize,
    "check-brackets": cmd_check_brackets,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = _parse(argv)
    except (UsageError, ParseError, OSError) as err:
        print(f"jmech: {err}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ParseError as err:
        print(f"jmech: parse error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (UsageError, ValueError, OSError) as err:
        print(f"jmech: {err}", file=sys.stderr)
        return EXIT_INPUT
    except dynamics.BlowUpError as err:
        print(f"jmech: blow-up: {err}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    cmsfreeze solve   --system A --n 3 --x0 1,0,-1 --t 0.5,1 [--method sym|rk|hybrid]
    cmsfreeze zeros   hermite 5 | laguerre 4 --alpha 0.5 [--residual]
    cmsfreeze verify  growth|cross|leading|backward|all [options]
    cmsfreeze sde     --system A --n 2 --x0 1,-1 --betas 10,100,inf --paths 1000

Exit codes: 0 success, 1 usage or parse error, 2 domain rejection,
3 verification failure. Data goes to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Sequence

import numpy as np

from . import __version__, symflow
from .chamber import ChamberPoint, Kind, RootSystemSpec, Trajectory, sort_into_chamber
from .errors import CMSError, DimensionError
from .integrator import IntegratorConfig, integrate, solve_hybrid
from .orthopoly import hermite_zeros, laguerre_zeros, stieltjes_residual
from .sde import SdeConfig, freezing_deviation

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad input; 2 is reserved for domain errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v: float) -> str:
    return "%.17g" % v


def _floats(text: str, what: str) -> list[float]:
    if text.strip() == "":
        return []
    try:
        return [float(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _json_float(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")


@dataclass
class RunManifest:
    """Everything needed to reproduce one run; embedded in JSON output."""

    subcommand: str
    system: str
    n: int
    nu: float
    x0: list[float]
    times: list[float]
    method: str
    tolerances: dict[str, float] = field(default_factory=dict)
    seed: int | None = None
    format: str = "csv"
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "system": self.system,
            "n": self.n,
            "nu": self.nu,
            "x0": list(self.x0),
            "times": list(self.times),
            "method": self.method,
            "tolerances": {k: _json_float(v) for k, v in self.tolerances.items()},
            "seed": self.seed,
            "format": self.format,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunManifest":
        return cls(
            subcommand=d["subcommand"],
            system=d["system"],
            n=int(d["n"]),
            nu=float(d["nu"]),
            x0=[float(v) for v in d["x0"]],
            times=[float(v) for v in d["times"]],
            method=d["method"],
            tolerances={k: float(v) for k, v in d["tolerances"].items()},
            seed=d["seed"],
            format=d["format"],
            version=d["version"],
        )


def load_schema() -> dict:
    """JSON schema for ``solve --format json`` output."""
    text = resources.files("cmsfreeze").joinpath("schemas/trajectory.schema.json").read_text("utf-8")
    return json.loads(text)


def _system(args) -> RootSystemSpec:
    if args.n is None:
        raise UsageError("--n is required")
    return RootSystemSpec(Kind(args.system), args.n, args.nu if args.system == "B" else 0.0)


def _start(args, system: RootSystemSpec) -> ChamberPoint:
    x = _floats(args.x0, "--x0")
    if len(x) != system.n:
        raise UsageError(f"--x0 has {len(x)} entries, --n is {system.n}")
    if args.sorted:
        x = sort_into_chamber(x, system)
    return ChamberPoint(x, system)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CMS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"CMS_SEED must be an integer, got {env!r}") from None


def trajectory_csv(traj: Trajectory) -> str:
    lines = [",".join(["t"] + [f"x{i}" for i in range(1, traj.system.n + 1)])]
    for t, x in zip(traj.times, traj.points):
        lines.append(",".join(_fmt(v) for v in [t, *x]))
    return "\n".join(lines) + "\n"


def trajectory_json(traj: Trajectory, manifest: RunManifest) -> str:
    doc = {
        "manifest": manifest.to_dict(),
        "times": [float(t) for t in traj.times],
        "positions": [[float(v) for v in row] for row in traj.points],
    }
    return json.dumps(doc, allow_nan=False) + "\n"


def cmd_solve(args, out) -> int:
    system = _system(args)
    x0 = _start(args, system)
    times = _floats(args.t, "--t")
    if args.method == "sym":
        traj = symflow.solve_trajectory(x0, times)
        tolerances = dict(traj.tolerances)
    else:
        cfg = IntegratorConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol, bootstrap_eps=args.bootstrap_eps)
        if not times:
            traj = Trajectory([], np.empty((0, system.n)), system, "runge_kutta")
        elif args.method == "rk":
            traj = integrate(x0, times, cfg)
        else:
            traj = solve_hybrid(x0, times, cfg)
        tolerances = cfg.to_dict()
    manifest = RunManifest(
        "solve", system.kind.value, system.n, system.nu, x0.coords.tolist(), list(map(float, times)),
        args.method, tolerances, None, args.format,
    )
    if args.format == "json":
        out.write(trajectory_json(traj, manifest))
    else:
        print("manifest: " + json.dumps(manifest.to_dict()), file=sys.stderr)
        out.write(trajectory_csv(traj))
    return EXIT_OK


def cmd_zeros(args, out) -> int:
    if args.degree < 1:
        raise UsageError(f"degree must be >= 1, got {args.degree}")
    if args.family == "hermite":
        zs = hermite_zeros(args.degree)
    else:
        if args.alpha is None or not (args.alpha > -1.0 or args.alpha == -1.0) or math.isinf(args.alpha):
            raise UsageError(f"laguerre needs --alpha > -1 or exactly -1, got {args.alpha}")
        zs = laguerre_zeros(args.degree, args.alpha)
    for z in zs.zeros:
        out.write(_fmt(z + 0.0) + "\n")  # + 0.0 turns -0.0 into 0
    if args.residual:
        r = stieltjes_residual(zs)
        out.write(f"residual={_fmt(float(np.max(np.abs(r))))}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from . import verify

    rng = np.random.default_rng(_seed(args))
    suites = ["growth", "cross", "leading", "backward"] if args.suite == "all" else [args.suite]
    n = args.n
    results = []
    for name in suites:
        if name == "growth":
            system = RootSystemSpec(Kind(args.system), n or 5, args.nu if args.system == "B" else 0.0)
            results.append(verify.growth_suite(system, args.trials, rng, t_max=args.t_max or 10.0))
        elif name == "cross":
            results.append(verify.cross_suite(n or 4, args.trials, rng, t_max=args.t_max or 1.0))
        elif name == "leading":
            results.append(verify.leading_suite(n or 10))
        else:
            x0 = None
            if args.x0 is not None:
                x = _floats(args.x0, "--x0")
                system = RootSystemSpec(Kind(args.system), len(x), args.nu if args.system == "B" else 0.0)
                x0 = ChamberPoint(sort_into_chamber(x, system) if args.sorted else x, system)
            results.append(verify.backward_suite(rng, x0, trials=args.trials, n=n or 4))
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.metric} = {r.value:.3e} (threshold {r.threshold:.1e})  {r.detail}",
              file=sys.stderr)
    passed = all(r.passed for r in results)
    json.dump({"passed": passed, "seed": _seed(args), "suites": [r.to_dict() for r in results]}, out)
    out.write("\n")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_sde(args, out) -> int:
    system = _system(args)
    x0 = _start(args, system)
    betas = _floats(args.betas, "--betas")
    if not betas:
        raise UsageError("--betas must list at least one value")
    if any(not b > 0 for b in betas):
        raise UsageError("every beta must be positive (inf allowed)")
    if args.paths < 1 or not args.dt > 0 or not args.t_end > 0:
        raise UsageError("--paths, --dt and --t-end must be positive")
    seed = _seed(args)
    cfg = SdeConfig(math.inf, args.paths, args.dt, seed)
    manifest = RunManifest(
        "sde", system.kind.value, system.n, system.nu, x0.coords.tolist(), [0.0, args.t_end],
        "euler_maruyama", {"dt": args.dt, "n_paths": float(args.paths)}, seed, "csv",
    )
    print("manifest: " + json.dumps(manifest.to_dict()), file=sys.stderr)
    rows = freezing_deviation(x0, args.t_end, betas, cfg)
    out.write("beta,mean_dev,std_err,reflect_rate\n")
    for r in rows:
        out.write(",".join([_fmt(r.beta), _fmt(r.mean_dev), _fmt(r.std_err), _fmt(r.reflect_rate)]) + "\n")
        if r.n_failed:
            print(f"beta={r.beta:g}: {r.n_failed} paths discarded", file=sys.stderr)
    return EXIT_OK


def _add_system_args(p: argparse.ArgumentParser, n_required: bool = True) -> None:
    p.add_argument("--system", choices=["A", "B", "D"], default="A")
    p.add_argument("--n", type=int, required=n_required)
    p.add_argument("--nu", type=float, default=1.0, help="wall coupling for B (default 1)")
    p.add_argument("--sorted", action="store_true", help="sort --x0 into the chamber first")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cmsfreeze", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve the ODE from a start vector")
    _add_system_args(p)
    p.add_argument("--x0", required=True, help="comma-separated start vector")
    p.add_argument("--t", required=True, help='comma-separated output times ("" for none)')
    p.add_argument("--method", choices=["sym", "rk", "hybrid"], default="sym")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    defaults = IntegratorConfig()
    p.add_argument("--rel-tol", type=float, default=defaults.rel_tol)
    p.add_argument("--abs-tol", type=float, default=defaults.abs_tol)
    p.add_argument("--bootstrap-eps", type=float, default=defaults.bootstrap_eps)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("zeros", help="zeros of Hermite or Laguerre polynomials")
    p.add_argument("family", choices=["hermite", "laguerre"])
    p.add_argument("degree", type=int)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--residual", action="store_true", help="append the Stieltjes residual max-norm")
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("verify", help="run self-check suites")
    p.add_argument("suite", choices=["growth", "cross", "leading", "backward", "all"])
    p.add_argument("--system", choices=["A", "B", "D"], default="A")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--x0", default=None, help="start vector for the backward suite")
    p.add_argument("--sorted", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sde", help="finite-beta freezing experiment")
    _add_system_args(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--betas", required=True, help="comma-separated, 'inf' allowed")
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None, help="falls back to $CMS_SEED, then 0")
    p.set_defaults(func=cmd_sde)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CMSError as exc:
        # domain rejections, plus numerical failures (bracket, step underflow) which are rare
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())

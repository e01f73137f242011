"""Command-line front end.

Every subcommand writes its artifacts into ``--out`` together with a
``manifest.json`` that records the resolved inputs, the seed, the tool version
and a SHA-256 digest of every emitted file.  Outputs contain no timestamps, so
re-running with the same inputs reproduces them byte for byte.
"""
import argparse
import hashlib
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .chaos import chaos_for_model, load_chaos, parseval_residual
from .error_functionals import (dyadic, error_report, limit_constant, rate_sweep,
                                smoothness_criteria)
from .exceptions import (IntegralDivergent, LevyApproxError, LevyApproxWarning, ModelError,
                         NumericalFailure, UnsupportedModel)
from .levy_model import load_model, psi_smallball
from .montecarlo import opt_error_mc_regression, sim_error_mc
from .nets import load_net, optimize_net, theta_net
from .payoffs import Digital, MollifiedDigital, Polynomial

EXIT_OK, EXIT_INVALID, EXIT_UNSUPPORTED, EXIT_NUMERICAL = 0, 2, 3, 4
MANIFEST_SCHEMA = "levyapprox.manifest/1"


class UsageError(ValueError):
    pass


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Collects emitted files and writes the manifest."""

    def __init__(self, args):
        self.args = args
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        self.outputs = []

    def write(self, name, text):
        path = os.path.join(self.out, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        self.outputs.append(path)
        return path

    def write_json(self, name, obj):
        return self.write(name, json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")

    def finish(self):
        params, files = {}, {}
        for k, v in sorted(vars(self.args).items()):
            if k in ("func", "out"):
                continue
            if k in ("model", "coeffs", "net") and v:
                files[k] = {"path": os.path.abspath(v), "sha256": _sha256(v)}
            params[k] = v
        manifest = {"schema": MANIFEST_SCHEMA, "command": self.args.command,
                    "inputs": {"parameters": params, "files": files},
                    "seed": getattr(self.args, "seed", None), "tool_version": __version__,
                    "outputs": [{"path": os.path.basename(p), "sha256": _sha256(p)}
                                for p in self.outputs]}
        path = os.path.join(self.out, "manifest.json")
        with open(path, "w", newline="\n") as fh:
            fh.write(json.dumps(_clean(manifest), indent=2, sort_keys=True) + "\n")
        return manifest


def _clean(obj):
    # JSON has no inf/nan
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _model(args):
    if not args.model:
        raise UsageError("--model is required")
    return load_model(args.model)


def _coeffs(args):
    if not args.coeffs:
        raise UsageError("--coeffs is required")
    return load_chaos(args.coeffs)


def _net(args):
    if getattr(args, "net", None):
        return load_net(args.net)
    if args.N is None:
        raise UsageError("give --net or --N")
    return theta_net(args.N, args.theta)


def parse_payoff(tokens):
    """``digital K`` | ``mollified K eps`` | ``poly c0 c1 ...``."""
    if not tokens:
        raise UsageError("--payoff needs a kind")
    kind, vals = tokens[0].lower(), tokens[1:]
    try:
        nums = [float(v) for v in vals]
    except ValueError as exc:
        raise UsageError(f"bad payoff parameter: {exc}") from exc
    if kind == "digital" and len(nums) == 1:
        return Digital(nums[0])
    if kind in ("mollified", "mollified-digital") and len(nums) == 2:
        return MollifiedDigital(nums[0], nums[1])
    if kind in ("poly", "polynomial") and nums:
        return Polynomial(tuple(nums))
    raise UsageError(f"cannot parse payoff {' '.join(tokens)!r}")


# ------------------------------------------------------------- commands

def cmd_nets(args):
    run = Run(args)
    if args.optimize:
        c = _coeffs(args)
        if args.N is None or args.N < 1:
            raise UsageError("--N must be a positive integer")
        net = optimize_net(c.chaos_norms(), args.N, args.grid_resolution)
    else:
        if args.N is None:
            raise UsageError("--N is required")
        net = theta_net(args.N, args.theta)
    run.write("net.csv", net.to_csv())
    return run


def cmd_coeffs(args):
    run = Run(args)
    model = _model(args)
    payoff = parse_payoff(args.payoff)
    c = chaos_for_model(payoff, model, args.nmax)
    run.write("chaos.json", c.to_json() + "\n")
    run.write("chaos.csv", c.to_csv())
    run.write_json("coeffs_summary.json", {
        "n_max": c.n_max, "mean": c.mean, "norm_sq": c.norm_sq(), "tail": c.tail,
        "second_moment": c.second_moment, "parseval_residual": parseval_residual(c)})
    return run


def cmd_error_exact(args):
    run = Run(args)
    model, c = _model(args), _coeffs(args)
    rep = error_report(c, model, _net(args), args.limit_theta)
    run.write_json("error_report.json", rep.to_dict())
    run.write("error_report.csv", rep.to_csv())
    return run


def cmd_error_mc(args):
    run = Run(args)
    model, c = _model(args), _coeffs(args)
    net = _net(args)
    est = sim_error_mc(c, model, net, args.process, args.paths, args.seed, args.workers)
    out = {"simple": est.to_dict()}
    if args.regression:
        reg = opt_error_mc_regression(c, model, net, args.process, args.paths,
                                      args.basis_size, args.seed, args.workers)
        out["regression"] = reg.to_dict()
    run.write_json("error_mc.json", out)
    return run


def cmd_rate_sweep(args):
    run = Run(args)
    model, c = _model(args), _coeffs(args)
    table = rate_sweep(c, model, args.theta, dyadic(args.n_min, args.n_max), args.process,
                       args.extrapolate_tail)
    run.write("rate_table.csv", table.to_csv())
    run.write_json("rate_sweep.json", table.to_dict())
    return run


def cmd_smoothness(args):
    run = Run(args)
    c = _coeffs(args)
    rep = smoothness_criteria(c, args.theta)
    run.write_json("smoothness.json", rep.to_dict())
    return run


def cmd_psi(args):
    run = Run(args)
    model = _model(args)
    lo, hi, n = args.grid
    grid = np.linspace(lo, hi, int(n))
    rows = []
    for d in args.delta:
        est = psi_smallball(model, d, args.paths, grid, args.seed, args.workers)
        rows.append(est)
    run.write("psi.csv", "delta,psi,std_error,argmax\n" + "".join(
        f"{float(e.info.get('delta', 0.0))!r},{float(e.value)!r},{float(e.std_error)!r},{float(e.info['argmax'])!r}\n"
        for e in rows))
    run.write_json("psi.json", [e.to_dict() for e in rows])
    return run


def cmd_report(args):
    run = Run(args)
    model, c = _model(args), _coeffs(args)
    Ns = dyadic(args.n_min, args.n_max)
    table = rate_sweep(c, model, args.theta, Ns, args.process, args.extrapolate_tail)
    report = {"schema": "levyapprox.report/1", "theta": args.theta, "process": table.process,
              "rate_table": table.to_dict(), "slope": table.slope,
              "extrapolate_tail": args.extrapolate_tail}
    try:
        lim = limit_constant(c, model, args.theta, table.process)
        report["limit_constant"] = lim.to_dict()
    except IntegralDivergent as exc:
        report["limit_constant"] = {"value": None, "verdict": "divergent", "reason": str(exc)}
    report["smoothness"] = smoothness_criteria(c, args.theta).to_dict()
    run.write("rate_table.csv", table.to_csv())
    run.write_json("report.json", report)
    return run


# --------------------------------------------------------------- parser

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="levyapprox", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", help="model JSON file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--workers", type=int, default=1)

    def net_args(sp):
        sp.add_argument("--net", help="net CSV (one knot per line)")
        sp.add_argument("--N", type=int)
        sp.add_argument("--theta", type=float, default=1.0)

    sp = sub.add_parser("nets", help="theta-nets or DP-optimized nets")
    common(sp)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--theta", type=float, default=1.0)
    sp.add_argument("--optimize", action="store_true")
    sp.add_argument("--coeffs")
    sp.add_argument("--grid-resolution", type=int, default=None)
    sp.set_defaults(func=cmd_nets)

    sp = sub.add_parser("coeffs", help="chaos coefficients of a payoff")
    common(sp)
    sp.add_argument("--payoff", nargs="+", required=True,
                    help="digital K | mollified K eps | poly c0 c1 ...")
    sp.add_argument("--nmax", type=_positive_int, default=None)
    sp.set_defaults(func=cmd_coeffs)

    sp = sub.add_parser("error-exact", help="exact error report on one net")
    common(sp)
    sp.add_argument("--coeffs")
    net_args(sp)
    sp.add_argument("--limit-theta", type=float, default=None)
    sp.set_defaults(func=cmd_error_exact)

    sp = sub.add_parser("error-mc", help="Monte Carlo approximation errors")
    common(sp)
    sp.add_argument("--coeffs")
    net_args(sp)
    sp.add_argument("--process", choices=["x", "s", "X", "S"], default="x")
    sp.add_argument("--paths", type=_positive_int, default=100_000)
    sp.add_argument("--regression", action="store_true")
    sp.add_argument("--basis-size", type=int, default=5)
    sp.set_defaults(func=cmd_error_mc)

    for name, func, help_ in (("rate-sweep", cmd_rate_sweep, "errors along theta-nets"),
                              ("report", cmd_report, "rates, limit constant and smoothness")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--coeffs")
        sp.add_argument("--theta", type=float, default=1.0)
        sp.add_argument("--n-min", type=_positive_int, default=4)
        sp.add_argument("--n-max", type=_positive_int, default=1024)
        sp.add_argument("--process", choices=["x", "s", "X", "S"], default="x")
        sp.add_argument("--extrapolate-tail", action="store_true",
                        help="add a power-law model of the chaos norms beyond n_max")
        sp.set_defaults(func=func)

    sp = sub.add_parser("smoothness", help="fractional smoothness verdicts")
    common(sp)
    sp.add_argument("--coeffs")
    sp.add_argument("--theta", type=float, default=0.5)
    sp.set_defaults(func=cmd_smoothness)

    sp = sub.add_parser("psi", help="small-ball function by Monte Carlo")
    common(sp)
    sp.add_argument("--delta", type=float, nargs="+", default=[0.1])
    sp.add_argument("--paths", type=_positive_int, default=100_000)
    sp.add_argument("--grid", type=float, nargs=3, default=[-3.0, 3.0, 61],
                    metavar=("LO", "HI", "COUNT"))
    sp.set_defaults(func=cmd_psi)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LevyApproxWarning)
            run = args.func(args)
        run.finish()
    except UnsupportedModel as exc:
        print(f"error: unsupported model: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (UsageError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LevyApproxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

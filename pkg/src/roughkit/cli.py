"""Command-line front end.

Every artifact records the full run configuration (a JSON sidecar for CSV
files, a ``config`` entry for JSON reports) so ``roughkit replay`` can
regenerate it byte for byte.  Exit status: 0 success, 1 input error, 2 a
bound audit failed.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .fields import LinearDiffusion, field_from_spec
from .greedy import (
    count_bound_holder,
    count_bound_pvar,
    greedy_times_holder,
    greedy_times_pvar,
)
from .integral import rough_integrate, sewing_bound, sewing_defect
from .io import (
    InputError,
    read_controlled_csv,
    read_json,
    read_path_csv,
    read_rough,
    sidecar_path,
    to_jsonable,
    write_json,
    write_path_csv,
    write_rough,
)
from .lift import FbmSpec, lift_piecewise_linear, sample_fbm
from .norms import norm_report
from .rough_core import GridPath
from .solver import SolverError, solve_backward, solve_davie, solve_doss_sussmann, solve_linear
from .verify import SUITES, audit_ensemble, convergence_study

__all__ = ["main", "build_parser", "run_config"]

EXIT_OK, EXIT_INPUT, EXIT_AUDIT = 0, 1, 2

_PATH_ARGS = ("input", "rough", "controlled", "field", "out")


def _ranged(name, lo=None, hi=None, lo_open=False, hi_open=False, kind=float):
    def parse(text):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name}: expected a number, got {text!r}") from None
        bad = (
            lo is not None and (x < lo or (lo_open and x == lo))
        ) or (hi is not None and (x > hi or (hi_open and x == hi)))
        if bad or (kind is float and not math.isfinite(x)):
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            raise argparse.ArgumentTypeError(f"{name}: {x} is outside {lb}{lo}, {hi}{rb}")
        return x

    return parse


def _vector(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--y0: expected comma-separated numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress the summary line")
    p = _Parser(prog="roughkit", description="Rough differential equation toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("fbm", parents=[common], help="sample fractional Brownian motion")
    s.add_argument("--hurst", type=_ranged("--hurst", 1 / 3, 0.5, lo_open=True), required=True)
    s.add_argument("--n", type=_ranged("--n", 1, None, kind=int), default=1024)
    s.add_argument("--horizon", type=_ranged("--horizon", 0, None, lo_open=True), default=1.0)
    s.add_argument("--dim", type=_ranged("--dim", 1, None, kind=int), default=1)
    s.add_argument("--seed", type=_ranged("--seed", 0, 2**63 - 1, kind=int), default=0)
    s.add_argument("--method", choices=("auto", "circulant", "cholesky"), default="auto")
    s.add_argument("--out", required=True)

    s = sub.add_parser("lift", parents=[common], help="piecewise-linear lift of a sampled path")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--alpha", type=_ranged("--alpha", 1 / 3, 0.5, True, True))
    s.add_argument("--p", type=_ranged("--p", 2, 3, True, True))
    s.add_argument("--out", required=True)

    s = sub.add_parser("norms", parents=[common], help="Hölder and variation norms")
    s.add_argument("--rough", required=True)
    s.add_argument("--from", dest="t_from", type=float)
    s.add_argument("--to", dest="t_to", type=float)
    s.add_argument("--out")

    s = sub.add_parser("integrate", parents=[common], help="rough integral of a controlled path")
    s.add_argument("--rough", required=True)
    s.add_argument("--controlled", required=True)
    s.add_argument("--from", dest="t_from", type=float)
    s.add_argument("--to", dest="t_to", type=float)
    s.add_argument("--out")

    s = sub.add_parser("greedy", parents=[common], help="greedy stopping times")
    s.add_argument("--rough", required=True)
    s.add_argument("--gamma", type=_ranged("--gamma", 0, None, lo_open=True), required=True)
    s.add_argument("--gauge", choices=("pvar", "holder"), default="pvar")
    s.add_argument("--nu", type=_ranged("--nu", 0, 1, True, True))
    s.add_argument("--out")

    s = sub.add_parser("solve", parents=[common], help="solve a rough differential equation")
    s.add_argument("--rough", required=True)
    s.add_argument("--field", required=True)
    s.add_argument("--y0", type=_vector, required=True)
    s.add_argument("--scheme", choices=("davie", "linear", "ds", "backward"), default="davie")
    s.add_argument("--out", required=True)

    s = sub.add_parser("verify", parents=[common], help="Monte Carlo audit of the solution bounds")
    s.add_argument("--suite", choices=SUITES, default="all")
    s.add_argument("--paths", type=_ranged("--paths", None, None, kind=int), default=100)
    s.add_argument("--hurst", type=_ranged("--hurst", 1 / 3, 0.5, lo_open=True), default=0.4)
    s.add_argument("--seed", type=_ranged("--seed", 0, 2**63 - 1, kind=int), default=0)
    s.add_argument("--n", type=_ranged("--n", 2, None, kind=int), default=512)
    s.add_argument("--out")

    s = sub.add_parser("convergence", parents=[common], help="dyadic refinement study")
    s.add_argument("--problem", choices=("exp", "ode", "ds", "fbm"), default="exp")
    s.add_argument("--scheme", choices=("davie", "linear", "backward"), default="davie")
    s.add_argument("--levels", type=int, nargs=2, default=(8, 12), metavar=("LO", "HI"))
    s.add_argument("--hurst", type=_ranged("--hurst", 1 / 3, 0.5, lo_open=True), default=0.4)
    s.add_argument("--seed", type=_ranged("--seed", 0, 2**63 - 1, kind=int), default=0)
    s.add_argument("--out")

    s = sub.add_parser("replay", parents=[common], help="re-run a command from its recorded config")
    s.add_argument("config", help="sidecar (.json) or JSON report with a 'config' entry")
    s.add_argument("--out", help="write the artifact here instead of the recorded location")
    return p


def run_config(args):
    """The reproducible part of a parsed command line."""
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in ("quiet", "command"):
            continue
        if k in _PATH_ARGS and v is not None:
            v = os.path.abspath(v)
        cfg[k] = list(v) if isinstance(v, tuple) else v
    return {"command": args.command, "args": cfg}


def _say(args, text):
    if not args.quiet:
        print(text)


def _index_of(rp, t, flag, default):
    if t is None:
        return default
    k = int(np.argmin(np.abs(rp.times - t)))
    if abs(rp.times[k] - t) > 1e-12 * max(1.0, abs(t)):
        raise InputError(f"{flag}: time {t} is not a grid point of the rough path")
    return k


def _emit_json(args, obj):
    obj = dict(obj)
    obj["config"] = run_config(args)
    if args.out:
        write_json(args.out, obj)
    summary = {k: v for k, v in obj.items() if k != "config"}
    _say(args, json.dumps(to_jsonable(summary), sort_keys=True))


def cmd_fbm(args):
    spec = FbmSpec(hurst=args.hurst, horizon=args.horizon, n=args.n, seed=args.seed)
    gp = sample_fbm(spec, m=args.dim, method=args.method)
    write_path_csv(args.out, gp)
    write_json(sidecar_path(args.out), {"kind": "path", "hurst": args.hurst, "config": run_config(args)})
    _say(args, f"fbm: wrote {gp.n + 1} points of a {gp.dim}-dimensional path to {args.out}")
    return EXIT_OK


def _input_alpha(args):
    alpha = args.alpha
    if args.p is not None:
        if alpha is not None and abs(args.p * alpha - 1.0) > 1e-12:
            raise InputError(f"--p: {args.p} is inconsistent with --alpha {alpha} (need p = 1/alpha)")
        alpha = 1.0 / args.p if alpha is None else alpha
    if alpha is None:
        side = sidecar_path(args.input)
        hurst = read_json(side, "path sidecar").get("hurst") if os.path.exists(side) else None
        alpha = 0.9 * hurst if hurst else 0.45
    return alpha


def cmd_lift(args):
    gp = read_path_csv(args.input, "--in")
    args.alpha = _input_alpha(args)
    rp = lift_piecewise_linear(gp, args.alpha)
    write_rough(args.out, rp, run_config(args))
    _say(args, f"lift: wrote {rp.n} area blocks (alpha = {rp.alpha}) to {args.out}")
    return EXIT_OK


def cmd_norms(args):
    rp = read_rough(args.rough, "--rough")
    lo = _index_of(rp, args.t_from, "--from", 0)
    hi = _index_of(rp, args.t_to, "--to", rp.n)
    rep = norm_report(rp, lo, hi)
    _emit_json(args, json.loads(rep.to_json()))
    return EXIT_OK


def cmd_integrate(args):
    rp = read_rough(args.rough, "--rough")
    y = read_controlled_csv(args.controlled, rp, "--controlled")
    lo = _index_of(rp, args.t_from, "--from", 0)
    hi = _index_of(rp, args.t_to, "--to", rp.n)
    value = rough_integrate(y, rp, lo, hi)
    defect, allowance = sewing_defect(y, rp, lo, hi)
    _emit_json(
        args,
        {
            "value": value.tolist(),
            "interval": [float(rp.times[lo]), float(rp.times[hi])],
            "sewing_bound_holder": sewing_bound(y, rp, lo, hi, "holder"),
            "sewing_bound_pvar": sewing_bound(y, rp, lo, hi, "pvar"),
            "one_step_defect": defect,
            "rounding_allowance": allowance,
        },
    )
    return EXIT_OK


def cmd_greedy(args):
    rp = read_rough(args.rough, "--rough")
    if args.gauge == "pvar":
        res = greedy_times_pvar(rp, args.gamma)
        bound = count_bound_pvar(rp, args.gamma)
    else:
        res = greedy_times_holder(rp, args.gamma)
        nu = args.nu if args.nu is not None else min(0.5, rp.alpha + (0.5 - rp.alpha) / 2)
        bound = count_bound_holder(rp, args.gamma, alpha=rp.alpha, nu=nu)
    out = res.to_dict()
    out["count_bound"] = bound
    _emit_json(args, out)
    return EXIT_OK


def _load_field(path):
    spec = read_json(path, "--field")
    try:
        return spec, field_from_spec(spec)
    except KeyError as exc:
        raise InputError(f"--field: missing entry {exc}") from None
    except (ValueError, TypeError) as exc:
        raise InputError(f"--field: {exc}") from None


def cmd_solve(args):
    rp = read_rough(args.rough, "--rough")
    spec, vf = _load_field(args.field)
    y0 = np.asarray(args.y0, dtype=float)
    if y0.shape != (vf.d,):
        raise InputError(f"--y0: expected {vf.d} components, got {y0.shape[0]}")
    if rp.dim != vf.m:
        raise InputError(f"--field: diffusion has {vf.m} noise channels, driver has {rp.dim}")
    if args.scheme == "davie":
        rep = solve_davie(rp, vf, y0)
    elif args.scheme == "linear":
        if not isinstance(vf.diffusion, LinearDiffusion):
            raise InputError("--scheme linear: the field's diffusion is not of kind 'linear'")
        rep = solve_linear(rp, vf.diffusion.C, vf.diffusion.g0, vf.drift, y0)
    elif args.scheme == "ds":
        rep = solve_doss_sussmann(rp, vf, y0)
    else:
        if not vf.drift.is_zero:
            raise InputError("--scheme backward: the drift must be of kind 'zero'")
        rep = solve_backward(rp, vf.diffusion, y0)
    write_path_csv(args.out, GridPath(rep.times, rep.values))
    summary = {"scheme": rep.scheme, "steps": int(rep.partition.shape[0] - 1),
               "final": rep.values[-1].tolist()}
    if spec.get("oracle") == "exp":
        x = rp.values[rep.partition, 0]
        exact = y0[0] * (np.exp(-(x[-1] - x)) if args.scheme == "backward" else np.exp(x - x[0]))
        summary["rel_error_vs_oracle"] = float(np.max(np.abs(rep.values[:, 0] - exact) / np.abs(exact)))
    write_json(sidecar_path(args.out), {"kind": "solution", "summary": summary, "config": run_config(args)})
    _say(args, "solve: " + json.dumps(to_jsonable(summary), sort_keys=True))
    return EXIT_OK


def cmd_verify(args):
    if args.paths < 1:
        raise InputError("--paths: the ensemble needs at least one path")
    rep = audit_ensemble(args.suite, args.paths, args.hurst, args.seed, args.n)
    obj = dict(rep)
    obj["config"] = run_config(args)
    if args.out:
        write_json(args.out, obj)
    rates = {k: round(c["pass_rate"], 6) for k, c in rep["checks"].items()}
    _say(args, f"verify: suite {args.suite}, {args.paths} paths, all_pass={rep['all_pass']}, pass rates {rates}")
    return EXIT_OK if rep["all_pass"] else EXIT_AUDIT


def cmd_convergence(args):
    lo, hi = args.levels
    if not 1 <= lo < hi <= 16:
        raise InputError("--levels: need 1 <= LO < HI <= 16")
    rep = convergence_study(args.problem, range(lo, hi + 1), args.scheme, args.hurst, args.seed)
    _emit_json(args, rep)
    return EXIT_OK


def cmd_replay(args):
    data = read_json(args.config, "config")
    cfg = data.get("config", data)
    if "command" not in cfg or "args" not in cfg or cfg["command"] == "replay":
        raise InputError(f"config: {args.config} holds no replayable run configuration")
    ns = argparse.Namespace(**cfg["args"])
    ns.command = cfg["command"]
    ns.quiet = args.quiet
    if args.out is not None:
        ns.out = os.path.abspath(args.out)
    for k in ("levels",):
        if hasattr(ns, k) and isinstance(getattr(ns, k), list):
            setattr(ns, k, tuple(getattr(ns, k)))
    return COMMANDS[ns.command](ns)


COMMANDS = {
    "fbm": cmd_fbm,
    "lift": cmd_lift,
    "norms": cmd_norms,
    "integrate": cmd_integrate,
    "greedy": cmd_greedy,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "convergence": cmd_convergence,
    "replay": cmd_replay,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (InputError, ValueError, TypeError, KeyError) as exc:
        print(f"roughkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"roughkit {args.command}: solver failed: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

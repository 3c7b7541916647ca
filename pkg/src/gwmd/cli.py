"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 runtime error.  Errors are
written to stderr as a single JSON line ``{"error": ..., "flag": ..., "message": ...}``.

Every subcommand also accepts ``--config FILE``: a JSON document with
``schema_version``, ``subcommand`` and flag values (by option name, dashes or
underscores).  Values from the file override command-line flags.  Every
output embeds the fully resolved document under ``run_config``, and a file
containing a ``run_config`` key is itself accepted by ``--config``, so any
artifact can be regenerated with ``gwmd --config artifact.json``.
"""

import argparse
import json
import sys

from . import SCHEMA_VERSION
from . import montecarlo as mc
from .errors import GWMDError, ValidationError
from .inference import (
    ci_time_type,
    comfort_zone_exceeded,
    confidence_interval,
    critical_value,
    large_dev_factor,
    p_value_time_type,
)
from .offspring import moments, resolve_law
from .rng import derive_stream
from .simulate import GenerationObservation, Trajectory, load_data, simulate_generation_observation, simulate_trajectory
from .stats import compute_statistic

CI_METHODS = {
    "time": "TimeTypeQuadratic",
    "space": "SpaceType",
    "space-ld": "SpaceTypeLargeDev",
    "known-v": "KnownVariance",
    "infectious": "Infectious",
}
MC_COMMANDS = ("mc-ratio", "mc-ks", "mc-coverage")

# flags each subcommand must end up with, after merging --config
REQUIRED = {
    "simulate": ("law", "n"),
    "stat": ("kind", "m", "input"),
    "ci": ("method", "kappa", "input"),
    "pvalue": ("input",),
    "mc-ratio": ("law", "n"),
    "mc-ks": ("law", "n"),
    "mc-coverage": ("law", "n", "kappa", "method"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    parser = _Parser(prog="gwmd", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON run configuration overriding flags")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a trajectory or one observed generation")
    p.add_argument("--law", help="preset name or law JSON file")
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observe-generation", type=int)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")

    p = sub.add_parser("stat", help="evaluate M, H, T or Ttilde on a data file")
    p.add_argument("--kind", choices=("M", "H", "T", "Ttilde"))
    p.add_argument("--m", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--input")

    p = sub.add_parser("ci", help="confidence interval for the offspring mean")
    p.add_argument("--method", choices=tuple(CI_METHODS))
    p.add_argument("--kappa", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--input")

    p = sub.add_parser("pvalue", help="two-sided plug-in p-value of the time-type statistic")
    p.add_argument("--input")

    for name in MC_COMMANDS:
        p = sub.add_parser(name, help=f"Monte Carlo {name[3:]} experiment")
        p.add_argument("--law")
        p.add_argument("--stat", choices=mc.STAT_KINDS, default="M")
        p.add_argument("--n", type=int)
        p.add_argument("--n0", type=int, default=0)
        p.add_argument("--reps", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--x-grid", type=_float_list, default=[0.0, 0.5, 1.0, 1.5, 2.0])
        p.add_argument("--kappa", type=float)
        p.add_argument("--method", choices=tuple(CI_METHODS))
        p.add_argument("--trend", type=_int_list, help="also tabulate results at these n")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out")
    return parser


def _load_run_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}", flag="--config") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}", flag="--config") from None
    if isinstance(doc, dict) and isinstance(doc.get("run_config"), dict):
        doc = doc["run_config"]
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object", flag="--config")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {version!r}", flag="--config")
    return doc


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    doc = _load_run_config(known.config) if known.config else {}
    subcommands = set(REQUIRED)
    if doc and not any(a in subcommands for a in rest):
        if "subcommand" not in doc:
            raise ValidationError("config has no subcommand and none was given", flag="--config")
        rest = [doc["subcommand"]] + rest
    args = parser.parse_args(rest)
    if args.subcommand is None:
        raise ValidationError("a subcommand is required")
    if doc.get("subcommand", args.subcommand) != args.subcommand:
        raise ValidationError(f"config is for {doc['subcommand']!r}, not {args.subcommand!r}", flag="--config")

    dests = set(vars(args)) - {"subcommand", "config"}
    for key, value in doc.items():
        if key in ("schema_version", "subcommand"):
            continue
        dest = key.replace("-", "_")
        if dest not in dests:
            raise ValidationError(f"unknown config key {key!r} for {args.subcommand}", flag="--config")
        setattr(args, dest, value)
    required = REQUIRED[args.subcommand]
    if args.subcommand == "simulate" and args.observe_generation is not None:
        required = ("law",)
    for dest in required:
        if getattr(args, dest) is None:
            raise ValidationError(f"--{dest.replace('_', '-')} is required", flag=f"--{dest.replace('_', '-')}")
    return args


def resolved_config(args):
    out = {"schema_version": SCHEMA_VERSION, "subcommand": args.subcommand}
    for key, value in sorted(vars(args).items()):
        if key not in ("subcommand", "config"):
            out[key] = value
    return out


def _emit(text, out=None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _warn(message):
    sys.stderr.write(json.dumps({"warning": message}) + "\n")


def cmd_simulate(args, run_config):
    law = resolve_law(args.law)
    rng = derive_stream(args.seed, 0)
    if args.observe_generation is not None:
        obs = simulate_generation_observation(law, args.observe_generation, rng)
        if args.format == "csv":
            lines = [f"# run_config={json.dumps(run_config, sort_keys=True)}", "individual,offspring"]
            lines += [f"{i + 1},{x}" for i, x in enumerate(obs.x.tolist())]
            return _emit("\n".join(lines) + "\n", args.out)
        return _emit(_dump({"schema_version": SCHEMA_VERSION, "run_config": run_config,
                            "observation": obs.to_dict()}), args.out)
    traj = simulate_trajectory(law, args.n0, args.n, rng)
    if args.format == "csv":
        return _emit(f"# run_config={json.dumps(run_config, sort_keys=True)}\n" + traj.to_csv(), args.out)
    return _emit(_dump({"schema_version": SCHEMA_VERSION, "run_config": run_config,
                        "trajectory": traj.to_dict(), "rejections": traj.rejections}), args.out)


def _require(data, cls, what):
    if not isinstance(data, cls):
        raise ValidationError(f"{what} needs a {cls.__name__} input", flag="--input")


def cmd_stat(args, run_config):
    data = load_data(args.input)
    _require(data, Trajectory if args.kind in ("M", "H") else GenerationObservation, f"statistic {args.kind}")
    if args.kind == "H" and args.v is None:
        raise ValidationError("--v is required for statistic H", flag="--v")
    res = compute_statistic(args.kind, data, args.m, args.v)
    _emit(_dump({"schema_version": SCHEMA_VERSION, "run_config": run_config, **res.to_dict()}))


def cmd_ci(args, run_config):
    method = CI_METHODS[args.method]
    factor = large_dev_factor(args.kappa) if method == "SpaceTypeLargeDev" else critical_value(args.kappa)
    data = load_data(args.input)
    if method in mc.OBSERVATION_METHODS:
        _require(data, GenerationObservation, f"--method {args.method}")
        n_eff = max(data.n, 1)
    else:
        _require(data, Trajectory, f"--method {args.method}")
        n_eff = data.n
    if method == "KnownVariance" and args.v is None:
        raise ValidationError("--v is required for --method known-v", flag="--v")
    if comfort_zone_exceeded(factor, n_eff, args.rho):
        _warn(f"critical value {factor:.4g} exceeds n^(rho/(4+2rho)) for n={n_eff}; "
              "normal calibration may be poor")
    out = {"schema_version": SCHEMA_VERSION, "run_config": run_config}
    if method == "TimeTypeQuadratic":
        coeffs, ci = ci_time_type(data, args.kappa)
        out["coefficients"] = coeffs.to_dict()
    else:
        ci = confidence_interval(method, data, args.kappa, v=args.v)
    out.update(ci.to_dict())
    _emit(_dump(out))


def cmd_pvalue(args, run_config):
    data = load_data(args.input)
    _require(data, Trajectory, "pvalue")
    res = p_value_time_type(data)
    _emit(_dump({"schema_version": SCHEMA_VERSION, "run_config": run_config, **res.to_dict()}))


def cmd_mc(args, run_config):
    method = CI_METHODS[args.method] if args.method else None
    cfg = mc.McConfig(law=args.law, stat=args.stat, n=args.n, n0=args.n0, reps=args.reps,
                      master_seed=args.seed, x_grid=tuple(args.x_grid), kappa=args.kappa, method=method)
    rho = moments(cfg.law).rho
    if args.subcommand == "mc-ratio":
        report = mc.mc_tail_ratio(cfg)
        if any(r["insufficient_tail_count"] for r in report.rows):
            _warn(f"fewer than {mc.MIN_TAIL_COUNT} exceedances at some x; ratios there are noisy")
        limit = cfg.n ** (rho / (4.0 + 2.0 * rho))
        if cfg.x_grid and cfg.x_grid[-1] > limit:
            _warn(f"x grid extends past n^(rho/(4+2rho)) = {limit:.3g}")
    elif args.subcommand == "mc-ks":
        report = mc.mc_ks_distance(cfg)
    else:
        report = mc.mc_coverage(cfg)
    if args.trend and args.subcommand != "mc-coverage":
        report.trend = mc.mc_trend(cfg, args.trend)
    report.run_config = run_config
    text = mc.report_to_csv(report) if args.format == "csv" else mc.report_to_json(report)
    _emit(text, args.out)


COMMANDS = {"simulate": cmd_simulate, "stat": cmd_stat, "ci": cmd_ci, "pvalue": cmd_pvalue,
            **{name: cmd_mc for name in MC_COMMANDS}}


def _fail(exc, code):
    payload = {"error": type(exc).__name__, "flag": getattr(exc, "flag", None), "message": str(exc)}
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if any(a in ("-h", "--help") for a in argv):
            build_parser().parse_args(argv)
        args = parse_args(argv)
        run_config = resolved_config(args)
        COMMANDS[args.subcommand](args, run_config)
    except SystemExit as exc:  # --help
        return exc.code or 0
    except ValidationError as exc:
        return _fail(exc, 2)
    except (GWMDError, OSError) as exc:
        return _fail(exc, 3)
    return 0


if __name__ == "__main__":
    sys.exit(main())

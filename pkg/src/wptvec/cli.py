"""``wptvec`` command line: generate, validate, field-map, maxpower, kmin, campaign, examples.

Exit status is 0 on success, 1 on an internal error and 2 on bad usage or
infeasible input.  ``--json`` switches to machine-readable output where
numbers keep full double precision.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import warnings

import numpy as np

from . import deployment as dep_mod
from .deployment import DeploymentFormatError, FieldSpec, InfeasibleDeploymentError
from .experiments import load_campaign_spec, run_campaign
from .kmin import (ALGORITHMS, DEFAULT_SIGMA, KMinInstance, extension1_level, extension2_level,
                   fractional_counterexample_check, solve)
from .maxpower import UNTIL_CONVERGED, CommunicationRange, iterative_max_power, trace_csv
from .model import PhysicalParams, efield, phasor_matrix, received_power

SEED_ENV = "WPTVEC_SEED"


class UsageError(Exception):
    """Reported with exit status 2."""


def _field(text):
    try:
        w, h = (float(v) for v in text.lower().split("x"))
        return FieldSpec(w, h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH with positive sizes, got {text!r}") from None


def _rounds(text):
    if text == UNTIL_CONVERGED:
        return text
    try:
        value = int(text)
    except ValueError:
        value = -1
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer or {UNTIL_CONVERGED!r}")
    return value


def _range(text):
    try:
        return CommunicationRange.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help=f"random seed (fallback: ${SEED_ENV}, then 0)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--settings", metavar="FILE",
                        help="JSON object of option defaults; command-line flags take precedence")

    p = argparse.ArgumentParser(prog="wptvec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="random valid deployment")
    g.add_argument("--field", type=_field, default=FieldSpec(10.0, 10.0), metavar="WxH")
    g.add_argument("--chargers", type=int, default=15)
    g.add_argument("--nodes", type=int, default=200)
    g.add_argument("--wavelength", type=_positive, default=0.29)
    g.add_argument("--preset", choices=["toy", "counterexample"],
                   help="write a hand-worked instance instead of a random one")
    g.add_argument("--out", metavar="FILE", help="output file (default: stdout)")

    v = sub.add_parser("validate", parents=[common], help="check placement constraints")
    v.add_argument("--deployment", required=True, metavar="FILE")

    fm = sub.add_parser("field-map", parents=[common], help="power on a grid")
    fm.add_argument("--deployment", required=True, metavar="FILE")
    fm.add_argument("--config", metavar="FILE", help="levels as a JSON list or {\"config\": [...]} (default: all on)")
    fm.add_argument("--grid-step", type=float, required=True)
    fm.add_argument("--y-line", type=float, help="sample only the horizontal line y = Y")
    fm.add_argument("--exclusion-radius", type=float,
                    help="mark cells closer than this to a charger (default: the wavelength)")
    fm.add_argument("--out", metavar="FILE", help="CSV output (default: stdout)")
    fm.add_argument("--allow-invalid", action="store_true")

    mp = sub.add_parser("maxpower", parents=[common], help="distributed MAX-POWER search")
    mp.add_argument("--deployment", required=True, metavar="FILE")
    mp.add_argument("--range", type=_range, default=CommunicationRange(), help="'open' or a radius in m")
    mp.add_argument("--rounds", type=_rounds, default=90, help=f"round budget or {UNTIL_CONVERGED!r}")
    mp.add_argument("--schedule", choices=["random", "round-robin"], default="random")
    mp.add_argument("--trace", metavar="CSV", help="write the per-round trace")
    mp.add_argument("--allow-invalid", action="store_true")

    km = sub.add_parser("kmin", parents=[common], help="k-minimum guarantee solvers")
    km.add_argument("--deployment", required=True, metavar="FILE")
    km.add_argument("--k", type=int, required=True)
    km.add_argument("--algo", choices=sorted(ALGORITHMS), default="fus")
    km.add_argument("--sigma", type=int, default=DEFAULT_SIGMA)
    km.add_argument("--allow-invalid", action="store_true")

    c = sub.add_parser("campaign", parents=[common], help="replicated experiment from a JSON spec")
    c.add_argument("--spec", required=True, metavar="FILE")
    c.add_argument("--out-raw", metavar="CSV")
    c.add_argument("--out-aggregate", metavar="CSV")
    c.add_argument("--threads", type=int, default=1, help="parallel worker processes")

    sub.add_parser("examples", parents=[common], help="check the hand-worked examples")
    return p


def _apply_settings(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--settings")
    known, _ = pre.parse_known_args(argv)
    if not known.settings:
        return
    try:
        with open(known.settings) as fh:
            settings = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read settings file: {exc}")
    if not isinstance(settings, dict):
        parser.error("settings file must hold a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subparsers.choices.items():
        scoped = settings.get(name, {})
        flat = {k: v for k, v in settings.items() if not isinstance(v, dict)}
        values = {**flat, **scoped}
        dests = {a.dest: a for a in sp._actions}
        for key, value in values.items():
            key = key.replace("-", "_")
            if key in dests and key != "settings":
                action = dests[key]
                if action.type is not None and isinstance(value, str):
                    value = action.type(value)
                sp.set_defaults(**{key: value})


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def _num(value, machine):
    return float(value) if machine else f"{value:.6f}"


class _Out:
    def __init__(self, args, stream):
        self.machine = args.json
        self.stream = stream
        self.record = {"command": args.command, "seed": args.seed_value}
        if not self.machine:
            print(f"# seed: {args.seed_value}", file=stream)

    def put(self, key, value, text=None):
        self.record[key] = value
        if not self.machine:
            print(text if text is not None else f"{key}: {value}", file=self.stream)

    def close(self):
        if self.machine:
            print(json.dumps(self.record), file=self.stream)


def _load(args):
    try:
        dep = dep_mod.load(args.deployment)
    except FileNotFoundError:
        raise UsageError(f"deployment file not found: {args.deployment}") from None
    except DeploymentFormatError as exc:
        raise UsageError(str(exc)) from None
    params = dep.params()
    if not getattr(args, "allow_invalid", True):
        bad = dep_mod.validate_placement(dep, params)
        if bad:
            raise UsageError(f"{args.deployment}: {len(bad)} placement violations (first: {bad[0]}); "
                             "pass --allow-invalid to evaluate anyway")
    return dep, params


def _cfg_text(x):
    return json.dumps([float(v) if v % 1 else int(v) for v in x])


def cmd_generate(args, out):
    if args.preset:
        dep = dep_mod.toy_superposition() if args.preset == "toy" else dep_mod.toy_counterexample()
    else:
        if args.chargers < 0 or args.nodes < 0:
            raise UsageError("--chargers and --nodes must be non-negative")
        params = PhysicalParams.from_hardware(wavelength=args.wavelength)
        try:
            dep = dep_mod.generate_random(args.field, args.chargers, args.nodes, params, args.seed_value)
        except InfeasibleDeploymentError as exc:
            raise UsageError(f"infeasible deployment: {exc}") from None
    text = dep_mod.dumps(dep)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        out.put("out", args.out)
    else:
        out.put("deployment", dep_mod.to_dict(dep), text.rstrip("\n"))
    out.put("chargers", dep.m)
    out.put("nodes", dep.n)
    return 0


def cmd_validate(args, out):
    dep, params = _load(args)
    bad = dep_mod.validate_placement(dep, params)
    out.put("violations", [str(v) for v in bad],
            "valid" if not bad else "\n".join(["violations:"] + [f"  {v}" for v in bad]))
    return 0 if not bad else 2


def cmd_field_map(args, out):
    if not args.grid_step > 0:
        raise UsageError("--grid-step must be positive")
    dep, params = _load(args)
    x = (np.ones(dep.m) if args.config is None
         else _wrap_format(lambda: dep_mod.load_config(args.config, dep.m)))
    f = dep.field
    xs = np.arange(f.x0, f.x0 + f.width + 0.5 * args.grid_step, args.grid_step)
    ys = (np.array([args.y_line]) if args.y_line is not None
          else np.arange(f.y0, f.y0 + f.height + 0.5 * args.grid_step, args.grid_step))
    pts = np.array([(a, b) for b in ys for a in xs])
    radius = params.wavelength if args.exclusion_radius is None else args.exclusion_radius
    if dep.m:
        d = np.hypot(dep.chargers[:, None, 0] - pts[None, :, 0], dep.chargers[:, None, 1] - pts[None, :, 1])
        excluded = (d < radius).any(axis=0) | (d == 0).any(axis=0)
        power = np.zeros(len(pts))
        ok = ~excluded
        if ok.any():
            power[ok] = params.gamma * np.abs(x @ phasor_matrix(dep.chargers, pts[ok], params)) ** 2
    else:
        excluded = np.zeros(len(pts), bool)
        power = np.zeros(len(pts))
    buf = io.StringIO()
    buf.write("x,y,power_W\n")
    for (a, b), bad, pw in zip(pts, excluded, power):
        buf.write(f"{float(a)!r},{float(b)!r},{'NA' if bad else repr(float(pw))}\n")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
        out.put("out", args.out)
    else:
        out.put("grid", buf.getvalue(), buf.getvalue().rstrip("\n"))
    out.put("cells", int(len(pts)))
    out.put("excluded_cells", int(excluded.sum()))
    return 0


def _wrap_format(fn):
    try:
        return fn()
    except FileNotFoundError as exc:
        raise UsageError(f"file not found: {exc.filename}") from None
    except DeploymentFormatError as exc:
        raise UsageError(str(exc)) from None


def cmd_maxpower(args, out):
    dep, params = _load(args)
    if dep.m < 1:
        raise UsageError("the deployment has no chargers")
    if args.rounds == UNTIL_CONVERGED and not args.range.is_open:
        raise UsageError("--rounds until-converged requires --range open")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = iterative_max_power(dep, params, args.range, args.rounds, args.seed_value, args.schedule)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            fh.write(trace_csv(res))
    out.put("range", str(args.range))
    out.put("rounds", res.rounds)
    out.put("initial_config", [int(v) for v in res.initial_config],
            f"initial_config: {_cfg_text(res.initial_config)}")
    out.put("config", [int(v) for v in res.config], f"config: {_cfg_text(res.config)}")
    out.put("total_power_W", _num(res.final_power, True), f"total_power_W: {_num(res.final_power, False)}")
    out.put("messages", res.total_messages)
    out.put("converged", res.converged, f"converged: {str(res.converged).lower()}")
    return 0


def cmd_kmin(args, out):
    dep, params = _load(args)
    if not 1 <= args.k <= dep.n:
        raise UsageError(f"--k must be between 1 and n={dep.n}")
    if args.sigma < 1:
        raise UsageError("--sigma must be at least 1")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = solve(args.algo, KMinInstance(dep, params, args.k), args.seed_value, args.sigma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    rec = res.to_dict()
    if out.machine:
        out.record.update({k: v for k, v in rec.items() if k != "seed"})
    else:
        print(f"objective_W: {res.objective:.6f}", file=out.stream)
        print(json.dumps(rec), file=out.stream)
    return 0


def cmd_campaign(args, out):
    try:
        spec = load_campaign_spec(args.spec)
    except FileNotFoundError:
        raise UsageError(f"campaign spec not found: {args.spec}") from None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{args.spec}: {exc}") from None
    if args.seed is not None or os.environ.get(SEED_ENV):
        spec.base_seed = args.seed_value
    out.record["seed"] = spec.base_seed
    res = run_campaign(spec, workers=max(1, args.threads))
    if args.out_raw:
        with open(args.out_raw, "w") as fh:
            fh.write(res.raw_csv())
    if args.out_aggregate:
        with open(args.out_aggregate, "w") as fh:
            fh.write(res.aggregate_csv())
    out.put("failed", res.failed)
    summary = {}
    for value, agg in res.summary("cumulative_power").items():
        summary[value] = {"mean": agg.mean, "ci95_half_width": agg.half_width, "reps": agg.reps}
    lines = [f"{'sweep_value':>12}  {'mean_W':>14}  {'ci95':>12}"]
    lines += [f"{v:>12}  {s['mean']:14.6f}  {s['ci95_half_width']:12.6f}" for v, s in summary.items()]
    out.put("cumulative_power", summary, "\n".join(lines))
    if not out.machine:
        print(f"# base seed: {spec.base_seed}", file=out.stream)
    return 0


def golden_examples():
    """(name, computed, expected, tolerance) for every hand-worked example."""
    unit = PhysicalParams.unit()
    toy = dep_mod.toy_superposition()
    ce = dep_mod.toy_counterexample()
    rep = fractional_counterexample_check()
    e1 = efield([0, 0], 1, [1.25, 0], unit)
    e2 = efield([2, 0], 1, [1.25, 0], unit)
    imp = iterative_max_power(toy, unit, seed=0)
    return [
        ("single charger at distance 1", received_power(toy, [1, 0], [1, 0], unit), 1.0, 1e-12),
        ("superadditive: both on at (1,0)", received_power(toy, [1, 1], [1, 0], unit), 4.0, 1e-12),
        ("cancellation: both on at (5/4,0)", received_power(toy, [1, 1], [1.25, 0], unit), (8 / 15) ** 2, 1e-12),
        ("cancellation field of C1 (v)", e1[1], 0.8, 1e-12),
        ("cancellation field of C2 (v)", e2[1], -4 / 3, 1e-12),
        ("counter-example: C1 alone at R1", received_power(ce, [1, 0], [-0.75, 0], unit), (4 / 3) ** 2, 1e-9),
        ("counter-example: C1 alone at R2", received_power(ce, [1, 0], [3.25, 0], unit), (4 / 13) ** 2, 1e-9),
        ("counter-example: C2 alone at R1", received_power(ce, [0, 1], [-0.75, 0], unit), (4 / 19) ** 2, 1e-9),
        ("counter-example: both on at R1", received_power(ce, [1, 1], [-0.75, 0], unit), (4 / 3 + 4 / 19) ** 2, 1e-9),
        ("counter-example: both on at R2", received_power(ce, [1, 1], [3.25, 0], unit), (40 / 39) ** 2, 1e-9),
        ("counter-example: fractional margin > 0", rep.margin, None, 0.0),
        ("IterativeMaxPower on toy: total power", imp.final_power, 4 + (8 / 15) ** 2, 1e-9),
        ("extension 1 level for gains 10/5", extension1_level(10, 5), 2 / 3, 1e-12),
        ("extension 2 level for 10 of 30", extension2_level(10, 30), 1 / 3, 1e-12),
    ]


def cmd_examples(args, out):
    results = []
    all_ok = True
    for name, value, expected, tol in golden_examples():
        ok = value > 0 if expected is None else abs(value - expected) <= tol * max(1.0, abs(expected))
        all_ok &= bool(ok)
        results.append({"name": name, "value": float(value), "expected": expected, "pass": bool(ok)})
        exp = "> 0" if expected is None else f"{expected:.6f}"
        if not out.machine:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.6f} (expected {exp})", file=out.stream)
    out.record["examples"] = results
    out.put("all_pass", all_ok, f"{'all examples pass' if all_ok else 'some examples FAILED'}")
    return 0 if all_ok else 2


COMMANDS = {
    "generate": cmd_generate, "validate": cmd_validate, "field-map": cmd_field_map,
    "maxpower": cmd_maxpower, "kmin": cmd_kmin, "campaign": cmd_campaign, "examples": cmd_examples,
}


def main(argv=None, stdout=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        _apply_settings(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        args.seed_value = _seed(args)
        out = _Out(args, stdout)
        code = COMMANDS[args.command](args, out)
        out.close()
        return code
    except UsageError as exc:
        print(f"wptvec {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report, exit 1
        print(f"wptvec {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

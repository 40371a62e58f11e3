"""Command-line front end: ``minkolab {epr,twin,dynamics} ...``.

Numbers are written with 12 significant digits and nothing time-dependent is
emitted, so a fixed invocation reproduces its output byte for byte.  Relative
output paths land in ``$MINKOLAB_OUTPUT_DIR`` when that is set.

Exit codes: 0 success, 2 usage error, 3 unreadable configuration,
4 physics abort (collision or field singularity), 5 insufficient history.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

from . import aging, epr
from .errors import ConfigError, DomainError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_PHYSICS = 4
EXIT_HISTORY = 5

OUTPUT_DIR_ENV = "MINKOLAB_OUTPUT_DIR"
SPEED_OF_LIGHT = 299_792_458.0


def fmt(value) -> str:
    return f"{float(value):.12g}"


def resolve_output(path) -> Path:
    path = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(text: str, output):
    if output is None:
        sys.stdout.write(text)
    else:
        resolve_output(output).write_text(text)


def _render(sections, form: str) -> str:
    """Sections are (name, header, rows).  CSV stacks the tables with a blank line
    between them; JSON maps each name to a list of records."""
    if form == "json":
        return json.dumps({name: [dict(zip(header, r)) for r in rows]
                           for name, header, rows in sections}, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for i, (_, header, rows) in enumerate(sections):
        if i:
            buf.write("\n")
        writer.writerow(header)
        writer.writerows(rows)
    return buf.getvalue()


def _angles(text: str):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"angles must be comma-separated numbers, got {text!r}")
    if len(values) != 4 or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError("--angles takes four finite values: a,a',b,b'")
    return values


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minkolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("epr", help="coincidence rates and CHSH for the local pair model")
    p.add_argument("--theta1", type=_finite, default=0.0, help="station 1 polarizer angle")
    p.add_argument("--theta2", type=_finite, default=0.0, help="station 2 polarizer angle")
    p.add_argument("--radians", action="store_true", help="angles are in radians, not degrees")
    p.add_argument("--estimator", choices=epr.ESTIMATORS, default="amplitude")
    p.add_argument("--mode", choices=epr.MODES, default="exact")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--chunks", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chsh", action="store_true", help="report the CHSH value instead")
    p.add_argument("--angles", type=_angles, default=[0.0, 45.0, 22.5, 67.5],
                   help="CHSH settings a,a',b,b'")
    p.add_argument("--decomposition", action="store_true",
                   help="also audit the per-emission Bayes chain")
    p.add_argument("--output", help="write here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(subparser=p)

    p = sub.add_parser("twin", help="twin-trip constructions and chart data")
    p.add_argument("--distance", type=_finite, default=3.0, help="pylon distance D")
    p.add_argument("--beta", type=_finite, default=0.6, help="cruise speed over c")
    p.add_argument("--length-scale", type=_finite, default=None,
                   help="metres per chart length unit; adds ages in seconds")
    p.add_argument("--chart", help="write chart polylines (JSON) to this file")
    p.add_argument("--resolution", type=int, default=64, help="points per chart curve")
    p.add_argument("--output", help="write here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(subparser=p)

    p = sub.add_parser("dynamics", help="integrate retarded two-body electrodynamics")
    p.add_argument("config", help="JSON run configuration")
    p.add_argument("--trajectories", default="trajectories.csv")
    p.add_argument("--summary", default="summary.json")
    p.set_defaults(subparser=p)
    return parser


def run_epr(args, parser) -> int:
    to_rad = (lambda v: v) if args.radians else math.radians
    if args.mode == "sampled" and args.trials < 1:
        parser.error("--trials must be at least 1")
    if args.mode == "sampled" and not 1 <= args.chunks <= args.trials:
        parser.error("--chunks must lie in [1, trials]")
    if args.chsh:
        a, ap, b, bp = (to_rad(v) for v in args.angles)
        header = ["a", "a_prime", "b", "b_prime", "mode", "trials", "S", "classical_bound"]
        shown = [fmt(v) for v in args.angles]
        rows = [shown + ["analytic", "0", fmt(epr.chsh(a, ap, b, bp)), "2"]]
        if args.mode == "sampled":
            s = epr.chsh_sampled(a, ap, b, bp, args.trials, args.seed)
            rows.append(shown + ["sampled", str(args.trials), fmt(s), "2"])
        _emit(_render([("chsh", header, rows)], args.format), args.output)
        return EXIT_OK

    t1, t2 = to_rad(args.theta1), to_rad(args.theta2)
    est = epr.estimate_coincidence(t1, t2, args.estimator, args.mode, args.trials, args.seed,
                                   args.chunks)
    analytic = float(epr.coincidence_analytic(t1, t2))
    unit = "rad" if args.radians else "deg"
    header = [f"theta1_{unit}", f"theta2_{unit}", "estimator", "trials", "value", "stderr",
              "analytic", "deviation"]
    rows = [[fmt(args.theta1), fmt(args.theta2), est.estimator, str(est.trials), fmt(est.value),
             fmt(est.standard_error), fmt(analytic), fmt(abs(est.value - analytic))]]
    sections = [("coincidence", header, rows)]
    if args.decomposition:
        rep = epr.bayes_decomposition(t1, t2)
        sections.append((
            "decomposition",
            ["n", "p_lambda", "p_a_given_lambda", "p_b_given_lambda", "p_b_given_a_lambda"],
            [[str(n), fmt(rep.p_lambda[n]), fmt(rep.p_a_given_lambda[n]),
              fmt(rep.p_b_given_lambda[n]), fmt(rep.p_b_given_a_lambda[n])] for n in (0, 1)]))
        sections.append(("decomposition_summary",
                         ["marginal", "factorization_holds", "deviation_from_sin2_law"],
                         [[fmt(rep.marginal), str(rep.factorization_holds).lower(),
                           fmt(rep.deviation_from_sin2_law)]]))
    _emit(_render(sections, args.format), args.output)
    return EXIT_OK


def run_twin(args, parser) -> int:
    if not args.distance > 0:
        parser.error("--distance must be positive")
    if not 0.0 < args.beta < 1.0:
        parser.error("--beta must satisfy 0 < beta < 1")
    if args.length_scale is not None and not args.length_scale > 0:
        parser.error("--length-scale must be positive")
    if args.resolution < 2:
        parser.error("--resolution must be at least 2")
    scenario = aging.TwinScenario(args.distance, args.beta)
    header = ["construction", "D", "beta", "turnaround_x", "turnaround_t", "tau_traveler",
              "tau_home"]
    if args.length_scale is not None:
        header += ["tau_traveler_seconds", "tau_home_seconds"]
    rows = []
    for report in (aging.chart_conventional(scenario), aging.chart_displaced_pylon(scenario)):
        ev = report.turnaround_event
        row = [report.construction, fmt(args.distance), fmt(args.beta), fmt(ev[1]), fmt(ev[0]),
               fmt(report.tau_traveler_one_way), fmt(report.tau_home_one_way)]
        if args.length_scale is not None:
            per_unit = args.length_scale / SPEED_OF_LIGHT
            row += [fmt(report.tau_traveler_one_way * per_unit),
                    fmt(report.tau_home_one_way * per_unit)]
        rows.append(row)
    _emit(_render([("twin", header, rows)], args.format), args.output)
    if args.chart:
        chart = aging.emit_chart(scenario, args.resolution)
        resolve_output(args.chart).write_text(chart.to_json() + "\n")
    return EXIT_OK


def run_dynamics(args, parser) -> int:
    from .electrodynamics.integrator import SystemState, check_initial_data, integrate
    from .electrodynamics.io import load_config, write_trajectories

    try:
        particles, config = load_config(args.config)
    except ConfigError as exc:
        print(f"minkolab dynamics: {exc}", file=sys.stderr)
        return EXIT_PARSE
    state = SystemState(particles, config)
    report = check_initial_data(state)
    if not report.valid:
        print(f"minkolab dynamics: insufficient history: {report.message}", file=sys.stderr)
        _write_summary(args.summary, "insufficient_history", report.message, {}, report)
        return EXIT_HISTORY
    result = integrate(state)
    write_trajectories(resolve_output(args.trajectories), result, state.tau_start)
    diag = result.diagnostics.summary()
    _write_summary(args.summary, result.status, result.message, diag, report)
    print(f"status: {result.status}")
    for key, value in diag.items():
        print(f"{key}: {fmt(value) if isinstance(value, float) else value}")
    if result.status in ("collision", "singularity"):
        print(f"minkolab dynamics: {result.message}", file=sys.stderr)
        return EXIT_PHYSICS
    if result.status == "insufficient_history":
        print(f"minkolab dynamics: {result.message}", file=sys.stderr)
        return EXIT_HISTORY
    if result.status != "ok":
        print(f"minkolab dynamics: {result.message}", file=sys.stderr)
        return EXIT_PHYSICS
    return EXIT_OK


def _write_summary(path, status, message, diag, report):
    clean = {k: (fmt(v) if isinstance(v, float) else v) for k, v in diag.items()}
    pairs = [{k: (fmt(v) if isinstance(v, float) else v) for k, v in p.items()}
             for p in report.pairs]
    body = {"status": status, "message": message, "diagnostics": clean, "initial_data": pairs}
    resolve_output(path).write_text(json.dumps(body, indent=1) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"epr": run_epr, "twin": run_twin, "dynamics": run_dynamics}[args.command]
    try:
        return handler(args, args.subparser)
    except DomainError as exc:
        print(f"minkolab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

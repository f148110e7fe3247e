"""Command-line surface: instance generation, solving with certification,
and experiment grids.

Exit codes
----------
gen:        0 success, 1 I/O failure, 2 invalid flags
solve:      0 certified-unique, 3 converged but not certified-unique,
            4 not converged, 1 I/O failure, 2 malformed instance file
experiment: 0 success, 1 I/O failure, 2 bad config
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from . import experiments, formats
from .certify import VERDICT_CERTIFIED_UNIQUE, check_global_optimality
from .errors import GoppError, MalformedInstanceFile
from .metrics import error_report
from .model import SignalSpec, generate, sigma_from_eta
from .solver import SolveOptions, solve, spectral_init

EXIT_OK = 0
EXIT_IO = 1
EXIT_BAD_INPUT = 2
EXIT_UNCERTIFIED = 3
EXIT_NOT_CONVERGED = 4


def _tool_version() -> str:
    try:
        return version("gopp")
    except PackageNotFoundError:
        return "unknown"


def _fail(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


def cmd_gen(args) -> int:
    try:
        spec = SignalSpec(
            n=args.n, m=args.m, d=args.d, kappa=args.kappa,
            seed=args.seed, planted=args.planted,
        )
    except GoppError as exc:
        return _fail(EXIT_BAD_INPUT, f"invalid flags: {exc}")
    try:
        sigma = args.sigma if args.sigma is not None else sigma_from_eta(
            args.eta, args.n, args.m, args.d
        )
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
    except ValueError as exc:
        return _fail(EXIT_BAD_INPUT, f"invalid flags: {exc}")
    instance = generate(spec, sigma)
    try:
        formats.save_instance(instance, args.out)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write {args.out}: {exc}")
    print(f"wrote {args.out} (sigma={formats.render_float(sigma)})")
    return EXIT_OK


def cmd_solve(args) -> int:
    timings = {}
    t0 = time.perf_counter()
    try:
        instance = formats.load_instance(args.input)
    except MalformedInstanceFile as exc:
        return _fail(EXIT_BAD_INPUT, f"malformed instance file: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.input}: {exc}")
    timings["load_s"] = time.perf_counter() - t0

    spec = instance.spec
    opts = SolveOptions(
        max_iters=args.max_iters, stop_tol=args.tol,
        trace=args.trace_path is not None,
    )
    t1 = time.perf_counter()
    try:
        s0 = spectral_init(instance.D, spec.n, spec.d)
        report = solve(instance.C, spec.n, spec.d, s0, opts)
    except GoppError as exc:
        return _fail(EXIT_NOT_CONVERGED, f"solver failed: {exc}")
    timings["solve_s"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    certificate = check_global_optimality(instance.C, report.S_final)
    timings["certify_s"] = time.perf_counter() - t2
    errors = error_report(report.S_final, instance)
    timings["total_s"] = time.perf_counter() - t0

    payload = formats.run_report(instance, report, certificate, errors, timings)
    rendered = json.dumps(payload, indent=2) + "\n"
    try:
        if args.out:
            Path(args.out).write_text(rendered, encoding="utf-8")
        else:
            sys.stdout.write(rendered)
        if args.trace_path:
            from .linalg import df_distance

            final = report.S_final
            trace = experiments.TraceRecord(
                iterations=list(range(len(report.iterates))),
                step_residuals=report.step_residuals + [float("nan")],
                distances_to_final=[
                    df_distance(s, final) for s in report.iterates
                ],
                objectives=report.objectives,
                fitted_ratio=float("nan"),
            )
            Path(args.trace_path).write_text(formats.trace_csv(trace), encoding="utf-8")
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write output: {exc}")

    if not report.converged:
        return EXIT_NOT_CONVERGED
    if certificate.verdict != VERDICT_CERTIFIED_UNIQUE:
        return EXIT_UNCERTIFIED
    return EXIT_OK


def _load_grid_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {
        "dims", "etas", "kappas", "trials", "base_seed", "parallelism",
        "planted", "max_iters", "stop_tol", "sigma_axis", "axis_kind",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "dims" not in raw:
        raise ValueError("config needs 'dims': a list of [n, m, d]")
    extras = {
        "sigma_axis": raw.pop("sigma_axis", None),
        "axis_kind": raw.pop("axis_kind", "sigma"),
    }
    config = experiments.GridConfig(**raw)
    return config, extras


def cmd_experiment(args) -> int:
    try:
        config, extras = _load_grid_config(args.config)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        return _fail(EXIT_BAD_INPUT, f"bad config: {exc}")

    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot create {out_dir}: {exc}")

    sink: list = []
    interrupted = False
    result = None
    try:
        if args.kind == "tightness":
            result = experiments.run_tightness_curve(config, sink=sink)
        elif args.kind == "phase":
            if not extras["sigma_axis"]:
                return _fail(EXIT_BAD_INPUT, "bad config: phase grids need 'sigma_axis'")
            result = experiments.run_phase_grid(
                config, extras["sigma_axis"], axis_kind=extras["axis_kind"], sink=sink
            )
        elif args.kind == "kappa":
            try:
                result = experiments.run_kappa_sweep(config, sink=sink)
            except ValueError as exc:
                return _fail(EXIT_BAD_INPUT, f"bad config: {exc}")
        elif args.kind == "trace":
            return _run_trace_experiment(config, out_dir)
    except KeyboardInterrupt:
        interrupted = True
        result = experiments.GridResult(cells=list(sink))

    (out_dir / "result.csv").write_text(formats.grid_csv(result), encoding="utf-8")
    (out_dir / "result.json").write_text(formats.grid_json(result), encoding="utf-8")
    provenance = {
        "schema_version": formats.SCHEMA_VERSION,
        "tool_version": _tool_version(),
        "kind": args.kind,
        "config": json.loads(Path(args.config).read_text(encoding="utf-8")),
        "total_trials": len(result.cells) * config.trials,
        "interrupted": interrupted,
    }
    (out_dir / "provenance.json").write_text(
        json.dumps(provenance, indent=2) + "\n", encoding="utf-8"
    )
    if interrupted:
        return _fail(EXIT_IO, "interrupted: partial results flushed")
    print(f"wrote {out_dir}/result.csv ({len(result.cells)} cells)")
    return EXIT_OK


def _run_trace_experiment(config, out_dir) -> int:
    if len(config.dims) != 1 or len(config.etas) != 1:
        return _fail(
            EXIT_BAD_INPUT,
            "bad config: trace runs need exactly one dims entry and one eta",
        )
    n, m, d = config.dims[0]
    spec = SignalSpec(
        n=n, m=m, d=d, kappa=config.kappas[0], seed=config.base_seed,
        planted=config.planted,
    )
    instance = generate(spec, sigma_from_eta(config.etas[0], n, m, d))
    opts = SolveOptions(max_iters=config.max_iters, stop_tol=config.stop_tol, trace=True)
    try:
        trace = experiments.run_convergence_trace(instance, opts)
    except GoppError as exc:
        return _fail(EXIT_NOT_CONVERGED, f"trace failed: {exc}")
    (out_dir / "trace.csv").write_text(formats.trace_csv(trace), encoding="utf-8")
    print(f"wrote {out_dir}/trace.csv (fitted ratio {trace.fitted_ratio:.4f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gopp",
        description="Align point clouds by orthogonal transforms, certify "
        "global optimality, and reproduce phase-transition experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic instance file")
    gen.add_argument("-n", type=int, required=True, help="number of clouds")
    gen.add_argument("-m", type=int, required=True, help="points per cloud")
    gen.add_argument("-d", type=int, required=True, help="ambient dimension")
    gen.add_argument("--kappa", type=float, default=1.0, help="condition number of the cloud")
    noise = gen.add_mutually_exclusive_group(required=True)
    noise.add_argument("--eta", type=float, help="rescaled noise level")
    noise.add_argument("--sigma", type=float, help="absolute noise level")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--planted", choices=("identity", "random-orthogonal"),
                     default="identity")
    gen.add_argument("out", help="output instance file")
    gen.set_defaults(func=cmd_gen)

    slv = sub.add_parser("solve", help="solve and certify an instance file")
    slv.add_argument("input", help="instance file (v1 format)")
    slv.add_argument("--tol", type=float, default=1e-10, help="stop tolerance")
    slv.add_argument("--max-iters", type=int, default=1000)
    slv.add_argument("--trace-path", help="also write the iterate trace CSV here")
    slv.add_argument("--out", help="write the JSON report here instead of stdout")
    slv.set_defaults(func=cmd_solve)

    exp = sub.add_parser("experiment", help="run a Monte-Carlo grid")
    exp.add_argument("kind", choices=("tightness", "phase", "kappa", "trace"))
    exp.add_argument("config", help="JSON grid config")
    exp.add_argument("out_dir", help="directory for CSV/JSON artifacts")
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

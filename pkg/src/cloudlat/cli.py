"""Command-line interface: measure, simulate, fit, predict, heatmap, report.

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 fit failure,
4 campaign in which every probe failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from cloudlat import analysis, fitting, probe, records, synth
from cloudlat.geodesy import KNOWN_CITIES
from cloudlat.model import DEFAULT_B_DS, ModelParams, PathSpec, predict

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_FIT, EXIT_ALL_FAILED = 0, 1, 2, 3, 4
FORMAT_VERSION = 1
PARAM_FIELDS = ("b_ds", "b_c", "s_lan", "s_sub", "rho", "c0")

log = logging.getLogger("cloudlat")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _finite_or_none(x):
    return x if isinstance(x, (int, float)) and math.isfinite(x) else None


def _write_json(doc, destination):
    records.ensure_parent(destination)
    with open(destination, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def params_document(result: fitting.FitResult) -> dict:
    p = result.params
    return {
        "format_version": FORMAT_VERSION,
        "s_lan": _finite_or_none(p.s_lan),
        "s_sub": _finite_or_none(p.s_sub),
        "rho": p.rho,
        "c0": p.c0,
        "b_ds": _finite_or_none(p.b_ds),
        "b_c": _finite_or_none(p.b_c),
        "rmse": result.rmse,
        "r2": result.r2,
        "n_records": result.n_records,
        "rank_deficient": result.rank_deficient,
        "notes": list(result.notes),
    }


def load_params(source) -> ModelParams:
    """Read model parameters; a null speed or bandwidth means infinite."""
    with open(source, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except ValueError as exc:
            raise records.FormatError(f"invalid JSON: {exc}", source) from exc
    if not isinstance(doc, dict):
        raise records.FormatError("parameters document must be an object", source)
    kwargs = {}
    for name in PARAM_FIELDS:
        if name not in doc:
            raise records.FormatError(f"missing field {name!r}", source)
        value = doc[name]
        if value is None and name not in ("rho", "c0"):
            value = math.inf
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise records.FormatError(f"field {name!r} must be a number", source)
        kwargs[name] = float(value)
    try:
        return ModelParams(**kwargs)
    except ValueError as exc:
        raise records.FormatError(str(exc), source) from exc


def _resolve_reference(name, regions):
    for r in regions:
        if r.city.name == name:
            return r.city
    if name in KNOWN_CITIES:
        return KNOWN_CITIES[name]
    raise UsageError(f"unknown reference city {name!r}")


def cmd_measure(args):
    regions = records.load_regions(args.regions)
    if args.client_id not in {r.id for r in regions}:
        raise UsageError(f"client id {args.client_id!r} not in regions file")
    servers = [r for r in regions if r.endpoint_url and r.id != args.client_id]
    try:
        config = probe.ProbeConfig(args.reps, args.warmup, args.timeout, args.max_retries,
                                   args.parallelism)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    recs = probe.run_campaign(args.client_id, servers, config)
    records.ensure_parent(args.out)
    records.persist_records(recs, args.out, append=True)
    for rec in recs:
        log.info("%s -> %s: %s %s", rec.client_id, rec.server_id, rec.status,
                 records.summarize(rec.samples_ms).median_ms if rec.samples_ms else "-")
    if recs and all(r.status == "failed" for r in recs):
        print("every probe failed", file=sys.stderr)
        return EXIT_ALL_FAILED
    return EXIT_OK


def cmd_simulate(args):
    truth = load_params(args.truth)
    scenarios = synth.load_scenarios(args.scenarios)
    sigma = args.noise_sigma
    try:
        noise = synth.NoiseSpec("multiplicative-lognormal" if sigma > 0 else "none", sigma, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    recs = synth.generate(truth, scenarios, noise, samples=args.samples)
    records.ensure_parent(args.out)
    records.persist_records(recs, args.out, append=False)
    _write_json({
        "format_version": FORMAT_VERSION,
        "generator": synth.RNG_ALGORITHM,
        "seed": noise.seed,
        "noise_kind": noise.kind,
        "sigma": noise.sigma,
        "samples": args.samples,
    }, f"{args.out}.meta.json")
    return EXIT_OK


def cmd_fit(args):
    options = fitting.FitOptions(fit_core=args.fit_core)
    if args.fit_core:
        known = ModelParams(b_ds=args.b_ds, b_c=args.b_c or 1.0)
    elif args.b_c is None:
        raise UsageError("--b-c is required unless --fit-core is given")
    else:
        known = ModelParams(b_ds=args.b_ds, b_c=args.b_c)
    recs = records.load_records(args.measurements)
    paths = records.load_paths(args.paths)
    rows = fitting.build_design_matrix(recs, paths, options, known)
    try:
        result = fitting.fit(rows, options, known)
    except fitting.FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    if rows.rejected:
        result.notes.append(f"{rows.rejected} records rejected (failed or non-positive latency)")
    _write_json(params_document(result), args.out)
    if result.rank_deficient:
        print("warning: rank-deficient fit; " + "; ".join(result.notes), file=sys.stderr)
    return EXIT_OK


def cmd_predict(args):
    params = load_params(args.params)
    try:
        path = PathSpec(args.i_lan, args.i_sub, args.n_relays)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.bytes < 0:
        raise UsageError("--bytes must be >= 0")
    print(f"{predict(args.bytes, path, params) * 1000.0:.3f}")
    return EXIT_OK


def _matrix(args):
    regions = records.load_regions(args.regions)
    reference = _resolve_reference(args.ref, regions)
    recs = records.load_records(args.measurements)
    return analysis.build_matrix(recs, regions, reference, args.agg), regions


def cmd_heatmap(args):
    matrix, _ = _matrix(args)
    records.ensure_parent(args.csv)
    analysis.emit_heatmap_csv(matrix, args.csv)
    if not matrix.present() and (args.svg or args.png):
        print("no ok measurements to draw", file=sys.stderr)
        return EXIT_IO
    if args.svg:
        records.ensure_parent(args.svg)
        analysis.emit_heatmap_svg(matrix, args.svg, args.scale)
    if args.png:
        from cloudlat.plotting import save_heatmap_png

        records.ensure_parent(args.png)
        save_heatmap_png(matrix, args.png, args.scale)
    return EXIT_OK


def cmd_report(args):
    matrix, regions = _matrix(args)
    if args.asymmetry:
        entries = analysis.asymmetry_report(matrix)
        doc = {"format_version": FORMAT_VERSION, "kind": "asymmetry",
               "entries": [e.to_dict() for e in entries]}
    else:
        if not args.continent:
            raise UsageError("--linearity needs --continent")
        points = analysis.continent_points(matrix, regions, args.continent)
        try:
            report = analysis.linearity_report(points)
        except analysis.DegenerateInputError as exc:
            print(f"linear fit failed: {exc}", file=sys.stderr)
            return EXIT_FIT
        doc = {"format_version": FORMAT_VERSION, "kind": "linearity",
               "continent": args.continent, **report.to_dict()}
        if args.figure:
            from cloudlat.plotting import save_linearity_png

            records.ensure_parent(args.figure)
            save_linearity_png(points, report, args.figure, title=args.continent)
    _write_json(doc, args.out)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="cloudlat", description="Cloud outbound latency toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("measure", help="probe every server endpoint from one client")
    p.add_argument("--regions", required=True)
    p.add_argument("--client-id", required=True)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("simulate", help="generate synthetic measurements from known parameters")
    p.add_argument("--truth", required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit model parameters to measurements")
    p.add_argument("--measurements", required=True)
    p.add_argument("--paths", required=True)
    p.add_argument("--b-ds", type=float, default=DEFAULT_B_DS)
    p.add_argument("--b-c", type=float)
    p.add_argument("--fit-core", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="print predicted latency in ms")
    p.add_argument("--params", required=True)
    p.add_argument("--bytes", type=int, required=True)
    p.add_argument("--i-lan", type=float, required=True)
    p.add_argument("--i-sub", type=float, required=True)
    p.add_argument("--n-relays", type=int, required=True)
    p.set_defaults(func=cmd_predict)

    for name, func, help_ in (("heatmap", cmd_heatmap, "write the distance-sorted latency matrix"),
                              ("report", cmd_report, "asymmetry or linearity report")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--measurements", required=True)
        p.add_argument("--regions", required=True)
        p.add_argument("--ref", default="Ashburn")
        p.add_argument("--agg", choices=sorted(analysis.AGGREGATORS), default="median")
        p.set_defaults(func=func)
        if name == "heatmap":
            p.add_argument("--scale", choices=analysis.SCALES, default="log")
            p.add_argument("--csv", required=True)
            p.add_argument("--svg")
            p.add_argument("--png")
        else:
            kind = p.add_mutually_exclusive_group(required=True)
            kind.add_argument("--asymmetry", action="store_true")
            kind.add_argument("--linearity", action="store_true")
            p.add_argument("--continent")
            p.add_argument("--figure", help="PNG scatter for --linearity")
            p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""lne-lab: command-line front end.

Examples:
  lne-lab sweep --fixture counterexample_z2
  lne-lab link --fixture two_halflines_90 --r 0.5
  lne-lab parse --set myset.json --rho rho.json
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import export
from .criterion import cross_validate, run_criterion
from .fixtures import list_fixtures, load_fixture
from .link import extract_link, link_lne_constant, separation_ratio
from .maps import descend_flow, transport_distortion
from .metric import lne_constant
from .radius import RadiusFunction, load_radius, radius_to_document
from .sampler import attach_apex, build_graph, sample_set
from .semialgebraic import load_set, set_to_document


class InputError(Exception):
    """Bad arguments or documents; exit status 2."""


def _add_common(p: argparse.ArgumentParser, sweep=False):
    src = p.add_argument_group("input")
    src.add_argument("--fixture", help="name of a shipped fixture (see 'lne-lab fixtures')")
    src.add_argument("--variant", help="fixture variant, e.g. an exponent of parusinski_t")
    src.add_argument("--set", dest="set_path", help="set-definition JSON document")
    src.add_argument("--rho", dest="rho_path", help="radius-function JSON document (default: Euclidean norm)")
    p.add_argument("--r0", type=float, default=0.4, help="largest radius / germ scale (default 0.4)")
    p.add_argument("--h-rel", type=float, default=0.02, help="sampling length relative to r (default 0.02)")
    p.add_argument("--landmarks", type=int, default=256, help="Dijkstra sources per estimate (default 256)")
    p.add_argument("--eta-rel", type=float, default=0.1, help="pair cutoff relative to r (default 0.1)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dir", default="lne-out", help="directory for artifacts (default lne-out)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads (default: machine parallelism)")
    p.add_argument("--require-lipschitz-rho", action="store_true",
                   help="refuse radius functions not declared Lipschitz")
    if sweep:
        p.add_argument("--steps", type=int, default=4, help="radii r0*2^-k for k = 0..steps (default 4)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lne-lab", description="Numerical LNE tests for semialgebraic germs.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("parse", help="parse and normalise set/radius documents")
    _add_common(p)

    p = sub.add_parser("sample", help="sample the set on the annulus r0/8 <= |x| <= r0")
    _add_common(p)

    p = sub.add_parser("lne", help="estimate the LNE constant on the germ annulus at scale r0")
    _add_common(p)

    p = sub.add_parser("link", help="extract one link and print its per-component CSV")
    _add_common(p)
    p.add_argument("--r", type=float, default=None, help="link radius (default r0)")

    p = sub.add_parser("sweep", help="radius sweep plus germ estimates; prints the verdict")
    _add_common(p, sweep=True)

    p = sub.add_parser("transport", help="distortion of the radial transport map on a germ sample")
    _add_common(p)
    p.add_argument("--pairs", type=int, default=2000)

    p = sub.add_parser("flow", help="descend from a start point to a lower rho level")
    _add_common(p)
    p.add_argument("--start", help="comma-separated start point (default: fixture's)")
    p.add_argument("--target", type=float, help="target rho level (default: fixture's)")
    p.add_argument("--step-rel", type=float, default=0.05)

    p = sub.add_parser("report", help="re-render plots and a summary from an existing report.json/.csv")
    p.add_argument("--out-dir", default="lne-out")

    p = sub.add_parser("fixtures", help="list shipped fixtures or show one")
    p.add_argument("--show", metavar="NAME", help="print a fixture's documents and expectations")
    return ap


def _inputs(args):
    """Returns (set, rho, label, fixture or None)."""
    if args.fixture and args.set_path:
        raise InputError("give either --fixture or --set, not both")
    if args.fixture:
        fx = load_fixture(args.fixture, args.variant)
        rho = load_radius(args.rho_path, fx.set.variables) if args.rho_path else fx.rho
        return fx.set, rho, args.fixture, fx
    if not args.set_path:
        raise InputError("an input is required: --fixture NAME or --set PATH")
    s = load_set(args.set_path)
    rho = (load_radius(args.rho_path, s.variables) if args.rho_path
           else RadiusFunction.euclidean(s.ambient_dim))
    if rho.ambient_dim != s.ambient_dim:
        raise InputError("radius function and set have different dimensions")
    return s, rho, Path(args.set_path).stem, None


def _check_rho(args, rho):
    if args.require_lipschitz_rho and not rho.declared_lipschitz:
        raise InputError(f"radius function {rho.describe()} is not declared Lipschitz "
                         "and --require-lipschitz-rho is set")


def _out(args) -> Path:
    return Path(args.out_dir)


def cmd_parse(args):
    s, rho, _, _ = _inputs(args)
    doc = {"set": set_to_document(s), "rho": radius_to_document(rho, s.variables)}
    text = json.dumps(doc, indent=2) + "\n"
    export.write_text(_out(args) / "parsed.json", text)
    sys.stdout.write(text)


def _germ_graph(args, s):
    scale = args.r0
    cloud = sample_set(s, (scale / 8, scale), args.h_rel * scale, args.seed)
    return cloud, build_graph(cloud)


def cmd_sample(args):
    s, _, label, _ = _inputs(args)
    cloud, graph = _germ_graph(args, s)
    out = _out(args)
    export.write_text(out / "cloud.csv", export.cloud_csv(cloud))
    export.write_text(out / "graph.csv", export.graph_csv(graph))
    export.write_text(out / "plots" / "cloud.svg",
                      export.scatter_svg(cloud.points, f"{label}: sample", cloud.region_tag))
    print(f"points={len(cloud)} edges={graph.edges.shape[0]} h={export.fmt(cloud.spacing)}")


def cmd_lne(args):
    s, _, _, _ = _inputs(args)
    cloud, graph = _germ_graph(args, s)
    graph = attach_apex(graph, 1.5 * args.r0 / 8)
    est = lne_constant(graph, None, args.landmarks, args.seed, args.threads)
    text = export.estimate_csv(est)
    export.write_text(_out(args) / "estimate.csv", text)
    sys.stdout.write(text)


def cmd_link(args):
    s, rho, label, _ = _inputs(args)
    _check_rho(args, rho)
    r = args.r if args.r is not None else args.r0
    link = extract_link(s, rho, r, args.h_rel, args.seed)
    ests = link_lne_constant(link, args.eta_rel, args.landmarks, args.seed, args.threads)
    text = export.slice_csv(link, ests, separation_ratio(link))
    out = _out(args)
    tag = export.fmt(r)
    export.write_text(out / "slices" / f"link_r{tag}.csv", text)
    labels = np.zeros(len(link.cloud), dtype=int)
    for k, c in enumerate(link.components):
        labels[c] = k
    export.write_text(out / "plots" / f"link_r{tag}.svg",
                      export.scatter_svg(link.cloud.points, f"{label}: link r={tag}", labels))
    if link.low_confidence:
        print(f"warning: radial root-finding failed on {link.cloud.failure_rate:.1%} of rays",
              file=sys.stderr)
    sys.stdout.write(text)


def cmd_sweep(args):
    s, rho, label, _ = _inputs(args)
    _check_rho(args, rho)
    report = run_criterion(s, rho, args.r0, args.steps, args.h_rel, args.landmarks, args.seed,
                           args.eta_rel, n_jobs=args.threads)
    out = _out(args)
    export.write_text(out / "report.csv", export.report_csv(report))
    export.write_text(out / "report.json", export.report_json(report))
    for p in report.per_radius:
        export.write_text(out / "slices" / f"link_r{export.fmt(p.r)}.csv", export.radius_slice_csv(p))
    export.write_text(out / "plots" / "k_of_r.svg",
                      export.loglog_svg(report.radii, [p.max_K for p in report.per_radius],
                                        f"{label}: link K(r)"))
    cv = cross_validate(report)
    if cv.anomaly:
        print(f"anomaly: link track {cv.link_verdict} disagrees with germ track {cv.germ_verdict}",
              file=sys.stderr)
    print(f"VERDICT: {report.verdict} ({'; '.join(report.reasons)})")


def cmd_transport(args):
    s, rho, _, _ = _inputs(args)
    cloud, _ = _germ_graph(args, s)
    rep = transport_distortion(cloud, rho, args.pairs, args.seed)
    rows = [[export.fmt(a), export.fmt(b), int(c)]
            for a, b, c in zip(rep.bin_edges[:-1], rep.bin_edges[1:], rep.histogram)]
    export.write_text(_out(args) / "transport.csv",
                      export._csv(["log_ratio_lo", "log_ratio_hi", "count"], rows))
    print(f"min_ratio={export.fmt(rep.min_ratio)} max_ratio={export.fmt(rep.max_ratio)} "
          f"pairs={rep.ratios.size}")


def cmd_flow(args):
    s, rho, _, fx = _inputs(args)
    _check_rho(args, rho)
    start, target = args.start, args.target
    if fx is not None and fx.flow is not None:
        if not args.rho_path:
            rho = fx.flow_rho
        start = start or ",".join(str(v) for v in fx.flow["start"])
        target = target if target is not None else fx.flow["target"]
    if start is None or target is None:
        raise InputError("flow needs --start and --target (this input has no defaults)")
    try:
        point = np.array([float(v) for v in start.split(",")])
    except ValueError as exc:
        raise InputError(f"bad --start {start!r}: {exc}") from exc
    path = descend_flow(s, rho, point, float(target), args.step_rel)
    text = export.flow_csv(path)
    export.write_text(_out(args) / "flow.csv", text)
    sys.stdout.write(text)
    print(f"constant_C={export.fmt(path.constant_C)}", file=sys.stderr)


def cmd_report(args):
    out = _out(args)
    try:
        summary = json.loads((out / "report.json").read_text())
        rows = (out / "report.csv").read_text().splitlines()[1:]
    except FileNotFoundError as exc:
        raise InputError(f"no report in {out}: run 'lne-lab sweep' first ({exc.filename})") from exc
    r = [float(row.split(",")[0]) for row in rows]
    k = [float(row.split(",")[2]) for row in rows]
    export.write_text(out / "plots" / "k_of_r.svg", export.loglog_svg(r, k, "link K(r)"))
    print(f"VERDICT: {summary['verdict']} ({'; '.join(summary['reasons'])})")
    print(f"growth_exponent={summary['growth_exponent']} separation_trend={summary['separation_trend']}")


def cmd_fixtures(args):
    if args.show:
        fx = load_fixture(args.show)
        doc = {"name": fx.name, "description": fx.description, "set": fx.set_document,
               "rho": fx.rho_document,
               "expectations": [{"quantity": e.quantity, "value": e.value, "tolerance": e.tolerance,
                                 "provenance": e.provenance, **e.conditions} for e in fx.expectations]}
        print(json.dumps(doc, indent=2))
        return
    for name in list_fixtures():
        print(f"{name:20s} {load_fixture(name).description}")


COMMANDS = {"parse": cmd_parse, "sample": cmd_sample, "lne": cmd_lne, "link": cmd_link,
            "sweep": cmd_sweep, "transport": cmd_transport, "flow": cmd_flow,
            "report": cmd_report, "fixtures": cmd_fixtures}


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except (InputError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"lne-lab {args.command}: error: {msg}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: report it, never a traceback
        print(f"lne-lab {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    raise SystemExit(main())

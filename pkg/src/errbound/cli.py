"""Command-line driver: ``errbound analyze|check-regularity|check-shapiro|excess|version``."""
import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analyzer import analyze
from .exceptions import ErrboundError
from .functions import composite
from .geometry import excess_certificate, excess_with_witness
from .io import fmt, parse_excess_file, parse_problem, report_text, write_report
from .regularity import empirical_metric_regularity, shapiro_epigraph_test

EXIT_CODES = {
    "error-bound-holds": 0,
    "no-error-bound": 2,
    "hypotheses-violated": 3,
    "inconclusive": 4,
}
EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser():
    parser = _Parser(prog="errbound", description="Local error bounds of f(g(x)) <= 0 with max-affine f.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="estimate the error-bound modulus and diagnose the instance")
    a.add_argument("file")
    a.add_argument("--out", help="directory for report.txt and the CSV files")
    a.add_argument("--seed", type=int)
    a.add_argument("--radii", type=_floats, help="comma-separated, strictly decreasing")
    a.add_argument("--samples", type=int)

    r = sub.add_parser("check-regularity", help="metric regularity of g at x_bar")
    r.add_argument("file")
    r.add_argument("--seed", type=int)

    s = sub.add_parser("check-shapiro", help="epigraphical contact test of f(g(.)) at x_bar")
    s.add_argument("file")
    s.add_argument("--seed", type=int)

    e = sub.add_parser("excess", help="excess of polyhedron C over polyhedron D")
    e.add_argument("file")
    e.add_argument("--tau", type=float, help="also run the sampled certificate C ⊆ D + tau B")
    e.add_argument("--seed", type=int)

    sub.add_parser("version")
    return parser


def _seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("ERRBOUND_SEED")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"ERRBOUND_SEED must be an integer, got {env!r}")


def _load(args):
    p = parse_problem(args.file)
    seed = _seed(args)
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if getattr(args, "radii", None):
        changes["radii"] = tuple(args.radii)
    if getattr(args, "samples", None):
        changes["samples_per_radius"] = args.samples
    return replace(p, **changes) if changes else p


def _analyze(args):
    p = _load(args)
    report = analyze(p)
    if args.out:
        write_report(report, p.n, args.out, __version__)
    sys.stdout.write(report_text(report, p.n, __version__))
    return EXIT_CODES[report.diagnosis]


def _regularity(args):
    p = _load(args)
    rep = empirical_metric_regularity(p.g, p.x_bar, p.radii[0], seed=p.seed)
    print(f"jacobian_surjective = {fmt(rep.surjective)}")
    print(f"sigma_min = {fmt(rep.sigma_min)}")
    print(f"kappa_linear = {fmt(rep.kappa_linear)}")
    print(f"kappa_empirical = {fmt(rep.kappa_empirical)}")
    print(f"sample_count = {rep.sample_count}")
    return 0 if rep.surjective and np.isfinite(rep.kappa_empirical) else 2


def _shapiro(args):
    p = _load(args)
    rep = shapiro_epigraph_test(composite(p.f, p.g), p.x_bar, seed=p.seed, delta0=p.radii[0])
    print(f"verdict = {rep.verdict}")
    print(f"contact_ratio_sup = {fmt(rep.contact_ratio_sup)}")
    for eps, delta in zip(rep.epsilon_grid, rep.delta_found):
        print(f"epsilon = {fmt(eps)}, delta = {'none' if delta is None else fmt(delta)}")
    return {"pass": 0, "fail": 2, "inconclusive": 4}[rep.verdict]


def _excess(args):
    C, D = parse_excess_file(args.file)
    res = excess_with_witness(C, D)
    print(f"excess = {fmt(res.value)}")
    print(f"approximate = {fmt(res.approximate)}")
    if res.witness is not None:
        print(f"witness = {', '.join(fmt(v) for v in res.witness)}")
    if args.tau is None:
        return 0
    ok = excess_certificate(C, D, args.tau, seed=_seed(args))
    print(f"certificate = {'pass' if ok else 'fail'}")
    return 0 if ok else 2


COMMANDS = {
    "analyze": _analyze,
    "check-regularity": _regularity,
    "check-shapiro": _shapiro,
    "excess": _excess,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.command == "version":
        print(__version__)
        return 0
    try:
        return COMMANDS[args.command](args)
    except (OSError, ErrboundError, ValueError) as exc:
        print(f"errbound: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes:
  0  success
  1  levi-check ran but the bound failed on some probe
  2  usage or group-file parse error
  3  invalid matrix (not form-preserving, non-unitary T, not parabolic)
  4  projections of the generators do not commute (witness pair in the report)
  5  orbit too small for an estimate

Reports go to stdout as ``key: value`` lines in a fixed order; diagnostics go
to stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .density import DEFAULT_STEP, LEVI_TOLERANCE, build_density, levi_check, weight_share
from .exponent import InsufficientDataError, enumerate_orbit, estimate_delta
from .geometry import GeometryError, ball_coords, classify
from .groupfile import GroupFileError, load
from .heisenberg import ProjectionNotAbelianError, analyze

EXIT_OK = 0
EXIT_LEVI_FAIL = 1
EXIT_PARSE = 2
EXIT_MATRIX = 3
EXIT_NOT_ABELIAN = 4
EXIT_INSUFFICIENT = 5

DEFAULT_DEPTH = 1000
DEFAULT_MAX_POINTS = 250_000
DEFAULT_GRID = "20x5"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_PARSE)


def _fraction(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _bool(b) -> str:
    return "true" if b else "false"


def _num(x: float) -> str:
    return f"{x:.6f}"


def _complex_vec(v) -> str:
    return "[" + ", ".join(f"{c.real:.6f}{c.imag:+.6f}j" for c in np.atleast_1d(v)) + "]"


def _word(w) -> str:
    return " ".join(str(a) for a in w)


def _emit(lines: list[tuple[str, object]]) -> None:
    out = "".join(f"{k}: {v}\n" for k, v in lines)
    sys.stdout.write(out)


def _header(command: str, args) -> list[tuple[str, object]]:
    return [("command", command), ("version", __version__), ("seed", args.seed), ("file", args.file)]


def _seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("CHC_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise GroupFileError(f"CHC_SEED must be an integer, got {env!r}") from None


def _grid(text: str) -> tuple[int, int]:
    try:
        p, d = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like POINTSxDIRECTIONS, e.g. 20x5") from None
    if p < 1 or d < 1:
        raise argparse.ArgumentTypeError("grid sizes must be positive")
    return p, d


def _orbit(args, gf):
    spec = gf.group_spec()
    return enumerate_orbit(spec, args.depth, args.max_points, args.radius)


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    gf = load(args.file)
    lines = _header("classify", args)
    for i, g in enumerate(gf.isometries(), 1):
        lines.append((f"g{i}", str(classify(g))))
    _emit(lines)
    return EXIT_OK


def _analysis(args):
    gf = load(args.file)
    data = gf.parabolic_input()
    return analyze(data, seed=args.seed)


def cmd_parabolic(args) -> int:
    res = _analysis(args)
    lines = _header("parabolic", args)
    lines += [
        ("pi_abelian", _bool(res.pi_abelian)),
        ("dim_V1", res.dim_V1),
        ("dim_W1", res.dim_W1),
        ("totally_real", _bool(res.totally_real)),
        ("stein", _bool(res.stein)),
        ("l", res.l),
        ("k", res.k),
        ("delta", _fraction(res.delta)),
        ("Lambda", _complex_vec(res.Lambda)),
        ("caveats", "; ".join(res.caveats) if res.caveats else "none"),
    ]
    _emit(lines)
    return EXIT_OK


def cmd_delta_exact(args) -> int:
    res = _analysis(args)
    lines = _header("delta-exact", args) + [("delta", _fraction(res.delta))]
    if res.caveats:
        lines.append(("caveats", "; ".join(res.caveats)))
    _emit(lines)
    return EXIT_OK


def cmd_delta_estimate(args) -> int:
    gf = load(args.file)
    cloud = _orbit(args, gf)
    est = estimate_delta(cloud)
    if args.format == "csv":
        sys.stdout.write("radius,count\n")
        for r, c in zip(est.regression_radii, est.regression_counts):
            sys.stdout.write(f"{r:.9f},{int(c)}\n")
        return EXIT_OK
    lo, hi = est.diagnostics["regression_range"]
    lines = _header("delta-estimate", args)
    lines += [
        ("estimate", _num(est.estimate)),
        ("method", est.method),
        ("shell", _num(est.shell)),
        ("bisection", _num(est.bisection)),
        ("orbit_size", len(cloud)),
        ("max_word_length", int(cloud.length.max())),
        ("capped", _bool(cloud.capped)),
        ("complete_radius", _num(cloud.complete_radius)),
        ("regression_range", f"{_num(lo)} {_num(hi)}"),
        ("residual", _num(est.residual)),
    ]
    _emit(lines)
    return EXIT_OK


def _density(args, gf):
    cloud = _orbit(args, gf)
    warnings = []
    try:
        delta_hat = estimate_delta(cloud).shell
    except InsufficientDataError as exc:
        delta_hat = 0.0
        warnings.append(f"delta estimate unavailable ({exc}); using 0")
    density = build_density(cloud, delta_hat=delta_hat)
    return cloud, delta_hat, density, warnings


def cmd_density_build(args) -> int:
    gf = load(args.file)
    cloud, delta_hat, density, warnings = _density(args, gf)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.format == "csv":
        sys.stdout.write("word,word_length,displacement,weight\n")
        for i in range(len(cloud)):
            sys.stdout.write(f"{_word_name(cloud, i)},{int(cloud.length[i])},"
                             f"{cloud.displacement[i]:.9f},{density.weights[i]:.9e}\n")
        return EXIT_OK
    outer = weight_share(density, cloud.basepoint, density.outer_mask())
    lines = _header("density-build", args)
    lines += [
        ("delta_hat", _num(delta_hat)),
        ("s", _num(density.s)),
        ("log_phi", _num(density.log_phi)),
        ("atoms", len(cloud)),
        ("outer_share", f"{outer:.3e}"),
        ("warnings", "; ".join(warnings) if warnings else "none"),
    ]
    _emit(lines)
    return EXIT_OK


def _word_name(cloud, i) -> str:
    return cloud.tree.word_string(int(cloud.node[i]))


def cmd_levi_check(args) -> int:
    gf = load(args.file)
    cloud, delta_hat, density, warnings = _density(args, gf)
    if len(gf.generators) < 2:
        warnings.append("fewer than two generators: the group is elementary")
    points, directions = args.grid
    rep = levi_check(density, delta_hat, np.random.default_rng(args.seed), points, directions,
                     h=args.step, tolerance=args.tolerance)
    warnings += rep.warnings
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.format == "csv":
        sys.stdout.write(rep.to_csv())
    else:
        worst = min(rep.rows, key=lambda r: r.estimate)
        lines = _header("levi-check", args)
        lines += [
            ("delta_hat", _num(rep.delta_hat)),
            ("s", _num(rep.s)),
            ("threshold", _num(rep.threshold)),
            ("minimum", _num(rep.minimum)),
            ("worst_point", _complex_vec(worst.coords)),
            ("probes", len(rep.rows)),
            ("failures", sum(not r.passed for r in rep.rows)),
            ("step", args.step),
            ("result", "PASS" if rep.passed else "FAIL"),
            ("warnings", "; ".join(warnings) if warnings else "none"),
        ]
        _emit(lines)
    return EXIT_OK if rep.passed else EXIT_LEVI_FAIL


def cmd_orbit_export(args) -> int:
    gf = load(args.file)
    cloud = _orbit(args, gf)
    if args.format == "csv":
        sys.stdout.write(cloud.to_csv())
        return EXIT_OK
    lines = _header("orbit-export", args)
    lines += [
        ("points", len(cloud)),
        ("max_word_length", int(cloud.length.max())),
        ("capped", _bool(cloud.capped)),
        ("complete_radius", _num(cloud.complete_radius)),
        ("max_displacement", _num(float(cloud.displacement.max()))),
        ("basepoint", _complex_vec(ball_coords(cloud.model, cloud.basepoint))),
    ]
    _emit(lines)
    return EXIT_OK


COMMANDS = {
    "classify": (cmd_classify, "classify each generator as elliptic, parabolic or loxodromic"),
    "parabolic": (cmd_parabolic, "Stein verdict and exact critical exponent of a parabolic group"),
    "delta-exact": (cmd_delta_exact, "exact critical exponent of a parabolic group"),
    "delta-estimate": (cmd_delta_estimate, "numerical critical exponent from orbit growth"),
    "density-build": (cmd_density_build, "atomic Patterson-Sullivan density"),
    "levi-check": (cmd_levi_check, "finite-difference check of the Levi form lower bound"),
    "orbit-export": (cmd_orbit_export, "breadth-first orbit, as a summary or CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chc", description="Complex hyperbolic group toolkit.")
    parser.add_argument("--version", action="version", version=f"chc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (func, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("file", help="group file (JSON)")
        p.add_argument("--seed", type=int, default=None, help="random seed (default: $CHC_SEED or 0)")
        p.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="maximal word length")
        p.add_argument("--max-points", type=int, default=DEFAULT_MAX_POINTS, help="orbit point cap")
        p.add_argument("--radius", type=float, default=None, help="keep orbit points within this displacement")
        p.add_argument("--step", type=float, default=DEFAULT_STEP, help="finite-difference step")
        p.add_argument("--grid", type=_grid, default=_grid(DEFAULT_GRID), help="probe grid POINTSxDIRECTIONS")
        p.add_argument("--tolerance", type=float, default=LEVI_TOLERANCE, help="slack below the Levi bound")
        p.add_argument("--format", choices=["report", "csv"], default="report")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.seed = _seed(args.seed)
        if args.depth < 0 or args.max_points < 1:
            raise GroupFileError("--depth must be >= 0 and --max-points >= 1")
        return args.func(args)
    except GroupFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ProjectionNotAbelianError as exc:
        i, j = exc.pair
        _emit(_header(args.command, args) + [
            ("pi_abelian", "false"),
            ("witness", f"g{i + 1} g{j + 1}"),
            ("reason", exc.reason),
        ])
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_ABELIAN
    except InsufficientDataError as exc:
        print(f"error: insufficient orbit: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (GeometryError, ValueError) as exc:
        print(f"error: invalid matrix: {exc}", file=sys.stderr)
        return EXIT_MATRIX


if __name__ == "__main__":
    sys.exit(main())

"""Command line: map recipe names to panels and render them.

    otoc-figures fig1 --scan RUN --husimi RUN --section RUN -o OUT
    otoc-figures fig2 --sweep RUN -o OUT
    otoc-figures fig3 --section L=RUN ... --micro L=RUN ... \
        --gyration RUN --trajectory RUN --instanton RUN -o OUT
    otoc-figures all  (union of the flags above)

Every input is verified against its run's manifest before anything is
drawn; a checksum mismatch aborts the whole figure with exit code 2.
"""

import argparse
import sys

from .io import FigureInputError
from .recipe import fig1, fig2, fig3, render
from .style import PRESETS

EXIT_OK = 0
EXIT_INPUT = 2


def _labeled(pairs):
    out = []
    for item in pairs or []:
        label, sep, path = item.rpartition("=")
        if not sep:
            path = item
            label = item.rstrip("/").rsplit("/", 1)[-1]
        out.append((label, path))
    return out


def _add_common(sp):
    sp.add_argument("-o", "--out", default="figures-out",
                    help="output directory for the image files")
    sp.add_argument("--style", default="paper", choices=sorted(PRESETS),
                    help="styling preset")
    sp.add_argument("--format", default="png", choices=("png", "svg"),
                    help="image file format")


def _add_fig1(sp):
    sp.add_argument("--scan", metavar="RUN",
                    help="potential-scan run directory")
    sp.add_argument("--husimi", metavar="RUN",
                    help="husimi run directory")
    sp.add_argument("--section", action="append", metavar="[LABEL=]RUN",
                    help="poincare run directory")


def _add_fig2(sp):
    sp.add_argument("--sweep", metavar="RUN", help="sweep run directory")
    sp.add_argument("--max-curves", type=int, default=None,
                    help="plot at most this many OTOC curves")


def _add_fig3(sp, with_section=True):
    if with_section:
        sp.add_argument("--section", action="append",
                        metavar="[LABEL=]RUN",
                        help="section run directory (repeatable)")
        sp.add_argument("--scan", metavar="RUN",
                        help="potential-scan run for the background "
                             "contours (optional)")
    sp.add_argument("--micro", action="append", metavar="[LABEL=]RUN",
                    help="micro-otoc run directory (repeatable)")
    sp.add_argument("--gyration", metavar="RUN",
                    help="gyration run directory")
    sp.add_argument("--full-section", metavar="RUN",
                    help="run holding the unfiltered centroid section "
                         "(default: the gyration run)")
    sp.add_argument("--trajectory", metavar="RUN",
                    help="rp-trajectory run directory")
    sp.add_argument("--instanton", metavar="RUN",
                    help="instanton run directory")
    sp.add_argument("--instanton-index", type=int, default=0,
                    help="which geometry_NN.csv to overlay (default 0)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="otoc-figures",
        description="Render figures from completed run directories.")
    sub = ap.add_subparsers(dest="recipe", required=True)

    sp = sub.add_parser("fig1", help="model overview (4 panels)")
    _add_fig1(sp)
    _add_common(sp)

    sp = sub.add_parser("fig2", help="OTOCs and the bound (2 panels)")
    _add_fig2(sp)
    _add_common(sp)

    sp = sub.add_parser("fig3", help="scrambling mechanism (5 panels)")
    _add_fig3(sp)
    _add_common(sp)

    sp = sub.add_parser("all", help="fig1 + fig2 + fig3")
    _add_fig1(sp)
    _add_fig2(sp)
    _add_fig3(sp, with_section=False)
    _add_common(sp)
    return ap


def _require(args, names):
    missing = [n for n in names if not getattr(args, n.replace("-", "_"))]
    if missing:
        raise FigureInputError(
            f"{args.recipe}: missing required input "
            + ", ".join(f"--{n}" for n in missing))


def _recipes(args):
    recipes = []
    if args.recipe in ("fig1", "all"):
        _require(args, ["scan", "husimi", "section"])
        recipes.append(fig1(args.scan, args.husimi,
                            _labeled(args.section)[0][1],
                            style_name=args.style))
    if args.recipe in ("fig2", "all"):
        _require(args, ["sweep"])
        recipes.append(fig2(args.sweep, style_name=args.style,
                            max_curves=args.max_curves))
    if args.recipe in ("fig3", "all"):
        _require(args, ["section", "micro", "gyration", "trajectory",
                        "instanton"])
        recipes.append(fig3(
            _labeled(args.section), _labeled(args.micro),
            args.gyration, args.trajectory, args.instanton,
            full_section_dir=args.full_section,
            instanton_index=args.instanton_index,
            scan_dir=args.scan, style_name=args.style))
    return recipes


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        recipes = _recipes(args)
        written = []
        for recipe in recipes:
            written += render(recipe, args.out, fmt=args.format)
    except FigureInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""`tdqmc-figures render profile|map <inputs> -o <image>` (PNG or SVG)."""

from __future__ import annotations

import argparse
import sys


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="tdqmc-figures",
                     description="Render exported CSV artifacts to figures.")
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser("render", help="render one figure from CSV inputs")
    kinds = render.add_subparsers(dest="kind", required=True)

    profile = kinds.add_parser("profile", help="potential/density/entropy profile panel")
    profile.add_argument("potential", help="potential profile CSV (x,value)")
    profile.add_argument("--density", help="density profile CSV (x,value)")
    profile.add_argument("--entropy", help="zone entropy profile CSV (x,value)")
    profile.add_argument("-o", "--out", required=True, help="output image (.png/.svg)")

    zmap = kinds.add_parser("map", help="zone map heatmap or bar profile")
    zmap.add_argument("map", help="zone map CSV (zone_x,zone_y,value,walker_count)")
    zmap.add_argument("-o", "--out", required=True, help="output image (.png/.svg)")
    zmap.add_argument("--colormap", default="viridis")
    zmap.add_argument("--no-mask-empty", action="store_true",
                      help="render empty zones like ordinary nan values")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    from .csvio import SchemaError
    from .render import render_map, render_profile

    try:
        if args.kind == "profile":
            render_profile(args.potential, density_csv=args.density,
                           entropy_csv=args.entropy, out_image=args.out)
        else:
            render_map(args.map, args.out, colormap=args.colormap,
                       mask_empty=not args.no_mask_empty)
        print(f"wrote {args.out}")
        return 0
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

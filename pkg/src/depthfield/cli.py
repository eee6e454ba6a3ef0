"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure.  Every stochastic path takes an explicit --seed; given the same
inputs, flags, and seeds, outputs are byte-identical (including with
--threads > 1, since work is partitioned and reassembled by index).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import demos, dfz, lightfield, multiplex, occlusion, tof, unwrap
from .core import (CameraArrayConfig, DataFormatError, DepthField,
                   DepthFieldError, NumericalError, QuadratureStack)
from .scenes import Scene
from .simulator import (NoiseModel, quadrature_from_field,
                        render_ground_truth)


class UsageError(DepthFieldError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path):
    if path is None:
        return demos.default_config()
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}: not valid JSON: {e}") from e
    try:
        return CameraArrayConfig.from_dict(data)
    except ValueError as e:
        raise DataFormatError(f"{path}: {e}") from e


def _read_field(path):
    obj = dfz.read_dfz(path)
    if not isinstance(obj, DepthField):
        raise DataFormatError(f"{path}: expected a depthfield DFZ")
    return obj


def _read_stack(path):
    obj = dfz.read_dfz(path)
    if not isinstance(obj, QuadratureStack):
        raise DataFormatError(f"{path}: expected a quadrature DFZ")
    return obj


def _read_map(path):
    return dfz.field_to_depth_map(_read_field(path))


def _parse_line(spec):
    try:
        a, b = spec.split(":")
        x0, y0 = (int(s) for s in a.split(","))
        x1, y1 = (int(s) for s in b.split(","))
    except ValueError as e:
        raise UsageError(
            f"bad --line spec {spec!r}; expected x0,y0:x1,y1") from e
    try:
        return unwrap.CalibrationLine.from_endpoints(x0, y0, x1, y1)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _check_shear_args(args):
    if args.depth is not None and args.slope is not None:
        raise UsageError("give either --depth or --slope, not both")
    if args.depth is None and args.slope is None:
        raise UsageError("one of --depth or --slope is required")


def _shear_from_args(args, config):
    if args.depth is not None:
        return lightfield.Shear.from_depth(args.depth, config)
    return lightfield.Shear(args.slope)


def _matrix_from_args(args, views=None):
    tag = args.matrix
    if tag in ("random-binary", "random-gaussian"):
        if args.seed is None:
            raise UsageError(f"--matrix {tag} requires --seed")
        if views is None:
            if args.views is None:
                raise UsageError(f"--matrix {tag} requires --views NU NV")
            views = tuple(args.views)
        gen = (multiplex.random_binary_matrix if tag == "random-binary"
               else multiplex.random_gaussian_matrix)
        return gen(views[0], views[1], seed=args.seed,
                   max_cond=args.max_cond)
    if tag == "pinhole":
        if views is None:
            if args.views is None:
                raise UsageError("--matrix pinhole requires --views NU NV")
            views = tuple(args.views)
        return multiplex.pinhole_matrix(views[0], views[1])
    return multiplex.read_matrix(tag)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    if args.noise_sigma > 0 and args.seed is None:
        raise UsageError("--seed is required when --noise-sigma > 0")
    scene = Scene.load(args.scene)
    config = _load_config(args.config)
    noise = NoiseModel(gaussian_sigma=args.noise_sigma,
                       seed=0 if args.seed is None else args.seed)
    field = render_ground_truth(scene, config, supersample=args.supersample,
                                threads=args.threads)
    if args.truth:
        dfz.write_dfz(field, args.truth)
    stack = quadrature_from_field(field, noise)
    dfz.write_dfz(stack, args.out)
    return 0


def cmd_invert(args):
    stack = _read_stack(args.infile)
    field = tof.invert_quadrature(stack, validity_threshold=args.threshold)
    dfz.write_dfz(field, args.out)
    return 0


def cmd_depthmap(args):
    field = _read_field(args.infile)
    iu, iv = args.view
    try:
        dmap = tof.to_depth_map(field, (iu, iv))
    except ValueError as e:
        raise UsageError(str(e)) from e
    if args.png:
        dfz.export_png(dmap.depth, args.png, valid=dmap.valid)
    if args.csv:
        dfz.export_csv(dmap.depth, args.csv, valid=dmap.valid)
    if args.out:
        dfz.write_dfz(dfz.depth_map_to_field(dmap, field.config), args.out)
    return 0


def cmd_refocus(args):
    _check_shear_args(args)
    field = _read_field(args.infile)
    shear = _shear_from_args(args, field.config)
    res = lightfield.refocus(field, shear, mode=args.mode)
    dfz.export_png(res.albedo, args.out_prefix + "_albedo.png",
                   valid=res.valid)
    dfz.export_png(res.depth, args.out_prefix + "_depth.png",
                   valid=res.valid)
    dfz.export_csv(res.depth, args.out_prefix + "_depth.csv",
                   valid=res.valid)
    return 0


def cmd_corrdepth(args):
    field = _read_field(args.infile)
    cands = lightfield.candidates_for_depth_range(
        field.config, args.dmin, args.dmax, args.candidates)
    res = lightfield.depth_from_correspondence(field, cands,
                                               window=args.window)
    dfz.write_dfz(dfz.depth_map_to_field(res.depth_map, field.config),
                  args.out)
    return 0


def cmd_unwrap(args):
    line = None
    if args.method == "line":
        if args.line is None:
            raise UsageError("--method line requires --line x0,y0:x1,y1")
        line = _parse_line(args.line)  # flag validation before any I/O
    wrapped_field = _read_field(args.wrapped)
    corr_field = _read_field(args.corr)
    wmap = dfz.field_to_depth_map(wrapped_field)
    cmap = dfz.field_to_depth_map(corr_field)
    rng_m = wrapped_field.config.unambiguous_range()
    if line is not None:
        res = unwrap.unwrap_with_line(wmap, cmap, line, rng_m,
                                      median_radius=args.median)
    else:
        res = unwrap.unwrap_per_pixel(wmap, cmap, rng_m)
    dfz.write_dfz(dfz.depth_map_to_field(res.depth_map,
                                         wrapped_field.config), args.out)
    return 0


def cmd_occlude_refocus(args):
    _check_shear_args(args)
    field = _read_field(args.infile)
    shear = _shear_from_args(args, field.config)
    counts, edges = occlusion.depth_histogram(field, bins=args.bins,
                                              allow_wrapped=True)
    if args.hist:
        occlusion.write_histogram_csv(counts, edges, args.hist)
    clusters = occlusion.cluster_depths(field, k=args.k, seed=args.seed,
                                        allow_wrapped=args.allow_wrapped)
    res = occlusion.refocus_without_foreground(
        field, clusters, shear, mode=args.mode, foreground=args.foreground)
    dfz.export_png(res.albedo, args.out_prefix + "_albedo.png",
                   valid=res.valid)
    dfz.export_png(res.depth, args.out_prefix + "_depth.png",
                   valid=res.valid)
    dfz.export_csv(res.depth, args.out_prefix + "_depth.csv",
                   valid=res.valid)
    print(f"centroids_m={[round(float(c), 6) for c in clusters.centroids]} "
          f"fully_occluded={res.n_fully_masked}")
    return 0


def cmd_multiplex(args):
    field = _read_field(args.infile)
    m = _matrix_from_args(args, views=(field.config.nu, field.config.nv))
    stack = multiplex.forward_multiplex(field, m)
    dfz.write_dfz(stack, args.out)
    if args.save_matrix:
        multiplex.write_matrix(m, args.save_matrix)
    return 0


def cmd_demultiplex(args):
    stack = _read_stack(args.infile)
    m = _matrix_from_args(args)
    res = multiplex.invert_multiplex(stack, m, lam=args.lam)
    dfz.write_dfz(res.field, args.out)
    print(f"condition_number={res.condition_number:.6g} "
          f"effective={res.effective_condition_number:.6g}")
    return 0


def cmd_info(args):
    header = dfz.read_header(args.infile)
    print(json.dumps(header, indent=2, sort_keys=True))
    return 0


def cmd_demo(args):
    fn = demos.DEMOS[args.which]
    manifest = fn(args.out, seed=args.seed, threads=args.threads)
    print(json.dumps(manifest["metrics"], indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="depthfield",
                description="Simulate, invert, and post-process 4D "
                            "albedo+phase depth fields.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sp = sub.add_parser("simulate", help="render a scene to raw frames")
    sp.add_argument("--scene", required=True)
    sp.add_argument("--config", default=None,
                    help="camera array config JSON (default: built-in)")
    sp.add_argument("--noise-sigma", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=None,
                    help="required when --noise-sigma > 0")
    sp.add_argument("--out", required=True, help="raw quadrature DFZ")
    sp.add_argument("--truth", default=None, help="ground-truth field DFZ")
    sp.add_argument("--supersample", action="store_true")
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("invert", help="quadrature frames -> depth field")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--threshold", type=float,
                    default=tof.DEFAULT_VALIDITY_THRESHOLD)
    sp.set_defaults(func=cmd_invert)

    sp = sub.add_parser("depthmap", help="extract one view's depth map")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--view", nargs=2, type=int, metavar=("U", "V"),
                    required=True)
    sp.add_argument("--png", default=None)
    sp.add_argument("--csv", default=None)
    sp.add_argument("--out", default=None, help="optional DFZ depth map")
    sp.set_defaults(func=cmd_depthmap)

    sp = sub.add_parser("refocus", help="synthetic-aperture refocus")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--depth", type=float, default=None, help="meters")
    sp.add_argument("--slope", type=float, default=None, help="px per view")
    sp.add_argument("--mode", choices=("phasor", "naive"), default="phasor")
    sp.add_argument("--out-prefix", required=True)
    sp.set_defaults(func=cmd_refocus)

    sp = sub.add_parser("corrdepth", help="coarse depth from correspondence")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--dmin", type=float, required=True)
    sp.add_argument("--dmax", type=float, required=True)
    sp.add_argument("--candidates", type=int, default=64)
    sp.add_argument("--window", type=int, default=5)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_corrdepth)

    sp = sub.add_parser("unwrap", help="phase unwrapping")
    sp.add_argument("--wrapped", required=True)
    sp.add_argument("--corr", required=True)
    sp.add_argument("--line", default=None, help="x0,y0:x1,y1")
    sp.add_argument("--median", type=int, default=2)
    sp.add_argument("--method", choices=("line", "perpixel"), default="line")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_unwrap)

    sp = sub.add_parser("occlude-refocus",
                        help="cluster depths, drop foreground, refocus")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--depth", type=float, default=None)
    sp.add_argument("--slope", type=float, default=None)
    sp.add_argument("--mode", choices=("phasor", "naive"), default="phasor")
    sp.add_argument("--out-prefix", required=True)
    sp.add_argument("--hist", default=None, help="histogram CSV path")
    sp.add_argument("--bins", type=int, default=100)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--foreground", type=int, default=None)
    sp.add_argument("--allow-wrapped", action="store_true",
                    help="accept wrapped fields (scene fits in range)")
    sp.set_defaults(func=cmd_occlude_refocus)

    sp = sub.add_parser("multiplex", help="collapse views through a mask")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--matrix", required=True,
                    help="pinhole | random-binary | random-gaussian | file")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--max-cond", type=float, default=None)
    sp.add_argument("--views", nargs=2, type=int, default=None,
                    metavar=("NU", "NV"))
    sp.add_argument("--save-matrix", default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_multiplex)

    sp = sub.add_parser("demultiplex", help="invert a multiplexed capture")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--max-cond", type=float, default=None)
    sp.add_argument("--views", nargs=2, type=int, default=None,
                    metavar=("NU", "NV"))
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_demultiplex)

    sp = sub.add_parser("info", help="print a DFZ header as JSON")
    sp.add_argument("--in", dest="infile", required=True)
    sp.set_defaults(func=cmd_info)

    sp = sub.add_parser("demo", help="run an end-to-end demo pipeline")
    sp.add_argument("which", choices=sorted(demos.DEMOS))
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_demo)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        print("run with --help for usage", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except (DataFormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()

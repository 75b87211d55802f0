"""Command-line entry point.

JSON (or mesh bytes) goes to stdout or ``--out``; diagnostics go to stderr.
Exit status is 0 on success, 1 on domain or validation errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import calibration, mesh, models, simulate, sphere_design
from .errors import DiceError

DEFAULT_RADIUS_MM = 10.0


def _dims(text):
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a,b,c, got {text!r}") from None
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated lengths, got {text!r}")
    return values


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairdice", description="Fair die design toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thickness", help="fair thickness of a coin or prism die")
    p.add_argument("--faces", type=int, required=True)
    p.add_argument("--model", choices=["dynamic", "geometric"], default="dynamic")
    p.add_argument("--family", choices=["cylinder", "prism"], default="cylinder")
    p.add_argument("--radius-mm", type=float, default=DEFAULT_RADIUS_MM)

    p = sub.add_parser("prob", help="face probabilities of a solid")
    p.add_argument("--shape", choices=["cylinder", "prism", "box"], required=True)
    p.add_argument("--model", choices=["dynamic", "geometric"], required=True)
    p.add_argument("--height-mm", type=float)
    p.add_argument("--radius-mm", type=float, default=DEFAULT_RADIUS_MM)
    p.add_argument("--sides", type=int)
    p.add_argument("--dims", type=_dims)

    p = sub.add_parser("design-sphere", help="carved-sphere die layout")
    p.add_argument("--faces", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--face-fraction", type=float, default=0.2)
    p.add_argument("--max-displacement", type=float, default=0.01)
    p.add_argument("--out")

    p = sub.add_parser("mesh", help="printable mesh of a die")
    p.add_argument("--shape", required=True,
                   choices=["prism", "bipyramid", "cylinder", "sharpened-prism", "carved-sphere"])
    p.add_argument("--format", choices=["stl", "obj"], default="stl")
    p.add_argument("--out")
    p.add_argument("--sides", type=int)
    p.add_argument("--height-mm", type=float)
    p.add_argument("--radius-mm", type=float, default=DEFAULT_RADIUS_MM)
    p.add_argument("--tip-height-mm", type=float)
    p.add_argument("--apex-height-mm", type=float)
    p.add_argument("--segments", type=int, default=128)
    p.add_argument("--faces", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--face-fraction", type=float, default=0.2)
    p.add_argument("--resolution", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--max-displacement", type=float, default=0.01)

    p = sub.add_parser("calibrate", help="fit toss counts and solve for the fair height")
    p.add_argument("--input", required=True, help="CSV file, or - for stdin")
    p.add_argument("--faces", type=int, required=True)
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--scale-ratio", type=float)

    p = sub.add_parser("simulate", help="Monte Carlo tosses")
    p.add_argument("--model", choices=["dynamic", "geometric"], required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--shape", default="cylinder",
                   choices=["cylinder", "prism", "box", "bipyramid", "sharpened-prism"])
    p.add_argument("--height-mm", type=float)
    p.add_argument("--radius-mm", type=float, default=DEFAULT_RADIUS_MM)
    p.add_argument("--sides", type=int)
    p.add_argument("--dims", type=_dims)
    p.add_argument("--tip-height-mm", type=float)
    p.add_argument("--apex-height-mm", type=float)
    p.add_argument("--heights", type=_float_list,
                   help="comma-separated heights in mm; emit a toss dataset CSV instead of JSON")
    p.add_argument("--workers", type=int, default=1)

    for name, subparser in sub.choices.items():
        subparser.set_defaults(subparser=subparser)
    return parser


def _require(parser, args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            parser.error(f"--{name} is required for --shape {args.shape}")


def _forbid(parser, args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is not None:
            parser.error(f"--{name} is not allowed with --shape {args.shape}")


def _check_shape_flags(parser, args):
    shape = args.shape
    if shape == "box":
        _require(parser, args, "dims")
        _forbid(parser, args, "sides", "height-mm", "tip-height-mm", "apex-height-mm")
        return
    _forbid(parser, args, "dims")
    if shape in ("prism", "sharpened-prism", "bipyramid"):
        _require(parser, args, "sides")
    elif shape in ("cylinder", "carved-sphere"):
        _forbid(parser, args, "sides")
    if shape in ("prism", "cylinder", "sharpened-prism"):
        _require(parser, args, "height-mm")
    if shape == "sharpened-prism":
        _require(parser, args, "tip-height-mm")
    else:
        _forbid(parser, args, "tip-height-mm")
    if shape == "bipyramid":
        _require(parser, args, "apex-height-mm")
        _forbid(parser, args, "height-mm")
    else:
        _forbid(parser, args, "apex-height-mm")
    if shape == "carved-sphere":
        _require(parser, args, "faces")
        _forbid(parser, args, "height-mm")
    elif getattr(args, "faces", None) is not None and args.command == "mesh":
        parser.error(f"--faces is not allowed with --shape {shape}")


def _normalized_solid(args):
    """Solid at circumradius 1 built from millimetre flags."""
    r = args.radius_mm
    if not r > 0:
        raise DiceError(f"--radius-mm must be positive, got {r}")
    h = args.height_mm
    shape = args.shape
    if shape == "box":
        return models.BoxSpec(*args.dims)
    if shape == "cylinder":
        return models.CoinSpec(h / r)
    if shape == "prism":
        return models.PrismSpec(args.sides, h / r)
    if shape == "sharpened-prism":
        return models.SharpenedPrismSpec(args.sides, h / r, args.tip_height_mm / r)
    if shape == "bipyramid":
        return models.BipyramidSpec(args.sides, args.apex_height_mm / r)
    raise DiceError(f"unsupported shape {shape}")


def _emit(text, out=None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def cmd_thickness(args, parser):
    if args.model == "dynamic":
        if args.family != "cylinder":
            raise DiceError("the dynamic model is defined for cylinders only")
        t = models.fair_thickness_dynamic(args.faces)
        p_edge = models.dynamic_edge_probability(t)
    else:
        t = models.fair_thickness_geometric(args.faces, args.family)
        if args.family == "cylinder":
            p_edge = models.geometric_face_distribution(models.CoinSpec(t)).side_probability
        else:
            p_edge = models.geometric_face_distribution(
                models.PrismSpec(args.faces - 2, t)).side_probability
    doc = {
        "faces": args.faces,
        "model": args.model,
        "family": args.family,
        "thickness_ratio": t,
        "radius_mm": args.radius_mm,
        "thickness_mm": t * args.radius_mm,
        "side_probability": p_edge,
    }
    _emit(json.dumps(doc, indent=2))


def cmd_prob(args, parser):
    _check_shape_flags(parser, args)
    solid = _normalized_solid(args)
    if args.model == "dynamic":
        if not isinstance(solid, models.CoinSpec):
            raise DiceError("the dynamic model is defined for cylinders only")
        dist = models.dynamic_face_distribution(solid)
    else:
        dist = models.geometric_face_distribution(solid)
    doc = {
        "shape": args.shape,
        "model": dist.model,
        "faces": dist.as_dict(),
        "end_probability": dist.end_probability,
        "side_probability": dist.side_probability,
    }
    _emit(json.dumps(doc, indent=2))


def _design(args):
    layout = sphere_design.cvt_optimize(args.faces, seed=args.seed, tol=args.tol,
                                        max_iter=args.max_iter)
    carved = sphere_design.carve(layout, args.face_fraction, max_displacement=args.max_displacement)
    return layout, carved


def cmd_design_sphere(args, parser):
    layout, carved = _design(args)
    _emit(sphere_design.layout_to_json(layout, carved), args.out)


def cmd_mesh(args, parser):
    _check_shape_flags(parser, args)
    shape = args.shape
    if shape == "prism":
        m = mesh.generate_prism(args.sides, args.height_mm, args.radius_mm)
    elif shape == "sharpened-prism":
        m = mesh.generate_prism(args.sides, args.height_mm, args.radius_mm,
                                sharpened=True, tip_height=args.tip_height_mm)
    elif shape == "bipyramid":
        m = mesh.generate_bipyramid(args.sides, args.apex_height_mm, args.radius_mm)
    elif shape == "cylinder":
        m = mesh.generate_cylinder(args.radius_mm, args.height_mm, args.segments)
    else:
        _, carved = _design(args)
        m = mesh.generate_carved_sphere(carved, args.resolution, args.radius_mm)
    m.validate()
    payload = mesh.export_stl(m) if args.format == "stl" else mesh.export_obj(m).encode()
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
        _emit(json.dumps({"shape": shape, "format": args.format, "out": args.out,
                          "vertices": m.n_vertices, "triangles": m.n_triangles,
                          "volume_mm3": m.signed_volume()}, indent=2))
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()


def cmd_calibrate(args, parser):
    if args.input == "-":
        text = sys.stdin.read()
    else:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    dataset = calibration.parse_toss_csv(text)
    report = calibration.calibrate(dataset, args.faces, args.total, args.scale_ratio)
    for w in report["warnings"]:
        print(f"fairdice: warning: {w}", file=sys.stderr)
    _emit(calibration.report_to_json(report))


def cmd_simulate(args, parser):
    if args.heights is not None:
        if args.shape not in ("cylinder", "prism"):
            parser.error("--heights needs --shape cylinder or prism")
        _forbid(parser, args, "height-mm")
        family = args.shape
        ds = simulate.synthesize_dataset(args.model, family, args.heights, args.radius_mm,
                                         args.trials, args.seed, sides=args.sides,
                                         workers=args.workers)
        _emit(ds.to_csv())
        return
    _check_shape_flags(parser, args)
    solid = _normalized_solid(args)
    if args.model == "dynamic":
        if not isinstance(solid, models.CoinSpec):
            raise DiceError("the dynamic model is defined for cylinders only")
        res = simulate.simulate_dynamic(solid.ratio, args.trials, args.seed, args.workers)
    else:
        res = simulate.simulate_geometric(solid, args.trials, args.seed, args.workers)
    _emit(res.to_json())


COMMANDS = {
    "thickness": cmd_thickness,
    "prob": cmd_prob,
    "design-sphere": cmd_design_sphere,
    "mesh": cmd_mesh,
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args, args.subparser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except DiceError as exc:
        print(f"fairdice: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fairdice: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

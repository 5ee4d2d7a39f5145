"""Command line entry point: ``meterread {synth,align,read,eval}``.

Exit status: 0 on success, 1 on a usage error, 2 when processing fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import load_image, save_image
from .errors import MeterReadError
from .geometry import Homography, QuadOffsets, frame_corners, offsets_to_homography, solve_dlt, Correspondence
from .metrics import evaluate, load_records
from .pipeline import PipelineConfig, SceneInput, run_scene
from .synthmeter import SpecRanges, random_spec, render, synth_prob_matrix, write_scene
from .warp import warp_image

EXIT_OK, EXIT_USAGE, EXIT_PROCESSING = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _cmd_synth(args):
    if args.count < 0:
        raise UsageError("--count must be nonnegative")
    ranges = SpecRanges(image_size=(args.size, args.size), jitter=args.jitter)
    out = Path(args.out)
    for i in range(args.count):
        spec = random_spec([args.seed, i], ranges)
        scene = render(spec)
        probs = None
        if not args.no_probs:
            probs = synth_prob_matrix(spec.key_number, rng=np.random.default_rng([args.seed, i, 1]))
        write_scene(scene, out, f"scene_{i:04d}", probs=probs)
    return EXIT_OK


def _cmd_align(args):
    img = load_image(args.inp)
    obj = json.loads(Path(args.offsets).read_text())
    n = args.size
    w, h = img.width, img.height
    ow, oh = (n, n) if n else (w, h)
    if "h" in obj:
        H = Homography.from_json(obj)
    else:
        rescale = solve_dlt(
            Correspondence(a, b) for a, b in zip(frame_corners(w, h), frame_corners(ow, oh))
        )
        H = rescale @ offsets_to_homography(w, h, QuadOffsets.from_json(obj)).inverse()
    save_image(warp_image(img, H, ow, oh), args.out)
    return EXIT_OK


def _cmd_read(args):
    cfg = PipelineConfig()
    if args.config:
        cfg = PipelineConfig.from_json(Path(args.config).read_text())
    result = run_scene(SceneInput.from_files(args.scene), cfg)
    print(result.to_json())
    return EXIT_OK


def _cmd_eval(args):
    agg = evaluate(load_records(args.pred))
    text = json.dumps(agg, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="meterread", description="Pointer-meter alignment and reading toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("synth", help="render seeded synthetic meter scenes")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--jitter", type=float, default=0.0, help="corner jitter as a fraction of the size")
    s.add_argument("--size", type=int, default=256)
    s.add_argument("--no-probs", action="store_true", help="skip the <base>.probs.json sidecar")
    s.set_defaults(func=_cmd_synth)

    a = sub.add_parser("align", help="warp an image to its front view")
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument("--offsets", required=True, help='JSON with "offsets" (4x2) or "h" (9 numbers)')
    a.add_argument("--out", required=True)
    a.add_argument("--size", type=int, default=0, help="square output size (default: input size)")
    a.set_defaults(func=_cmd_align)

    r = sub.add_parser("read", help="read a scene written by synth")
    r.add_argument("--scene", required=True, help="DIR/basename")
    r.add_argument("--config", help="PipelineConfig JSON")
    r.set_defaults(func=_cmd_read)

    e = sub.add_parser("eval", help="average relative/reference error of JSONL records")
    e.add_argument("--pred", required=True)
    e.add_argument("--out")
    e.set_defaults(func=_cmd_eval)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MeterReadError, OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end composition: align the score maps, recover the key number and
read the dial.  Failures are reported per scene with the stage that raised.

Offsets convention: ``offsets[i]`` displaces frame corner ``i`` to where the
aligned view's corner sits in the detected image, so the homography built
from them maps aligned -> detected and alignment warps with its inverse.
An explicit ``homography`` is taken as the detected -> aligned map itself.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .core import ScoreMap
from .ctc import ProbMatrix, greedy_decode, parse_numeric
from .errors import InvalidConfigError, MeterReadError, StageError
from .geometry import (
    Correspondence,
    Homography,
    QuadOffsets,
    frame_corners,
    offsets_to_homography,
    project,
    solve_dlt,
)
from .metrics import EvalRecord, evaluate
from .reading import DialFrame, ReadingResult, read_meter
from .synthmeter import MeterAnnotation, read_scene
from .warp import warp_image


@dataclass(frozen=True)
class PipelineConfig:
    binarize_tau: float = 0.5
    hough_theta_bins: int = 180
    dial_clockwise: bool = True
    aligned_size: int = 640

    def __post_init__(self):
        if not 0 < self.binarize_tau < 1:
            raise InvalidConfigError("binarize_tau must lie in (0, 1)")
        if self.aligned_size < 32:
            raise InvalidConfigError("aligned_size must be >= 32")
        if self.hough_theta_bins < 1:
            raise InvalidConfigError("hough_theta_bins must be positive")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        unknown = set(obj) - {"binarize_tau", "hough_theta_bins", "dial_clockwise", "aligned_size"}
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True)
class SceneInput:
    """Everything the neural seam would hand over for one meter."""

    pointer_map: ScoreMap
    key_scale_map: ScoreMap
    annotation: Optional[MeterAnnotation] = None
    offsets: Optional[QuadOffsets] = None
    homography: Optional[Homography] = None
    probs: Optional[ProbMatrix] = None
    name: str = ""

    @classmethod
    def from_files(cls, prefix):
        f = read_scene(prefix)
        return cls(f.pointer_map, f.key_scale_map, f.annotation, probs=f.probs, name=str(prefix))


def aligning_homography(scene, cfg):
    """Map from detected-image pixels to the ``aligned_size`` square."""
    if scene.homography is not None:
        return scene.homography
    w, h = scene.pointer_map.width, scene.pointer_map.height
    n = cfg.aligned_size
    rescale = solve_dlt(
        Correspondence(a, b) for a, b in zip(frame_corners(w, h), frame_corners(n, n))
    )
    offsets = scene.offsets
    if offsets is None and scene.annotation is not None:
        offsets = scene.annotation.offsets
    if offsets is None:
        raise InvalidConfigError("scene has neither offsets nor a homography for alignment")
    return rescale @ offsets_to_homography(w, h, offsets).inverse()


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (MeterReadError, ValueError, ArithmeticError) as exc:
        raise StageError(name, exc) from exc


def recognize(scene):
    if scene.probs is not None:
        return parse_numeric(greedy_decode(scene.probs))
    if scene.annotation is not None:
        return parse_numeric(scene.annotation.key_number)
    raise InvalidConfigError("no probability matrix and no annotated key number")


def align(scene, cfg):
    A = aligning_homography(scene, cfg)
    n = cfg.aligned_size
    pm = warp_image(scene.pointer_map, A, n, n)
    km = warp_image(scene.key_scale_map, A, n, n)
    hint = None
    if scene.annotation is not None:
        hint = project(A, scene.annotation.zero_scale)
    return A, pm, km, hint


def run_scene(scene, cfg=PipelineConfig()):
    """Read one scene; errors come back as :class:`StageError`."""
    _, pm, km, hint = _stage("align", align, scene, cfg)
    num_rec = _stage("recognize", recognize, scene)
    c = (cfg.aligned_size - 1) / 2.0
    frame = DialFrame(center=(c, c), clockwise=cfg.dial_clockwise, zero_hint=hint)
    return _stage(
        "read", read_meter, pm, km, num_rec, frame,
        tau=cfg.binarize_tau, theta_bins=cfg.hough_theta_bins,
    )


@dataclass
class SceneOutcome:
    name: str
    result: Optional[ReadingResult] = None
    stage: Optional[str] = None
    error_kind: Optional[str] = None
    message: Optional[str] = None
    ground_truth: Optional[float] = None
    range: Optional[float] = None

    @property
    def ok(self):
        return self.result is not None

    def to_dict(self):
        d = {"name": self.name, "ground_truth": self.ground_truth, "range": self.range}
        if self.ok:
            d["result"] = self.result.to_dict()
        else:
            d["failure"] = {"stage": self.stage, "kind": self.error_kind, "message": self.message}
        return d


@dataclass
class PipelineReport:
    outcomes: list = field(default_factory=list)

    @property
    def successes(self):
        return [o for o in self.outcomes if o.ok]

    @property
    def failures(self):
        return [o for o in self.outcomes if not o.ok]

    def records(self):
        return [
            EvalRecord(o.result.value, o.ground_truth, o.range)
            for o in self.successes
            if o.ground_truth is not None and o.range is not None
        ]

    def aggregates(self):
        recs = [r for r in self.records() if r.ground_truth != 0]
        if not recs:
            return {"rel_percent": None, "ref_percent": None, "n": 0}
        return evaluate(recs)

    def to_dict(self):
        return {
            "scenes": [o.to_dict() for o in self.outcomes],
            "aggregate": self.aggregates(),
            "n_success": len(self.successes),
            "n_failure": len(self.failures),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _outcome(item):
    scene, cfg = item
    ann = scene.annotation
    gt = full_scale = None
    try:
        if ann is not None:
            gt = ann.true_reading
            full_scale = _stage("recognize", parse_numeric, ann.key_number)
        return SceneOutcome(scene.name, run_scene(scene, cfg), ground_truth=gt, range=full_scale)
    except StageError as exc:
        return SceneOutcome(
            scene.name, stage=exc.stage, error_kind=exc.cause_kind, message=str(exc.cause),
            ground_truth=gt, range=full_scale,
        )


def run_batch(scenes, cfg=PipelineConfig(), parallel=False, workers=None):
    """Process scenes independently; the report keeps input order.

    The range used for the reference error is the key number, which is the
    full-scale value of the synthetic dials.
    """
    items = [(s, cfg) for s in scenes]
    if parallel:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_outcome, items))
    else:
        outcomes = [_outcome(it) for it in items]
    return PipelineReport(outcomes)

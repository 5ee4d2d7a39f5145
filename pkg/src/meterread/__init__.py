"""Alignment, post-processing, reading, loss and evaluation maths for
pointer-meter reading, with a synthetic dial renderer for ground truth."""

__version__ = "0.1.0"

from .core import BinaryMask, ImageBuffer, Point2, ScoreMap, load_image, save_image
from .geometry import (
    Correspondence,
    EllipseParams,
    Homography,
    Quad,
    QuadOffsets,
    ellipse_alignment_pairs,
    offsets_to_homography,
    project,
    quad_alignment_pairs,
    solve_dlt,
)
from .warp import bilinear_sample, warp_image
from .postproc import Blob, HoughLine, binarize, blobs, hough_line, thin
from .reading import DialFrame, ReadingResult, compute_reading, read_meter, sweep_angle
from .losses import LossValue, component_loss, dice_loss, mse_offsets, ohem_bce, total_loss
from .ctc import Alphabet, DEFAULT_ALPHABET, ProbMatrix, brute_force_prob, ctc_loss, greedy_decode, parse_numeric
from .metrics import EvalRecord, avg_reference_error, avg_relative_error, mask_iou
from .synthmeter import MeterAnnotation, MeterSpec, SpecRanges, SynthScene, random_spec, render
from .pipeline import PipelineConfig, PipelineReport, SceneInput, run_batch, run_scene

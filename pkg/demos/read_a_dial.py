"""
Reading a dial from its score maps
==================================

The reading step sees two maps: one marking the pointer and one marking the
zero and key scale marks.  Thresholding, thinning and a Hough transform turn
them into a pointer direction and two scale centroids; the reading is then
the swept angle of the pointer as a fraction of the swept angle of the key
scale, times the key number.
"""

import numpy as np

from meterread.postproc import binarize, blobs, hough_line, thin
from meterread.reading import DialFrame, compute_reading, read_meter, sweep_angle
from meterread.synthmeter import MeterSpec, render

# zero scale at 135 deg, key scale 270 deg further clockwise, labelled "10";
# the pointer sits 37% of the way round
spec = MeterSpec(image_size=256, dial_radius=90.0, zero_angle=135.0, span_angle=270.0,
                 pointer_fraction=0.37, key_number="10")
scene = render(spec)
truth = scene.annotation.true_reading
print("true reading:", truth)

# pointer: threshold at 0.5, thin the 3 px stroke to a one-pixel skeleton
pointer = binarize(scene.pointer_map_gt)
skeleton = thin(pointer)
print(f"pointer pixels {pointer.count()}, skeleton pixels {skeleton.count()}")

# the strongest Hough cell gives the pointer's line to the nearest degree
line = hough_line(skeleton)
print(f"Hough line: rho={line.rho:.1f} px, theta={np.degrees(line.theta):.1f} deg")

# the two scale marks are the two 8-connected blobs of the key-scale map
for b in blobs(binarize(scene.key_scale_map_gt)):
    print(f"scale blob at ({b.centroid.x:.2f}, {b.centroid.y:.2f}), {b.area} px")

# the whole chain, with the annotated zero scale telling the two marks apart
ann = scene.annotation
frame = DialFrame(center=ann.dial_center, clockwise=True, zero_hint=ann.zero_scale)
result = read_meter(scene.pointer_map_gt, scene.key_scale_map_gt, 10.0, frame)
print(f"alpha1={result.alpha1:.2f} deg, alpha2={result.alpha2:.2f} deg")
print(f"reading {result.value:.4f} (error {abs(result.value - truth) / truth:.3%})")

# the formula itself is a plain ratio
assert compute_reading(result.alpha1, result.alpha2, 10.0) == result.value
# and sweeps are measured clockwise on screen (y grows downwards)
print("sweep from +x to +y:", sweep_angle((0, 0), (1, 0), (0, 1)), "deg")

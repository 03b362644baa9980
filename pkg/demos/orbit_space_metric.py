#!/usr/bin/env python3
"""The orbit space as a metric cone: distance, segments, strata, angles.

Conjugation orbits of symmetric matrices are points of a flat cone (the
sorted-spectrum chamber).  The quotient distance is the chamber distance,
minimal segments are affine interpolations that never leave the chamber,
and the isotropy strata are read off from eigenvalue multiplicities.

Run:  python demos/orbit_space_metric.py
"""

import numpy as np

from orbitflow import (
    ChamberPoint,
    MatrixModel,
    chamber_map,
    distance,
    minimal_segment,
    segment_angle,
    segment_stratum_check,
    strata_type,
)

model = MatrixModel.real_symmetric(3)
rng = np.random.default_rng(11)

A = model.random_matrix(rng)
B = model.random_matrix(rng)
p = chamber_map(A, model)
q = chamber_map(B, model)
print("two random symmetric 3x3 orbits:")
print("  p =", p)
print("  q =", q)
print("  quotient distance d(p, q) =", distance(p, q))

# the chamber distance is the best case over the whole group orbit
samples = []
for _ in range(2000):
    g = model.random_group_element(rng)
    samples.append(np.linalg.norm(A - g @ B @ g.T))
print(f"  ||A - g B g^-1|| over 2000 sampled g: min {min(samples):.6f}, "
      f"max {max(samples):.6f}  (distance is the lower bound)")

seg = minimal_segment(p, q)
print(f"\nminimal segment of length {seg.length:.6f}; interior stays sorted "
      f"and regular: {segment_stratum_check(seg, samples=64)}")

# strata: multiplicity partitions grade how singular an orbit is
for values in ([3.0, 1.0, 0.0], [2.0, 2.0, 0.0], [1.0, 1.0, 1.0]):
    pt = ChamberPoint(np.array(values))
    print(f"  spectrum {values}: stratum {list(strata_type(pt))}"
          + ("  <- principal (open dense)" if pt.is_regular else ""))

# a segment out of a singular point immediately enters the regular part
wall = ChamberPoint(np.array([1.0, 1.0, 0.0]))
target = ChamberPoint(np.array([2.0, 0.5, -0.5]))
seg2 = minimal_segment(wall, target)
print("\nfrom the wall point (1,1,0) towards (2,.5,-.5):")
for t in (0.0, 0.25, 0.75, 1.0):
    pt = seg2(t)
    print(f"  t={t:4.2f}: {np.round(pt.values, 3)} stratum {list(strata_type(pt))}")

# angles at singular points are measured after minimizing over the
# stabilizer: at a wall point, mirrored directions close up
corner = ChamberPoint(np.array([1.0, 1.0]))
u = np.array([1.0, 0.0])
v = np.array([0.0, 1.0])
plain = np.arccos(np.dot(u, v))
print(f"\nat the wall point (1,1): plain angle between {u} and {v} = "
      f"{plain:.4f} rad, orbit-space angle = "
      f"{segment_angle(corner, u, v):.4f} rad (the swap identifies them)")

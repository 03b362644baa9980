#!/usr/bin/env python3
"""Geodesics of the orbit space are straight lines reflected at the walls.

With zero spin the reduced motion is free, and the chamber boundary acts
as a perfect mirror: the incoming and outgoing angles agree at every wall,
and a corner reflects in every wall it joins.  For commuting matrix data
the billiard path is exactly the sorted eigenvalue flow.

Run:  python demos/chamber_billiards.py [--plot out.png]
"""

import sys

import numpy as np

from orbitflow import MatrixModel, billiard_geodesic, builtin_root_system, eigenflow

rs = builtin_root_system(MatrixModel.real_symmetric(3))
print("chamber: a_1 >= a_2 >= a_3, positive roots (wall normals):")
print(rs.roots)

x0 = np.array([2.0, 0.5, -2.5])
v0 = np.array([-1.1, 0.3, 0.8])
path = billiard_geodesic(rs, x0, v0, 6.0)
print(f"\nray from {x0} with velocity {v0}, traced to t = 6:")
for e in path.events:
    walls = ", ".join(f"a_{i + 1}=a_{j + 1}"
                      for i, j in (rs.realization.root_pairs[w] for w in e.walls))
    ang_in = [float(np.dot(rs.roots[w], e.v_in)) for w in e.walls]
    ang_out = [float(np.dot(rs.roots[w], e.v_out)) for w in e.walls]
    print(f"  t = {e.time:8.5f}  wall {walls}:  root(v_in) = "
          f"{np.round(ang_in, 5)} -> root(v_out) = {np.round(ang_out, 5)}")
print(f"  speed before/after all events: {np.linalg.norm(v0):.12f} / "
      f"{np.linalg.norm(path.velocities[-1]):.12f}")

# commuting matrix data: the billiard IS the eigenvalue flow
a = np.array([1.0, 0.0, -1.0])
v = np.array([-2.0, 0.0, 2.0])
path2 = billiard_geodesic(rs, a, v, 2.0)
ts = np.linspace(0.0, 2.0, 9)
rows = eigenflow(np.diag(a), np.diag(v), times=ts)
print("\ncommuting data: billiard path vs sorted eigenvalues of diag lines")
print("  max difference:", np.max(np.abs(path2.positions(ts) - rows)))

# a ray aimed exactly at the corner a_1 = a_2 = a_3 bounces straight back
corner_path = billiard_geodesic(rs, np.array([1.0, 0.0, -1.0]),
                                np.array([-1.0, 0.0, 1.0]), 4.0)
e = corner_path.events[0]
print(f"\ncorner shot: walls {e.walls} reflected v = {e.v_in} -> {e.v_out}")

if "--plot" in sys.argv:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = sys.argv[sys.argv.index("--plot") + 1] if \
        len(sys.argv) > sys.argv.index("--plot") + 1 else "billiard.png"
    ts = np.linspace(0.0, 6.0, 400)
    pos = path.positions(ts)
    fig, ax = plt.subplots(figsize=(7, 4))
    for k in range(3):
        ax.plot(ts, pos[:, k], label=f"a_{k + 1}")
    for e in path.events:
        ax.axvline(e.time, color="k", lw=0.5, ls=":")
    ax.legend()
    ax.set_xlabel("t")
    ax.set_title("chamber billiard: coordinates reflect at the walls")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"\nwrote {out}")

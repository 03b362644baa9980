#!/usr/bin/env python3
"""Rank-one spin collapses to the classical Calogero-Moser system.

When the conserved momentum has the special form i(c*I + w w*) with all
|w_i|^2 = -c, every off-diagonal spin coupling has the same modulus |c|,
the spin degrees of freedom decouple from the eigenvalue motion, and the
reduced flow is the classical (spinless) Calogero-Moser system

    a_i'' = 2 sum_{j != i} c^2 / (a_i - a_j)^3.

The inverse-square potential is repulsive, so the eigenvalues never meet:
the trajectory avoids the chamber walls.

Run:  python demos/classical_calogero_moser.py
"""

import numpy as np

from orbitflow import (
    MatrixModel,
    ReducedState,
    classical_cm_field,
    integrate,
    reconstruct,
    reduce,
    vector_field,
)

rng = np.random.default_rng(7)
n, c = 4, -0.6

# build the rank-one spin matrix: equal-modulus couplings, zero diagonal
phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n))
w = np.sqrt(-c) * phases
Y = 1j * (c * np.eye(n) + np.outer(w, w.conj()))
np.fill_diagonal(Y, 0.0)

a = np.array([1.8, 0.6, -0.5, -1.9])
p = np.array([-0.5, 0.4, 0.1, 0.0])
state = ReducedState(a=a, p=p, Y=Y, model=MatrixModel.hermitian(n))

d_spin = vector_field(state)
da, dp = classical_cm_field(a, p, c)
print("spin field vs classical field (coupling c = {:.2f}):".format(c))
print("  max |da difference| =", np.max(np.abs(d_spin.da - da)))
print("  max |dp difference| =", np.max(np.abs(d_spin.dp - dp)))

# the canonical gauge of this momentum: first spin column real, rest c*i
reduced_again, frame = reduce(reconstruct(state))
print("\nnormal form of the rank-one spin matrix (moduli):")
print(np.round(np.abs(reduced_again.Y), 6))

traj = integrate(state, 3.0)
print(f"\nintegrated over [0, 3]: {len(traj.step_times)} steps, "
      f"{len(traj.events)} events")
print("  minimal gap along the trajectory:", np.min(traj.min_gap))
print("  gap-floor events:", sum(e.kind == "gap_floor" for e in traj.events),
      " (the walls repel)")
drift = np.max(np.abs(traj.step_energy - traj.step_energy[0]))
print("  energy drift:", drift)

print("\neigenvalues at t = 0, 1.5, 3:")
for t in (0.0, 1.5, 3.0):
    a_t, _, _ = traj.sample(t)
    print(f"  t={t:3.1f}:", np.round(a_t, 4))

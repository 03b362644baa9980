"""Independent ground truth for the reduced dynamics.

The trusted reference for every integrated trajectory is the sorted
eigenvalue flow of the matrix line ``A + t*alpha``, recomputed by a full
eigensolve at each requested time; no continuation tricks.  Closed forms
for the 2x2 symmetric case and the planar rotation action serve as a
second, formula-level cross-check.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .models import MatrixModel


def eigenflow(A, alpha, model: MatrixModel | None = None, times=None) -> np.ndarray:
    """Sorted spectra of ``A + t*alpha``, one row per time.

    Rows are sorted non-increasing; crossings of eigenvalue branches show
    up as kinks, which is exactly the orbit-space picture.
    """
    if times is None:
        raise InputError("times must be provided")
    A = np.asarray(A)
    if model is None:
        kind = "hermitian" if (np.iscomplexobj(A) or np.iscomplexobj(alpha)) \
            else "real_symmetric"
        model = MatrixModel(kind, A.shape[0])
    A = model.validate_matrix(A, "A")
    alpha = model.validate_matrix(alpha, "alpha")
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if not np.all(np.isfinite(ts)):
        raise InputError("times must be finite")
    out = np.empty((ts.size, model.n))
    for k, t in enumerate(ts):
        w = np.linalg.eigvalsh(A + t * alpha)
        out[k] = w[::-1]
    return out


def closed_form_2x2(a1, a2, v1, v2, v3, t):
    """Eigenvalue curves of ``diag(a1,a2) + t*[[v1,v3],[v3,v2]]``.

    Returns ``(lam1, lam2)`` with ``lam1 >= lam2``:

        lam_{1,2}(t) = 1/2 * ( a1+a2 + t(v1+v2)
                               +- sqrt( (a1-a2 + t(v1-v2))^2 + 4 t^2 v3^2 ) ).

    The discriminant is a sum of squares, so the branches are real for
    every t.  Vectorized over ``t``.
    """
    t = np.asarray(t, dtype=float)
    trace = a1 + a2 + t * (v1 + v2)
    root = np.sqrt((a1 - a2 + t * (v1 - v2)) ** 2 + 4.0 * t**2 * v3**2)
    return 0.5 * (trace + root), 0.5 * (trace - root)


def circle_orbit_curve(x, v, t):
    """Radial coordinate of the line ``x + t*v`` under planar rotations.

        r(t) = sqrt( (x1 + t v1)^2 + (x2 + t v2)^2 ).

    For linearly dependent ``x, v`` this is the reflected geodesic
    ``|x + t v|`` on the half-line; for independent data the curve stays
    strictly positive, as if repelled by the origin.  Vectorized over
    ``t``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != (2,) or v.shape != (2,):
        raise InputError("x and v must be 2-vectors")
    t = np.asarray(t, dtype=float)
    return np.sqrt((x[0] + t * v[0]) ** 2 + (x[1] + t * v[1]) ** 2)


def compare_to_eigenflow(trajectory, A, alpha, extra_times=200):
    """Max deviation per eigenvalue channel between a trajectory and the flow.

    The comparison grid is the union of the trajectory's sample times, its
    accepted integrator steps, and ``extra_times`` uniform samples.
    Returns ``(max_per_channel, grid)``.
    """
    t0, t1 = float(trajectory.times[0]), float(trajectory.times[-1])
    grid = np.union1d(
        np.union1d(trajectory.times, trajectory.step_times),
        np.linspace(t0, t1, int(extra_times)),
    )
    flows = eigenflow(A, alpha, times=grid)
    dev = np.zeros(flows.shape[1])
    for k, t in enumerate(grid):
        a, _, _ = trajectory.sample(t)
        dev = np.maximum(dev, np.abs(a - flows[k]))
    return dev, grid

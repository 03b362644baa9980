"""Reduced Hamiltonian dynamics: spin Calogero-Moser flows.

In the reduced coordinates ``(a, p, Y)`` the straight-line flow of the
matrix space becomes

    da_i/dt = p_i
    dp_i/dt = 2 * sum_{j : a_j != a_i} |Y_ij|^2 / (a_i - a_j)^3
    dY/dt   = [Z, Y],      Z_ij = Y_ij / (a_i - a_j)^2  (Z_ii = 0),

a Calogero-Moser system with spin: repulsive inverse-cube forces between
eigenvalues coupled to an isospectral rotation of the spin matrix.  The
sign of the spin equation is fixed by two checks carried out in the test
suite: exact conservation of the reduced Hamiltonian along the field, and
agreement of the integrated flow with the independent eigenvalue oracle.

Degenerate pairs present at the initial time are frozen as an exact
sparsity pattern of ``Y`` and excluded from all sums; the corresponding
blocks stay decoupled whenever the initial spin matrix is block-diagonal
across the degeneracy (the regime in which the reduced equations are
valid there).  A runtime monitor aborts the integration if the spin
derivative on the frozen pattern ever becomes significant, rather than
silently integrating equations that no longer apply.

Integration happens in label space: coordinates keep their index even if
they cross (which only zero-coupled pairs can do), and sample states are
sorted back into the chamber, recording each crossing as a reflection
event.  For a vanishing spin matrix this reproduces exactly the straight
lines reflected at the chamber walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .chamber import DEFAULT_DEGENERACY_TOL
from .errors import InputError, IntegrationError
from .models import MatrixModel
from .reduction import ReducedState

SPIN_EQUATION = "dY/dt = [Z, Y] with Z_ij = Y_ij/(a_i - a_j)^2"

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_GAP_FLOOR = 1e-7
FROZEN_DRIFT_TOL = 1e-10


@dataclass(frozen=True)
class ReducedDerivative:
    """Tangent vector at a reduced state: ``(da, dp, dY)``."""

    da: np.ndarray
    dp: np.ndarray
    dY: np.ndarray


@dataclass(frozen=True)
class Event:
    """Something noticed during integration (reflection, gap underflow...)."""

    kind: str
    time: float
    info: dict


@dataclass(frozen=True)
class Trajectory:
    """Time-sampled reduced states with conservation diagnostics.

    ``times``/``states`` hold the requested sample grid (states sorted into
    the chamber).  ``step_*`` arrays hold the diagnostics recorded at every
    accepted integrator step, which is where conservation drift should be
    measured.  ``sample(t)`` evaluates the dense solution at any time
    inside the integrated range and returns chamber-ordered ``(a, p, Y)``.
    """

    times: np.ndarray
    states: tuple
    energy: np.ndarray
    casimir: np.ndarray
    min_gap: np.ndarray
    step_times: np.ndarray
    step_energy: np.ndarray
    step_casimir: np.ndarray
    events: tuple
    meta: dict
    _sol: object = field(repr=False, default=None)
    _n: int = 0
    _model: MatrixModel = None

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def sample(self, t: float):
        """Chamber-ordered ``(a, p, Y)`` at time ``t`` (dense output)."""
        y = self._sol(t)
        a, p, Y = unpack_state(y, self._n, self._model)
        return _sort_into_chamber(a, p, Y)[:3]

    def final_state(self) -> ReducedState:
        return self.states[-1]


def _pairs(n):
    """Strict-lower-triangle index pairs in lexicographic order."""
    return [(i, j) for i in range(1, n) for j in range(i)]


_PAIR_IDX = {}


def _pair_idx(n):
    if n not in _PAIR_IDX:
        pr = _pairs(n)
        _PAIR_IDX[n] = (
            np.array([i for i, _ in pr], dtype=int),
            np.array([j for _, j in pr], dtype=int),
        )
    return _PAIR_IDX[n]


def pack_state(a, p, Y, model: MatrixModel) -> np.ndarray:
    """Flatten ``(a, p, Y)`` to a real vector (lower triangle of Y only)."""
    n = model.n
    ii, jj = _pair_idx(n)
    low = np.asarray(Y)[ii, jj]
    parts = [np.asarray(a, float), np.asarray(p, float), low.real]
    if model.is_complex:
        parts.append(low.imag)
    return np.concatenate(parts)


def unpack_state(y, n: int, model: MatrixModel):
    """Inverse of :func:`pack_state`; rebuilds the full skew matrix."""
    a = y[:n]
    p = y[n : 2 * n]
    m = n * (n - 1) // 2
    if model.is_complex:
        low = y[2 * n : 2 * n + m] + 1j * y[2 * n + m : 2 * n + 2 * m]
    else:
        low = y[2 * n : 2 * n + m].astype(model.dtype)
    ii, jj = _pair_idx(n)
    Y = np.zeros((n, n), dtype=model.dtype)
    Y[ii, jj] = low
    Y[jj, ii] = -np.conj(low)
    return a, p, Y


def state_dim(n: int, model: MatrixModel) -> int:
    m = n * (n - 1) // 2
    return 2 * n + (2 * m if model.is_complex else m)


def _field_arrays(a, p, Y, frozen, spin_sign=1.0):
    """Core vector field on raw arrays.

    Returns ``(da, dp, dY, frozen_residual)`` where ``frozen_residual`` is
    the max magnitude the spin derivative would have on the frozen pattern
    if it were not structurally zeroed.
    """
    G = a[:, None] - a[None, :]
    W = np.abs(Y) ** 2
    mask = (~frozen) & (G != 0.0) & (W > 0.0)
    force = np.zeros_like(G)
    force[mask] = W[mask] / G[mask] ** 3
    dp = 2.0 * force.sum(axis=1)
    Z = np.zeros_like(Y)
    Z[mask] = Y[mask] / G[mask] ** 2
    dY = spin_sign * (Z @ Y - Y @ Z)
    offdiag_frozen = frozen & ~np.eye(len(a), dtype=bool)
    residual = float(np.max(np.abs(dY[offdiag_frozen]))) if offdiag_frozen.any() else 0.0
    dY[frozen] = 0.0
    return p.copy(), dp, dY, residual


def vector_field(s: ReducedState, model: MatrixModel | None = None) -> ReducedDerivative:
    """The reduced equations of motion evaluated at one state."""
    model = model or s.model
    da, dp, dY, _ = _field_arrays(s.a, s.p, s.Y, s.frozen_mask)
    return ReducedDerivative(da=da, dp=dp, dY=dY)


def hamiltonian_reduced(s: ReducedState) -> float:
    """Reduced energy ``sum(p^2)/2 + sum_{a_i != a_j} |Y_ij|^2/(a_i-a_j)^2 / 2``."""
    return _energy_arrays(s.a, s.p, s.Y, s.frozen_mask)


def _energy_arrays(a, p, Y, frozen) -> float:
    G = a[:, None] - a[None, :]
    W = np.abs(Y) ** 2
    mask = (~frozen) & (G != 0.0) & (W > 0.0)
    pot = float(np.sum(W[mask] / G[mask] ** 2))
    return 0.5 * float(np.dot(p, p)) + 0.5 * pot


def casimirs(Y, kmax: int = 3) -> np.ndarray:
    """Spectral invariants ``Tr((Y Y*)^k)``, ``k = 1..kmax``.

    The spin flow is isospectral, so these are conserved along every
    trajectory.
    """
    if kmax < 1:
        raise InputError("kmax must be >= 1")
    Y = np.asarray(Y)
    M = Y @ Y.conj().T
    out = np.empty(kmax)
    P = np.eye(Y.shape[0], dtype=M.dtype)
    for k in range(kmax):
        P = P @ M
        out[k] = float(np.trace(P).real)
    return out


def z_matrix(s: ReducedState) -> np.ndarray:
    """Derived matrix ``Z_ij = Y_ij/(a_i - a_j)^2`` (zero on frozen pairs)."""
    G = s.a[:, None] - s.a[None, :]
    mask = (~s.frozen_mask) & (G != 0.0)
    Z = np.zeros_like(s.Y)
    Z[mask] = s.Y[mask] / G[mask] ** 2
    return Z


def classical_cm_field(a, p, c: float, tol: float = 0.0):
    """Spinless Calogero-Moser field with coupling ``c``.

    ``da = p``; ``dp_i = 2 sum_{j != i} c^2/(a_i - a_j)^3`` with pairs
    closer than ``tol`` treated as a degenerate block exerting no force on
    each other.  This is the reduced field of a rank-one spin matrix whose
    off-diagonal entries all have modulus ``|c|``.
    """
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(np.diff(a) > 0):
        raise InputError("a must be sorted non-increasing")
    G = a[:, None] - a[None, :]
    mask = np.abs(G) > tol
    force = np.zeros_like(G)
    force[mask] = c**2 / G[mask] ** 3
    return p.copy(), 2.0 * force.sum(axis=1)


def _sort_into_chamber(a, p, Y):
    """Sort labels into non-increasing order, permuting p and Y along."""
    perm = np.argsort(-a, kind="stable")
    if np.array_equal(perm, np.arange(a.size)):
        return a, p, Y, perm
    return a[perm], p[perm], Y[np.ix_(perm, perm)], perm


def _min_offdiag_gap(a) -> float:
    d = np.abs(a[:, None] - a[None, :])
    n = a.size
    if n == 1:
        return np.inf
    return float(np.min(d[~np.eye(n, dtype=bool)]))


def integrate(
    s0: ReducedState,
    t_end: float,
    model: MatrixModel | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    samples: int = 200,
    gap_floor: float = DEFAULT_GAP_FLOOR,
    debug_flip_sign: bool = False,
) -> Trajectory:
    """Integrate the reduced flow over ``[0, t_end]``.

    Adaptive embedded Runge-Kutta 5(4) with dense output; diagnostics
    (energy, spectral invariants, minimal gap) are recorded at every
    accepted step and on the uniform sample grid.  If the gap of any pair
    with nonzero coupling falls below ``gap_floor``, or the frozen-pattern
    monitor trips, an :class:`IntegrationError` carrying the partial
    trajectory is raised with the event recorded.

    ``debug_flip_sign`` integrates the spin equation with the opposite
    sign; it exists as a negative control for oracle comparisons.
    """
    if t_end <= 0:
        raise InputError("t_end must be positive")
    if rtol <= 0 or atol <= 0:
        raise InputError("tolerances must be positive")
    model = model or s0.model
    n = model.n
    frozen = s0.frozen_mask
    spin_sign = -1.0 if debug_flip_sign else 1.0
    active_tol = 1e-12 * max(1.0, float(np.max(np.abs(s0.Y))))

    g0 = np.abs(s0.a[:, None] - s0.a[None, :])
    active0 = (~frozen) & (np.abs(s0.Y) > active_tol)
    if active0.any() and float(np.min(g0[active0])) < gap_floor:
        raise InputError(
            "initial state has a coupled pair closer than gap_floor "
            f"({float(np.min(g0[active0])):.3e} < {gap_floor:g})"
        )

    def rhs(t, y):
        a, p, Y = unpack_state(y, n, model)
        da, dp, dY, _ = _field_arrays(a, p, Y, frozen, spin_sign)
        return pack_state(da, dp, dY, model)

    def gap_guard(t, y):
        a, _, Y = unpack_state(y, n, model)
        G = np.abs(a[:, None] - a[None, :])
        active = (~frozen) & (np.abs(Y) > active_tol)
        if not active.any():
            return 1.0
        return float(np.min(G[active])) - gap_floor

    gap_guard.terminal = True
    gap_guard.direction = -1

    y0 = pack_state(s0.a, s0.p, s0.Y, model)
    sol = solve_ivp(
        rhs,
        (0.0, float(t_end)),
        y0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=[gap_guard],
    )

    meta = {
        "model": model.kind,
        "n": n,
        "t_end": float(t_end),
        "rtol": rtol,
        "atol": atol,
        "gap_floor": gap_floor,
        "spin_equation": SPIN_EQUATION if not debug_flip_sign
        else "debug: flipped-sign spin equation",
        "degeneracy_tol": s0.tol,
        "frozen_pairs": [
            (i, j) for i, j in _pairs(n) if frozen[i, j]
        ],
    }

    events = []
    t_stop = None
    fail_msg = None

    # frozen-pattern monitor at accepted steps
    step_ok = len(sol.t)
    if frozen.sum() > n:
        for k, t in enumerate(sol.t):
            a, p, Y = unpack_state(sol.y[:, k], n, model)
            _, dp, dY, residual = _field_arrays(a, p, Y, frozen, spin_sign)
            scale = max(1.0, float(np.max(np.abs(dY))), float(np.max(np.abs(dp))))
            if residual > FROZEN_DRIFT_TOL * scale:
                events.append(Event("frozen_drift", float(t),
                                    {"residual": residual}))
                step_ok = k + 1
                t_stop = float(t)
                fail_msg = (
                    f"frozen spin pattern would drift at t={t:.6g} "
                    f"(residual {residual:.3e}); degenerate blocks coupled "
                    "through the spin matrix are outside the reduced "
                    "equations' regime"
                )
                break

    step_t = sol.t[:step_ok]
    if sol.status == 1 and fail_msg is None:  # gap guard fired
        t_stop = float(sol.t_events[0][0])
        a, _, Y = unpack_state(sol.sol(t_stop), n, model)
        G = np.abs(a[:, None] - a[None, :])
        active = (~frozen) & (np.abs(Y) > active_tol)
        pair = np.unravel_index(np.argmin(np.where(active, G, np.inf)), G.shape)
        events.append(Event("gap_floor", t_stop,
                            {"pair": (int(pair[0]), int(pair[1])),
                             "gap": float(G[pair])}))
        fail_msg = (
            f"gap of coupled pair {tuple(int(v) for v in pair)} fell below "
            f"gap_floor={gap_floor:g} at t={t_stop:.6g}"
        )
    elif sol.status == -1 and fail_msg is None:
        t_stop = float(sol.t[-1])
        fail_msg = f"integrator step failure at t={t_stop:.6g}: {sol.message}"

    t_reached = t_stop if t_stop is not None else float(t_end)
    if step_t.size and step_t[-1] > t_reached:
        step_t = step_t[step_t <= t_reached]

    # label crossings (sign changes of pair gaps): transparent Weyl
    # reflections when the coupling vanishes there, otherwise the pair
    # necessarily dipped through gap_floor -- even inside a single step
    crossings = []
    for i, j in _pairs(n):
        if step_t.size < 2:
            break
        gvals = sol.sol(step_t)[i] - sol.sol(step_t)[j]
        for k in range(len(step_t) - 1):
            if gvals[k] * gvals[k + 1] < 0:
                tc = brentq(lambda t: sol.sol(t)[i] - sol.sol(t)[j],
                            step_t[k], step_t[k + 1])
                crossings.append((float(tc), i, j))
    crossings.sort()
    for tc, i, j in crossings:
        if tc > t_reached:
            break
        _, _, Yc = unpack_state(sol.sol(tc), n, model)
        if abs(Yc[i, j]) > active_tol:
            # truncate where the gap reached the floor, before the crossing
            def floor_fn(t):
                return abs(sol.sol(t)[i] - sol.sol(t)[j]) - gap_floor

            before = [tt for tt in step_t if tt < tc and floor_fn(tt) > 0]
            t_floor = brentq(floor_fn, before[-1], tc) if before else tc
            events.append(Event("gap_floor", float(t_floor),
                                {"pair": (i, j), "gap": gap_floor}))
            t_stop = float(t_floor)
            fail_msg = (
                f"coupled pair ({i}, {j}) crossed a wall near t={tc:.6g}; "
                f"its gap fell below gap_floor={gap_floor:g}"
            )
            t_reached = t_stop
            step_t = step_t[step_t <= t_reached]
            break
        events.append(Event("reflection", tc, {"pair": (i, j)}))
    events = [e for e in events if e.time <= t_reached]
    events.sort(key=lambda e: e.time)

    grid = np.linspace(0.0, t_reached, samples + 1)
    states = []
    energy = np.empty(grid.size)
    cas = np.empty((grid.size, 3))
    min_gap = np.empty(grid.size)
    for k, t in enumerate(grid):
        a, p, Y = unpack_state(sol.sol(t), n, model)
        a, p, Y, _ = _sort_into_chamber(a, p, Y)
        states.append(ReducedState(a=a, p=p, Y=Y, model=model, tol=s0.tol))
        energy[k] = _energy_arrays(a, p, Y, states[-1].frozen_mask)
        cas[k] = casimirs(Y, 3)
        min_gap[k] = _min_offdiag_gap(a)

    step_energy = np.empty(step_t.size)
    step_cas = np.empty((step_t.size, 3))
    for k, t in enumerate(step_t):
        a, p, Y = unpack_state(sol.sol(t), n, model)
        step_energy[k] = _energy_arrays(a, p, Y, frozen)
        step_cas[k] = casimirs(Y, 3)

    traj = Trajectory(
        times=grid,
        states=tuple(states),
        energy=energy,
        casimir=cas,
        min_gap=min_gap,
        step_times=step_t,
        step_energy=step_energy,
        step_casimir=step_cas,
        events=tuple(events),
        meta=meta,
        _sol=sol.sol,
        _n=n,
        _model=model,
    )
    if fail_msg is not None:
        raise IntegrationError(fail_msg, trajectory=traj)
    return traj


def _jvp_arrays(a, p, Y, da, dp, dY, frozen, spin_sign=1.0):
    """Directional derivative of the vector field at ``(a,p,Y)``."""
    G = a[:, None] - a[None, :]
    dG = da[:, None] - da[None, :]
    W = np.abs(Y) ** 2
    mask = (~frozen) & (G != 0.0)
    forceW = (~frozen) & (G != 0.0) & (W > 0.0)

    ddp = np.zeros_like(G)
    cross = 2.0 * np.real(np.conj(Y) * dY)
    ddp[mask] = 2.0 * cross[mask] / G[mask] ** 3
    ddp[forceW] += -6.0 * W[forceW] * dG[forceW] / G[forceW] ** 4
    ddp = ddp.sum(axis=1)

    Z = np.zeros_like(Y)
    Z[mask] = Y[mask] / G[mask] ** 2
    dZ = np.zeros_like(Y)
    dZ[mask] = dY[mask] / G[mask] ** 2 - 2.0 * Y[mask] * dG[mask] / G[mask] ** 3
    ddY = spin_sign * ((dZ @ Y - Y @ dZ) + (Z @ dY - dY @ Z))
    ddY[frozen] = 0.0
    return dp.copy(), ddp, ddY


@dataclass(frozen=True)
class VariationalTrajectory:
    """A trajectory together with its linearized perturbation flow."""

    times: np.ndarray
    states: tuple
    delta_a: np.ndarray
    delta_p: np.ndarray
    delta_Y: np.ndarray
    meta: dict
    _sol: object = field(repr=False, default=None)
    _n: int = 0
    _model: MatrixModel = None

    def sample(self, t: float):
        """``(a, p, Y, da, dp, dY)`` at time ``t``, chamber-ordered."""
        n, model = self._n, self._model
        dim = state_dim(n, model)
        y = self._sol(t)
        a, p, Y = unpack_state(y[:dim], n, model)
        da, dp, dY = unpack_state(y[dim:], n, model)
        a, p, Y, perm = _sort_into_chamber(a, p, Y)
        return a, p, Y, da[perm], dp[perm], dY[np.ix_(perm, perm)]


def variational_flow(
    s0: ReducedState,
    ds0: ReducedDerivative,
    t_end: float,
    model: MatrixModel | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    samples: int = 200,
) -> VariationalTrajectory:
    """Linearized flow: evolve a tangent perturbation along a trajectory.

    The perturbation obeys the exact directional derivative of the vector
    field along the base solution, so at time ``t`` it approximates
    ``d/d(eps) of the flow of s0 + eps*ds0``.  In the free case (zero spin
    matrix) the perturbation grows affinely:
    ``delta_a(t) = delta_a(0) + t*delta_p(0)``.
    """
    if t_end <= 0:
        raise InputError("t_end must be positive")
    model = model or s0.model
    n = model.n
    frozen = s0.frozen_mask
    dY0 = np.asarray(ds0.dY, dtype=model.dtype)
    scale = max(1.0, float(np.max(np.abs(dY0))))
    if np.max(np.abs(dY0 + dY0.conj().T)) > 1e-10 * scale:
        raise InputError("perturbation dY must be skew-Hermitian")
    dY0 = (dY0 - dY0.conj().T) / 2.0
    dY0[frozen] = 0.0

    dim = state_dim(n, model)

    def rhs(t, y):
        a, p, Y = unpack_state(y[:dim], n, model)
        da, dp, dY = unpack_state(y[dim:], n, model)
        f = _field_arrays(a, p, Y, frozen)[:3]
        df = _jvp_arrays(a, p, Y, da, dp, dY, frozen)
        return np.concatenate(
            [pack_state(*f, model), pack_state(*df, model)]
        )

    y0 = np.concatenate(
        [
            pack_state(s0.a, s0.p, s0.Y, model),
            pack_state(np.asarray(ds0.da, float), np.asarray(ds0.dp, float),
                       dY0, model),
        ]
    )
    sol = solve_ivp(rhs, (0.0, float(t_end)), y0, method="RK45",
                    rtol=rtol, atol=atol, dense_output=True)
    if sol.status != 0:
        raise IntegrationError(f"variational integration failed: {sol.message}")

    grid = np.linspace(0.0, float(t_end), samples + 1)
    states = []
    d_a = np.empty((grid.size, n))
    d_p = np.empty((grid.size, n))
    d_Y = np.empty((grid.size, n, n), dtype=model.dtype)
    for k, t in enumerate(grid):
        y = sol.sol(t)
        a, p, Y = unpack_state(y[:dim], n, model)
        da, dp, dY = unpack_state(y[dim:], n, model)
        a, p, Y, perm = _sort_into_chamber(a, p, Y)
        states.append(ReducedState(a=a, p=p, Y=Y, model=model, tol=s0.tol))
        d_a[k] = da[perm]
        d_p[k] = dp[perm]
        d_Y[k] = dY[np.ix_(perm, perm)]

    meta = {"model": model.kind, "n": n, "t_end": float(t_end),
            "rtol": rtol, "atol": atol, "spin_equation": SPIN_EQUATION}
    return VariationalTrajectory(
        times=grid, states=tuple(states), delta_a=d_a, delta_p=d_p,
        delta_Y=d_Y, meta=meta, _sol=sol.sol, _n=n, _model=model,
    )

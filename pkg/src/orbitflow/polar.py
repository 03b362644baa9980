"""Restricted root systems on a section and the generalized reduced flow.

For a polar action the orbit space is a Weyl chamber in a section, and the
reduced dynamics is driven by restricted-root data: linear functionals
``lambda`` on the section with multiplicities ``k_lambda`` and a labelled
root-space basis ``E_lambda^i`` (group side), ``B_lambda^i`` (section
side) obeying

    [A, E_lambda^i] = lambda(A) * B_lambda^i,
    [A, B_lambda^i] = lambda(A) * E_lambda^i      for A in the section.

With spin coefficients ``Y_lambda = (Y_lambda^i)`` the reduced equations
read

    dA/dt  = p
    <dp/dt, .> = sum_lambda ||Y_lambda||^2 / lambda(A)^3 * lambda
    dY/dt  = [Z, Y],   Z = sum_lambda lambda(A)^{-2} * Y_lambda,

where the spin bracket is evaluated through structure constants
``[E_l^i, E_m^j] = sum N * E_target + (Cartan part)``.  Cartan components
always cancel out of ``[Z, Y]`` because ``Z`` is parallel to ``Y`` within
each root space; :func:`spin_bracket_h_residual` checks this numerically.

Root data is supplied explicitly: built in for the matrix models (type
A_{n-1}, structure constants computed from matrix commutators) or loaded
from a text file.  User data is validated by :func:`verify_root_system`
rather than trusted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .chamber import DEFAULT_DEGENERACY_TOL
from .dynamics import Event, casimirs
from .errors import InputError, IntegrationError, InvariantError
from .models import HERMITIAN, MatrixModel
from .reduction import STRUCTURAL_ZERO_TOL, ReducedState

VERIFY_THRESHOLD = 1e-10


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class PolarRealization:
    """Explicit matrices behind an abstract root system (when available)."""

    model: MatrixModel
    section_basis: tuple          # orthonormal basis of the section
    E: tuple                      # E[r][i], group-side root basis
    B: tuple                      # B[r][i], section-side root basis
    H: tuple                      # Cartan basis of the stabilizer algebra
    root_pairs: tuple = ()        # for type A: matrix index pair per root


@dataclass(frozen=True, eq=False)
class RestrictedRootSystem:
    """Positive restricted roots with multiplicities and a bracket oracle.

    Parameters
    ----------
    section_dim : int
        Dimension of the section; root coefficient vectors live in it.
    roots : ndarray, shape (R, section_dim)
        Positive roots as coefficient vectors in an orthonormal section
        basis (roots come in +- pairs; only the positive ones are stored,
        and the closed chamber is ``{x : lambda(x) >= 0 for all}``).
    multiplicities : tuple of int
        ``k_lambda`` per root: the number of labelled basis elements.
    h_dim : int
        Dimension of the Cartan part appearing in brackets of opposite
        root-space elements.
    bracket_table : dict
        Sparse structure constants.  Keys are ordered label pairs, values
        map target labels to coefficients.  Labels are ``("E", r, i)`` or
        ``("H", m)``; absent entries mean a zero bracket.
    """

    section_dim: int
    roots: np.ndarray
    multiplicities: tuple
    h_dim: int
    bracket_table: dict
    realization: PolarRealization | None = None
    name: str = ""

    def __post_init__(self):
        roots = np.array(self.roots, dtype=float)
        if roots.ndim != 2 or roots.shape[1] != self.section_dim:
            raise InputError("roots must have shape (R, section_dim)")
        if len(self.multiplicities) != roots.shape[0]:
            raise InputError("one multiplicity per root required")
        if any(m < 1 for m in self.multiplicities):
            raise InputError("multiplicities must be positive")
        roots.flags.writeable = False
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "multiplicities", tuple(int(m) for m in self.multiplicities))

    @property
    def n_roots(self) -> int:
        return self.roots.shape[0]

    @property
    def spin_dim(self) -> int:
        return int(sum(self.multiplicities))

    def root_values(self, x) -> np.ndarray:
        """``lambda(x)`` for every positive root."""
        return self.roots @ np.asarray(x, dtype=float)

    def in_chamber(self, x, atol: float = 1e-12) -> bool:
        return bool(np.all(self.root_values(x) >= -atol))

    def bracket(self, la, lb) -> dict:
        """Expansion of ``[la, lb]``; empty dict means zero."""
        return self.bracket_table.get((la, lb), {})

    def e_labels(self):
        return [("E", r, i) for r in range(self.n_roots)
                for i in range(self.multiplicities[r])]

    def h_labels(self):
        return [("H", m) for m in range(self.h_dim)]

    # flattened spin-coefficient indexing -----------------------------------
    def flat_offsets(self):
        return np.concatenate([[0], np.cumsum(self.multiplicities)])

    def flatten_spin(self, Yroots) -> np.ndarray:
        return np.concatenate([np.asarray(y, dtype=float) for y in Yroots])

    def split_spin(self, flat) -> tuple:
        off = self.flat_offsets()
        return tuple(np.asarray(flat[off[r]: off[r + 1]], dtype=float)
                     for r in range(self.n_roots))

    def _compiled(self):
        """COO form of the E-E bracket rows, cached for field evaluation."""
        cached = getattr(self, "_compiled_cache", None)
        if cached is not None:
            return cached
        off = self.flat_offsets()
        flat = {lab: off[lab[1]] + lab[2] for lab in self.e_labels()}
        ia, ib, it, vv = [], [], [], []
        ha, hb, hm, hv = [], [], [], []
        for (la, lb), expansion in self.bracket_table.items():
            if la[0] != "E" or lb[0] != "E":
                continue
            for target, val in expansion.items():
                if target[0] == "E":
                    ia.append(flat[la])
                    ib.append(flat[lb])
                    it.append(flat[target])
                    vv.append(val)
                else:
                    ha.append(flat[la])
                    hb.append(flat[lb])
                    hm.append(target[1])
                    hv.append(val)
        compiled = (
            np.array(ia, int), np.array(ib, int), np.array(it, int),
            np.array(vv, float),
            np.array(ha, int), np.array(hb, int), np.array(hm, int),
            np.array(hv, float),
        )
        object.__setattr__(self, "_compiled_cache", compiled)
        return compiled


@dataclass(frozen=True, eq=False)
class PolarReducedState:
    """Reduced state in section coordinates: ``(A0, p0, Y_lambda)``.

    Invariants: ``A0`` lies in the closed chamber, and ``Y_lambda = 0`` for
    every root vanishing on ``A0`` (within ``tol``); violating spin
    coefficients raise :class:`InvariantError`, sub-threshold residue is
    zeroed.
    """

    rs: RestrictedRootSystem
    A0: np.ndarray
    p0: np.ndarray
    Yroots: tuple
    tol: float = DEFAULT_DEGENERACY_TOL
    frozen_roots: tuple = field(init=False)

    def __post_init__(self):
        d = self.rs.section_dim
        A0 = np.array(self.A0, dtype=float)
        p0 = np.array(self.p0, dtype=float)
        if A0.shape != (d,) or p0.shape != (d,):
            raise InputError(f"A0 and p0 must have shape ({d},)")
        lam = self.rs.root_values(A0)
        scale = max(1.0, float(np.max(np.abs(A0))))
        if np.any(lam < -1e-12 * scale):
            raise InputError("A0 is outside the closed chamber")
        if len(self.Yroots) != self.rs.n_roots:
            raise InputError("one spin coefficient vector per root required")
        spin_scale = max(
            1.0,
            max((float(np.max(np.abs(np.asarray(y, dtype=float)), initial=0.0))
                 for y in self.Yroots), default=0.0),
        )
        Yroots = []
        frozen = []
        for r, y in enumerate(self.Yroots):
            y = np.array(y, dtype=float)
            if y.shape != (self.rs.multiplicities[r],):
                raise InputError(
                    f"spin coefficients of root {r} must have length "
                    f"{self.rs.multiplicities[r]}"
                )
            if lam[r] <= self.tol:
                if np.max(np.abs(y), initial=0.0) > STRUCTURAL_ZERO_TOL * spin_scale:
                    raise InvariantError(
                        f"spin coefficients of root {r} must vanish on its wall"
                    )
                y[:] = 0.0
                frozen.append(r)
            y.flags.writeable = False
            Yroots.append(y)
        A0.flags.writeable = False
        p0.flags.writeable = False
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "Yroots", tuple(Yroots))
        object.__setattr__(self, "frozen_roots", tuple(frozen))


@dataclass(frozen=True)
class PolarDerivative:
    dA0: np.ndarray
    dp0: np.ndarray
    dYroots: tuple


# ---------------------------------------------------------------------------
# builtin type A data for the matrix models


def _section_basis(n):
    mats = []
    for k in range(n):
        M = np.zeros((n, n))
        M[k, k] = 1.0
        mats.append(M)
    return tuple(mats)


def _cartan_basis_su(n):
    """Orthonormal basis of the diagonal traceless skew-Hermitian matrices."""
    mats = []
    for m in range(1, n):
        d = np.zeros(n)
        d[:m] = 1.0
        d[m] = -m
        d = d / np.sqrt(m * (m + 1))
        mats.append(1j * np.diag(d).astype(np.complex128))
    return tuple(mats)


def builtin_root_system(model: MatrixModel) -> RestrictedRootSystem:
    """Type A_{n-1} restricted-root data of a matrix model.

    Positive roots are ``a_i - a_j`` for ``i < j`` (pairs in lexicographic
    order), multiplicity 1 for the symmetric model and 2 for the Hermitian
    one.  Basis elements are normalized elementary-matrix combinations and
    all structure constants are computed from explicit commutators.
    """
    n = model.n
    cplx = model.is_complex
    dt = model.dtype
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    R = len(pairs)
    roots = np.zeros((R, n))
    E, B = [], []
    s2 = np.sqrt(2.0)
    for r, (i, j) in enumerate(pairs):
        roots[r, i] = 1.0
        roots[r, j] = -1.0
        Eij = np.zeros((n, n), dtype=dt)
        Eij[i, j] = 1.0
        Eji = np.zeros((n, n), dtype=dt)
        Eji[j, i] = 1.0
        e1 = (Eij - Eji) / s2
        b1 = (Eij + Eji) / s2
        if cplx:
            e2 = 1j * (Eij + Eji) / s2
            b2 = 1j * (Eij - Eji) / s2
            E.append((e1, e2))
            B.append((b1, b2))
        else:
            E.append((e1,))
            B.append((b1,))
    mult = tuple(2 if cplx else 1 for _ in range(R))
    H = _cartan_basis_su(n) if cplx else ()

    labels = [("E", r, i) for r in range(R) for i in range(len(E[r]))]
    labels += [("H", m) for m in range(len(H))]

    def mat_of(label):
        return E[label[1]][label[2]] if label[0] == "E" else H[label[1]]

    def expand(C):
        out = {}
        for lab in labels:
            M = mat_of(lab)
            coeff = float(np.real(np.sum(C * np.conj(M))))
            if abs(coeff) > 1e-14:
                out[lab] = coeff
        return out

    table = {}
    for la, lb in itertools.product(labels, labels):
        Ma, Mb = mat_of(la), mat_of(lb)
        C = Ma @ Mb - Mb @ Ma
        expansion = expand(C)
        if expansion:
            table[(la, lb)] = expansion

    realization = PolarRealization(
        model=model,
        section_basis=_section_basis(n),
        E=tuple(tuple(e) for e in E),
        B=tuple(tuple(b) for b in B),
        H=H,
        root_pairs=tuple(pairs),
    )
    kind = "hermitian" if cplx else "symmetric"
    return RestrictedRootSystem(
        section_dim=n,
        roots=roots,
        multiplicities=mult,
        h_dim=len(H),
        bracket_table=table,
        realization=realization,
        name=f"A{n - 1} ({kind} n={n})",
    )


# ---------------------------------------------------------------------------
# reduced field in root coordinates


def _polar_field_flat(rs, A0, p0, Yflat, frozen_flat, tol):
    lam = rs.root_values(A0)
    off = rs.flat_offsets()
    R = rs.n_roots
    norms2 = np.array([
        float(np.dot(Yflat[off[r]: off[r + 1]], Yflat[off[r]: off[r + 1]]))
        for r in range(R)
    ])
    active = (np.abs(lam) > tol) & (norms2 > 0.0)
    dp0 = np.zeros_like(p0)
    for r in np.nonzero(active)[0]:
        dp0 += norms2[r] / lam[r] ** 3 * rs.roots[r]
    lam_scale = np.zeros(R)
    lam_ok = np.abs(lam) > tol
    lam_scale[lam_ok] = 1.0 / lam[lam_ok] ** 2
    Zflat = Yflat * np.repeat(lam_scale, rs.multiplicities)
    ia, ib, it, vv, ha, hb, hm, hv = rs._compiled()
    dY = np.zeros_like(Yflat)
    if vv.size:
        np.add.at(dY, it, Zflat[ia] * Yflat[ib] * vv)
    residual = float(np.max(np.abs(dY[frozen_flat]), initial=0.0))
    dY[frozen_flat] = 0.0
    return p0.copy(), dp0, dY, residual


def _frozen_flat_mask(rs, frozen_roots):
    off = rs.flat_offsets()
    mask = np.zeros(rs.spin_dim, dtype=bool)
    for r in frozen_roots:
        mask[off[r]: off[r + 1]] = True
    return mask


def polar_vector_field(s: PolarReducedState,
                       rs: RestrictedRootSystem | None = None) -> PolarDerivative:
    """Reduced equations of motion in restricted-root coordinates.

    Roots vanishing on the initial position are excluded from all sums and
    their spin coefficients are held at zero.
    """
    rs = rs or s.rs
    Yflat = rs.flatten_spin(s.Yroots)
    frozen = _frozen_flat_mask(rs, s.frozen_roots)
    dA0, dp0, dY, _ = _polar_field_flat(rs, s.A0, s.p0, Yflat, frozen, s.tol)
    return PolarDerivative(dA0=dA0, dp0=dp0, dYroots=rs.split_spin(dY))


def polar_hamiltonian(s: PolarReducedState,
                      rs: RestrictedRootSystem | None = None) -> float:
    """``|p0|^2/2 + sum_{lambda(A0) != 0} ||Y_lambda||^2 / lambda(A0)^2 / 2``."""
    rs = rs or s.rs
    lam = rs.root_values(s.A0)
    pot = 0.0
    for r in range(rs.n_roots):
        if abs(lam[r]) > s.tol:
            pot += float(np.dot(s.Yroots[r], s.Yroots[r])) / lam[r] ** 2
    return 0.5 * float(np.dot(s.p0, s.p0)) + 0.5 * pot


def spin_bracket_h_residual(s: PolarReducedState,
                            rs: RestrictedRootSystem | None = None) -> float:
    """Cartan component of ``[Z, Y]``; vanishes because Z is parallel to Y.

    Returned so tests can assert that dropped Cartan terms really
    contracted to zero.
    """
    rs = rs or s.rs
    Yflat = rs.flatten_spin(s.Yroots)
    lam = rs.root_values(s.A0)
    lam_scale = np.zeros(rs.n_roots)
    ok = np.abs(lam) > s.tol
    lam_scale[ok] = 1.0 / lam[ok] ** 2
    Zflat = Yflat * np.repeat(lam_scale, rs.multiplicities)
    ia, ib, it, vv, ha, hb, hm, hv = rs._compiled()
    if not hv.size or rs.h_dim == 0:
        return 0.0
    hres = np.zeros(rs.h_dim)
    np.add.at(hres, hm, Zflat[ha] * Yflat[hb] * hv)
    return float(np.max(np.abs(hres)))


# ---------------------------------------------------------------------------
# bridges between matrix states and root coordinates (type A realizations)


def matrix_state_to_polar(s: ReducedState, rs: RestrictedRootSystem) -> PolarReducedState:
    """Express a matrix-model reduced state in restricted-root coordinates."""
    if rs.realization is None or not rs.realization.root_pairs:
        raise InputError("root system has no matrix realization")
    if rs.realization.model != s.model:
        raise InputError("root system was built for a different model")
    s2 = np.sqrt(2.0)
    Yroots = []
    for r, (i, j) in enumerate(rs.realization.root_pairs):
        y = s.Y[i, j]
        if s.model.is_complex:
            Yroots.append(np.array([s2 * y.real, s2 * y.imag]))
        else:
            Yroots.append(np.array([s2 * float(y.real)]))
    return PolarReducedState(rs=rs, A0=s.a.copy(), p0=s.p.copy(),
                             Yroots=tuple(Yroots), tol=s.tol)


def polar_state_to_matrix(s: PolarReducedState,
                          rs: RestrictedRootSystem | None = None) -> ReducedState:
    """Inverse of :func:`matrix_state_to_polar` (realization required)."""
    rs = rs or s.rs
    real = rs.realization
    if real is None:
        raise InputError("root system has no matrix realization")
    model = real.model
    Y = np.zeros((model.n, model.n), dtype=model.dtype)
    for r in range(rs.n_roots):
        for i in range(rs.multiplicities[r]):
            Y += s.Yroots[r][i] * real.E[r][i]
    return ReducedState(a=s.A0.copy(), p=s.p0.copy(), Y=Y, model=model, tol=s.tol)


def spin_matrix_from_coefficients(s: PolarReducedState,
                                  rs: RestrictedRootSystem | None = None):
    """Realized spin matrix ``sum Y_lambda^i E_lambda^i`` (or None)."""
    rs = rs or s.rs
    if rs.realization is None:
        return None
    Y = np.zeros_like(rs.realization.E[0][0])
    for r in range(rs.n_roots):
        for i in range(rs.multiplicities[r]):
            Y = Y + s.Yroots[r][i] * rs.realization.E[r][i]
    return Y


# ---------------------------------------------------------------------------
# polar trajectories


@dataclass(frozen=True)
class PolarTrajectory:
    """Sampled flow in root coordinates with invariant diagnostics."""

    times: np.ndarray
    A0: np.ndarray
    p0: np.ndarray
    Yflat: np.ndarray
    energy: np.ndarray
    casimir: np.ndarray      # quadratic invariant, plus realized traces or nan
    min_root: np.ndarray
    step_times: np.ndarray
    step_energy: np.ndarray
    events: tuple
    meta: dict
    rs: RestrictedRootSystem = None
    _sol: object = field(repr=False, default=None)

    def state(self, k: int) -> PolarReducedState:
        return PolarReducedState(
            rs=self.rs, A0=self.A0[k], p0=self.p0[k],
            Yroots=self.rs.split_spin(self.Yflat[k]),
            tol=self.meta.get("degeneracy_tol", DEFAULT_DEGENERACY_TOL),
        )

    def sample(self, t: float):
        d = self.rs.section_dim
        y = self._sol(t)
        return y[:d], y[d: 2 * d], y[2 * d:]


def integrate_polar(
    s0: PolarReducedState,
    rs: RestrictedRootSystem | None = None,
    t_end: float = 1.0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    samples: int = 200,
    gap_floor: float = 1e-7,
) -> PolarTrajectory:
    """Integrate the restricted-root reduced flow over ``[0, t_end]``.

    Stops with :class:`IntegrationError` (partial trajectory attached) if
    any root value with nonzero spin falls below ``gap_floor``, if a
    spin-free root value crosses its wall (the generic continuation there
    is a reflection, which needs a matrix realization; use
    :func:`billiard_geodesic` for fully geodesic data), or if the frozen
    spin pattern would drift.
    """
    rs = rs or s0.rs
    if t_end <= 0:
        raise InputError("t_end must be positive")
    d = rs.section_dim
    frozen = _frozen_flat_mask(rs, s0.frozen_roots)
    off = rs.flat_offsets()
    active_tol = 1e-12 * max(1.0, float(np.max(np.abs(rs.flatten_spin(s0.Yroots)), initial=0.0)))

    lam0 = rs.root_values(s0.A0)
    act0 = np.array([float(np.linalg.norm(y)) > active_tol for y in s0.Yroots])
    if act0.any() and float(np.min(lam0[act0])) < gap_floor:
        raise InputError(
            "initial state has an excited root value below gap_floor"
        )

    def split(y):
        return y[:d], y[d: 2 * d], y[2 * d:]

    def rhs(t, y):
        A0, p0, Yf = split(y)
        dA0, dp0, dY, _ = _polar_field_flat(rs, A0, p0, Yf, frozen, s0.tol)
        return np.concatenate([dA0, dp0, dY])

    def root_norms(Yf):
        return np.array([
            float(np.linalg.norm(Yf[off[r]: off[r + 1]])) for r in range(rs.n_roots)
        ])

    def spin_guard(t, y):
        A0, _, Yf = split(y)
        lam = rs.root_values(A0)
        act = root_norms(Yf) > active_tol
        if not act.any():
            return 1.0
        return float(np.min(lam[act])) - gap_floor

    spin_guard.terminal = True
    spin_guard.direction = -1

    frozen_root_mask = np.zeros(rs.n_roots, dtype=bool)
    for r in s0.frozen_roots:
        frozen_root_mask[r] = True

    def wall_guard(t, y):
        A0, _, Yf = split(y)
        lam = rs.root_values(A0)
        inact = (root_norms(Yf) <= active_tol) & ~frozen_root_mask
        if not inact.any():
            return 1.0
        return float(np.min(lam[inact]))

    wall_guard.terminal = True
    wall_guard.direction = -1

    y0 = np.concatenate([s0.A0, s0.p0, rs.flatten_spin(s0.Yroots)])
    sol = solve_ivp(rhs, (0.0, float(t_end)), y0, method="RK45",
                    rtol=rtol, atol=atol, dense_output=True,
                    events=[spin_guard, wall_guard])

    events = []
    fail_msg = None
    t_stop = None
    step_ok = len(sol.t)
    if s0.frozen_roots:
        for k, t in enumerate(sol.t):
            A0, p0, Yf = split(sol.y[:, k])
            _, dp0, dY, residual = _polar_field_flat(rs, A0, p0, Yf, frozen, s0.tol)
            scale = max(1.0, float(np.max(np.abs(dY), initial=0.0)),
                        float(np.max(np.abs(dp0), initial=0.0)))
            lam_frozen = rs.root_values(A0)[frozen_root_mask]
            if residual > 1e-10 * scale or np.any(lam_frozen < -1e-9):
                kind = ("frozen_drift" if residual > 1e-10 * scale
                        else "wall_contact")
                events.append(Event(kind, float(t), {"residual": residual}))
                step_ok = k + 1
                t_stop = float(t)
                fail_msg = (
                    f"frozen spin coefficients would drift at t={t:.6g}"
                    if kind == "frozen_drift"
                    else f"frozen-root wall re-entry at t={t:.6g}"
                )
                break
    if fail_msg is None and sol.status == 1:
        which = 0 if len(sol.t_events[0]) else 1
        t_stop = float(sol.t_events[which][0])
        kind = "gap_floor" if which == 0 else "wall_contact"
        events.append(Event(kind, t_stop, {}))
        fail_msg = (
            f"root value fell below gap_floor={gap_floor:g} at t={t_stop:.6g}"
            if which == 0 else
            f"spin-free wall contact at t={t_stop:.6g}; continuation needs "
            "a reflection (see billiard_geodesic)"
        )
    elif fail_msg is None and sol.status == -1:
        t_stop = float(sol.t[-1])
        fail_msg = f"integrator step failure at t={t_stop:.6g}: {sol.message}"

    t_reached = t_stop if t_stop is not None else float(t_end)
    step_t = sol.t[:step_ok]
    step_t = step_t[step_t <= t_reached]

    has_real = rs.realization is not None
    grid = np.linspace(0.0, t_reached, samples + 1)
    A0s = np.empty((grid.size, d))
    p0s = np.empty((grid.size, d))
    Yfs = np.empty((grid.size, rs.spin_dim))
    energy = np.empty(grid.size)
    cas = np.full((grid.size, 3), np.nan)
    min_root = np.empty(grid.size)
    for k, t in enumerate(grid):
        A0, p0, Yf = split(sol.sol(t))
        A0s[k], p0s[k], Yfs[k] = A0, p0, Yf
        lam = rs.root_values(A0)
        pot = 0.0
        for r in range(rs.n_roots):
            if abs(lam[r]) > s0.tol:
                pot += float(np.dot(Yf[off[r]: off[r + 1]], Yf[off[r]: off[r + 1]])) / lam[r] ** 2
        energy[k] = 0.5 * float(np.dot(p0, p0)) + 0.5 * pot
        cas[k, 0] = float(np.dot(Yf, Yf))
        if has_real:
            Y = np.zeros_like(rs.realization.E[0][0])
            for r in range(rs.n_roots):
                for i in range(rs.multiplicities[r]):
                    Y = Y + Yf[off[r] + i] * rs.realization.E[r][i]
            cas[k, 1:] = casimirs(Y, 3)[1:]
        min_root[k] = float(np.min(lam)) if rs.n_roots else np.inf

    step_energy = np.empty(step_t.size)
    for k, t in enumerate(step_t):
        A0, p0, Yf = split(sol.sol(t))
        lam = rs.root_values(A0)
        pot = 0.0
        for r in range(rs.n_roots):
            if abs(lam[r]) > s0.tol:
                pot += float(np.dot(Yf[off[r]: off[r + 1]], Yf[off[r]: off[r + 1]])) / lam[r] ** 2
        step_energy[k] = 0.5 * float(np.dot(p0, p0)) + 0.5 * pot

    meta = {
        "root_system": rs.name or "custom",
        "section_dim": d,
        "t_end": float(t_end),
        "rtol": rtol,
        "atol": atol,
        "gap_floor": gap_floor,
        "degeneracy_tol": s0.tol,
        "spin_equation": "dY/dt = [Z, Y] with Z = sum lambda(A)^-2 Y_lambda",
        "frozen_roots": list(s0.frozen_roots),
        "casimir_note": "casimir_1 = sum ||Y_lambda||^2"
        + ("; casimir_2,3 realized spectral traces" if has_real
           else "; casimir_2,3 unavailable without a matrix realization"),
    }
    traj = PolarTrajectory(
        times=grid, A0=A0s, p0=p0s, Yflat=Yfs, energy=energy, casimir=cas,
        min_root=min_root, step_times=step_t, step_energy=step_energy,
        events=tuple(events), meta=meta, rs=rs, _sol=sol.sol,
    )
    if fail_msg is not None:
        raise IntegrationError(fail_msg, trajectory=traj)
    return traj


# ---------------------------------------------------------------------------
# chamber billiards


@dataclass(frozen=True)
class ReflectionEvent:
    time: float
    walls: tuple
    v_in: np.ndarray
    v_out: np.ndarray


@dataclass(frozen=True)
class BilliardPath:
    """Piecewise-linear geodesic in the chamber, reflected at the walls."""

    rs: RestrictedRootSystem
    times: np.ndarray
    vertices: np.ndarray
    velocities: np.ndarray
    events: tuple

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def position(self, t: float) -> np.ndarray:
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise InputError(f"t={t} outside the traced range")
        k = int(np.searchsorted(self.times, t, side="right") - 1)
        k = min(max(k, 0), len(self.velocities) - 1)
        return self.vertices[k] + (t - self.times[k]) * self.velocities[k]

    def positions(self, ts) -> np.ndarray:
        return np.array([self.position(t) for t in np.atleast_1d(ts)])


def _reflect(v, root):
    nrm2 = float(np.dot(root, root))
    return v - 2.0 * float(np.dot(root, v)) / nrm2 * root


def billiard_geodesic(rs: RestrictedRootSystem, x0, v0, t_end: float) -> BilliardPath:
    """Trace a straight line in the chamber, reflecting at the walls.

    Wall hit times are exact linear solves (the path is affine between
    events).  At a wall the velocity reflects orthogonally, preserving the
    incoming angle; when several walls are hit at once the reflections are
    iterated until the velocity points back into the closed chamber, and
    all walls involved are logged in a single event.
    """
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    if x.shape != (rs.section_dim,) or v.shape != (rs.section_dim,):
        raise InputError("x0 and v0 must live in the section")
    if np.linalg.norm(v) == 0.0:
        raise InputError("v0 must be nonzero")
    if t_end <= 0:
        raise InputError("t_end must be positive")
    scale = max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(v))) * t_end)
    atol_x = 1e-10 * scale
    tol_v = 1e-13 * max(1.0, float(np.linalg.norm(v)))
    if np.any(rs.root_values(x) < -atol_x):
        raise InputError("x0 is outside the closed chamber")

    t = 0.0
    times = [0.0]
    verts = [x.copy()]
    vels = []
    events = []
    for _ in range(100000):
        lam_x = rs.root_values(x)
        lam_v = rs.root_values(v)
        hit = np.nonzero((np.abs(lam_x) <= atol_x) & (lam_v < -tol_v))[0]
        if hit.size:
            v_in = v.copy()
            applied = []
            for _ in range(1000):
                lam_v = rs.root_values(v)
                bad = np.nonzero((np.abs(lam_x) <= atol_x) & (lam_v < -tol_v))[0]
                if not bad.size:
                    break
                r = int(bad[0])
                v = _reflect(v, rs.roots[r])
                applied.append(r)
            else:
                raise IntegrationError("corner reflection did not terminate")
            events.append(ReflectionEvent(time=t, walls=tuple(applied),
                                          v_in=v_in, v_out=v.copy()))
            lam_v = rs.root_values(v)
        moving_in = (lam_v < -tol_v) & (lam_x > atol_x)
        if moving_in.any():
            s_hit = np.min(-lam_x[moving_in] / lam_v[moving_in])
        else:
            s_hit = np.inf
        if t + s_hit >= t_end:
            vels.append(v.copy())
            x = x + (t_end - t) * v
            t = t_end
            times.append(t)
            verts.append(x.copy())
            break
        vels.append(v.copy())
        x = x + s_hit * v
        t = t + s_hit
        times.append(t)
        verts.append(x.copy())
    else:
        raise IntegrationError("too many billiard reflections")

    return BilliardPath(
        rs=rs,
        times=np.array(times),
        vertices=np.array(verts),
        velocities=np.array(vels),
        events=tuple(events),
    )


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class RootSystemReport:
    """Defects of a root system's data against its defining relations."""

    defining_defect: float
    antisymmetry_defect: float
    jacobi_defect: float
    consistency_defect: float
    threshold: float
    notes: tuple

    @property
    def max_defect(self) -> float:
        return max(self.defining_defect, self.antisymmetry_defect,
                   self.jacobi_defect, self.consistency_defect)

    @property
    def passed(self) -> bool:
        return self.max_defect < self.threshold

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"root system check: {status} (max defect {self.max_defect:.3e}, "
            f"threshold {self.threshold:g}); defining {self.defining_defect:.3e}, "
            f"antisymmetry {self.antisymmetry_defect:.3e}, "
            f"jacobi {self.jacobi_defect:.3e}, table {self.consistency_defect:.3e}"
        )


def _expand_bracket(rs, expansion, label):
    """Bracket of an expanded element with a basis label, via the table."""
    out = {}
    for lab, coeff in expansion.items():
        for target, val in rs.bracket(lab, label).items():
            out[target] = out.get(target, 0.0) + coeff * val
    return out


def verify_root_system(rs: RestrictedRootSystem, samples: int = 100,
                       rng=None, threshold: float = VERIFY_THRESHOLD) -> RootSystemReport:
    """Check the root data against its defining relations.

    With a matrix realization: samples section points ``A`` and checks
    ``[A, E] = lambda(A) B`` and ``[A, B] = lambda(A) E``, and compares the
    stored structure constants against explicit commutator projections.
    Always: checks antisymmetry of the bracket table and the Jacobi
    identity on (sampled) label triples.  Failures are reported, not
    thrown.
    """
    if samples < 1:
        raise InputError("samples must be >= 1")
    rng = rng or np.random.default_rng(0)
    notes = []

    defining = 0.0
    consistency = 0.0
    real = rs.realization
    if real is not None:
        for _ in range(samples):
            xs = rng.standard_normal(rs.section_dim)
            A = sum(c * M for c, M in zip(xs, real.section_basis))
            lam = rs.root_values(xs)
            for r in range(rs.n_roots):
                for i in range(rs.multiplicities[r]):
                    Em, Bm = real.E[r][i], real.B[r][i]
                    d1 = np.max(np.abs((A @ Em - Em @ A) - lam[r] * Bm))
                    d2 = np.max(np.abs((A @ Bm - Bm @ A) - lam[r] * Em))
                    defining = max(defining, float(d1), float(d2))
        labels = rs.e_labels() + rs.h_labels()

        def mat_of(lab):
            return real.E[lab[1]][lab[2]] if lab[0] == "E" else real.H[lab[1]]

        for la, lb in itertools.product(labels, labels):
            C = mat_of(la) @ mat_of(lb) - mat_of(lb) @ mat_of(la)
            expansion = rs.bracket(la, lb)
            Crec = np.zeros_like(C)
            for target, val in expansion.items():
                Crec = Crec + val * mat_of(target)
            consistency = max(consistency, float(np.max(np.abs(C - Crec))))
    else:
        notes.append("no matrix realization: defining relations taken as definitions")

    antisym = 0.0
    for (la, lb), expansion in rs.bracket_table.items():
        mirror = rs.bracket(lb, la)
        keys = set(expansion) | set(mirror)
        for key in keys:
            antisym = max(antisym,
                          abs(expansion.get(key, 0.0) + mirror.get(key, 0.0)))

    jacobi = 0.0
    labels = rs.e_labels() + rs.h_labels()
    triples = list(itertools.combinations(labels, 3))
    if len(triples) > samples * 10:
        idx = rng.choice(len(triples), size=samples * 10, replace=False)
        triples = [triples[int(k)] for k in idx]
    for la, lb, lc in triples:
        acc = {}
        for x, y, z in ((la, lb, lc), (lb, lc, la), (lc, la, lb)):
            for target, val in _expand_bracket(rs, rs.bracket(x, y), z).items():
                acc[target] = acc.get(target, 0.0) + val
        if acc:
            jacobi = max(jacobi, max(abs(v) for v in acc.values()))

    return RootSystemReport(
        defining_defect=defining,
        antisymmetry_defect=antisym,
        jacobi_defect=jacobi,
        consistency_defect=consistency,
        threshold=threshold,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# root-system text files


def save_root_system(rs: RestrictedRootSystem, path) -> None:
    """Write root data in the plain-text exchange format (see loader)."""
    lines = ["# orbitflow restricted root system"]
    if rs.name:
        lines.append(f"name {rs.name}")
    lines.append(f"section_dim {rs.section_dim}")
    lines.append(f"h_dim {rs.h_dim}")
    lines.append(f"positive_roots {rs.n_roots}")
    for r in range(rs.n_roots):
        coeffs = " ".join(repr(float(c)) for c in rs.roots[r])
        lines.append(f"root {r} {coeffs}")
        lines.append(f"mult {r} {rs.multiplicities[r]}")

    def slot(label):
        return f"{label[1]} {label[2]}" if label[0] == "E" else f"h {label[1]}"

    for (la, lb), expansion in sorted(rs.bracket_table.items()):
        for target, val in sorted(expansion.items()):
            lines.append(f"bracket {slot(la)} {slot(lb)} {slot(target)} {val!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_root_system(path) -> RestrictedRootSystem:
    """Load root data from the plain-text exchange format.

    Lines (``#`` comments and blanks ignored)::

        name <free text>                     optional
        section_dim <d>
        h_dim <m>
        positive_roots <R>
        root <r> <c_1> ... <c_d>             coefficient vector of root r
        mult <r> <k>                         multiplicity of root r
        bracket <slotA> <slotB> <slotT> <value>

    ``bracket`` rows are sparse structure constants: the coefficient of
    basis element ``slotT`` in the bracket of ``slotA`` with ``slotB``.
    Each slot is two tokens: ``<root> <index>`` for a labelled root-space
    element or ``h <index>`` for a Cartan element; indices are 0-based.
    Missing mirror entries are filled in by antisymmetry; fully absent
    pairs mean zero brackets.  Only roots and multiplicities are needed
    for billiards; root-space bracket rows are required for spin
    dynamics, and Cartan rows only for full Jacobi verification.
    """
    name = ""
    section_dim = None
    h_dim = 0
    n_roots = None
    root_rows = {}
    mult_rows = {}
    bracket_rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            key = parts[0].lower()
            try:
                if key == "name":
                    name = " ".join(parts[1:])
                elif key == "section_dim":
                    section_dim = int(parts[1])
                elif key == "h_dim":
                    h_dim = int(parts[1])
                elif key == "positive_roots":
                    n_roots = int(parts[1])
                elif key == "root":
                    root_rows[int(parts[1])] = [float(c) for c in parts[2:]]
                elif key == "mult":
                    mult_rows[int(parts[1])] = int(parts[2])
                elif key == "bracket":
                    def slot(a, b):
                        if a.lower() == "h":
                            return ("H", int(b))
                        return ("E", int(a), int(b))

                    la = slot(parts[1], parts[2])
                    lb = slot(parts[3], parts[4])
                    target = slot(parts[5], parts[6])
                    bracket_rows.append((la, lb, target, float(parts[7])))
                else:
                    raise InputError(f"unknown directive {key!r}")
            except (IndexError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: cannot parse {line!r}: {exc}")
    if section_dim is None or n_roots is None:
        raise InputError(f"{path}: section_dim and positive_roots are required")
    if set(root_rows) != set(range(n_roots)):
        raise InputError(f"{path}: need root rows 0..{n_roots - 1}")
    roots = np.array([root_rows[r] for r in range(n_roots)], dtype=float)
    if roots.shape[1] != section_dim:
        raise InputError(f"{path}: root coefficients must have length {section_dim}")
    mult = tuple(mult_rows.get(r, 1) for r in range(n_roots))

    def check_label(lab):
        if lab[0] == "H":
            if not 0 <= lab[1] < h_dim:
                raise InputError(f"{path}: Cartan index {lab[1]} out of range")
        else:
            if not 0 <= lab[1] < n_roots or not 0 <= lab[2] < mult[lab[1]]:
                raise InputError(f"{path}: root-space label {lab} out of range")

    table = {}
    for la, lb, target, val in bracket_rows:
        for lab in (la, lb, target):
            check_label(lab)
        table.setdefault((la, lb), {})[target] = val
    for la, lb, target, val in bracket_rows:
        mirror = table.setdefault((lb, la), {})
        if target not in mirror:
            mirror[target] = -val
    return RestrictedRootSystem(
        section_dim=section_dim, roots=roots, multiplicities=mult,
        h_dim=h_dim, bracket_table=table, realization=None, name=name,
    )

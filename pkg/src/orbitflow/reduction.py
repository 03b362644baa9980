"""Cotangent-lift reduction of the matrix models.

The cotangent space of the matrix space is a pair ``(A, alpha)`` of
matrices, paired by the trace form.  The conjugation action has momentum
map ``J(A, alpha) = [A, alpha]``, constant along every straight line
``t -> (A + t*alpha, alpha)``.  Reducing at a momentum value means:
diagonalize ``A`` with sorted spectrum, conjugate ``alpha`` along, and fix
the residual gauge freedom of the stabilizer.  What remains is the reduced
state ``(a, p, Y)``:

* ``a``   sorted spectrum (chamber position),
* ``p``   diagonal entries of the conjugated momentum,
* ``Y``   the commutator ``[diag(a), alpha]``, a spin matrix with zero
          diagonal and ``Y_ij = alpha_ij * (a_i - a_j)``.

Gauge conventions (all deterministic):

* eigenvector phases: the largest-magnitude component of each eigenvector
  is made positive real;
* degenerate blocks of ``a``: the momentum sub-block is diagonalized and
  its eigenvalues sorted non-increasing, so ``alpha`` (hence ``Y``) has
  exact zeros inside each block;
* residual torus: scanning the strict lower triangle of ``Y`` in
  lexicographic order, the first nonzero entry of each independently
  rotatable phase class is rotated to the positive real axis.  In the real
  model the residual diagonal group is sign flips, fixed the same way.
  Freedom that the scan cannot fix (zero-coupled index groups, repeated
  block momenta) is reported, not silently chosen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chamber import DEFAULT_DEGENERACY_TOL, multiplicity_partition, partition_blocks
from .errors import InputError, InvariantError
from .models import MatrixModel

# absolute slack (relative to scale) for enforcing exact structural zeros
STRUCTURAL_ZERO_TOL = 1e-10


@dataclass(frozen=True)
class CotangentPoint:
    """A base point and a covector: matrices ``A`` and ``alpha``.

    Both must be (conjugate-)symmetric of the same dimension; the pairing
    is the trace form ``<alpha, A> = Tr(A alpha)``.
    """

    A: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A)
        alpha = np.asarray(self.alpha)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError(f"A must be square, got shape {A.shape}")
        if alpha.shape != A.shape:
            raise InputError(
                f"alpha shape {alpha.shape} does not match A shape {A.shape}"
            )
        kind = "hermitian" if (np.iscomplexobj(A) or np.iscomplexobj(alpha)) \
            else "real_symmetric"
        model = MatrixModel(kind, A.shape[0])
        A = model.validate_matrix(A, "A")
        alpha = model.validate_matrix(alpha, "alpha")
        A.flags.writeable = False
        alpha.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class GaugeFrame:
    """The group element realizing the reduction normal form.

    ``g`` conjugates the input to the normal form: ``g A g^* = diag(a)``
    sorted, and ``g alpha g^*`` is the normalized momentum.  ``residual``
    describes gauge freedom the normalization could not fix.
    """

    g: np.ndarray
    residual: str = "none"


@dataclass(frozen=True)
class ReducedState:
    """Point of the reduced phase space: ``(a, p, Y)``.

    Invariants enforced at construction: ``a`` sorted non-increasing; ``Y``
    skew-Hermitian (resp. real skew-symmetric) with exactly zero diagonal;
    ``Y_ij = 0`` on every pair inside a degeneracy block of ``a``.  Entries
    that violate the block invariant beyond a strict threshold raise
    :class:`InvariantError`; sub-threshold residue is zeroed exactly.
    """

    a: np.ndarray
    p: np.ndarray
    Y: np.ndarray
    model: MatrixModel
    tol: float = DEFAULT_DEGENERACY_TOL
    blocks: tuple = field(init=False)
    frozen_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        p = np.array(self.p, dtype=float)
        n = self.model.n
        if a.shape != (n,) or p.shape != (n,):
            raise InputError(f"a and p must have shape ({n},)")
        if np.any(np.diff(a) > 0):
            raise InputError(f"a = {a} is not sorted non-increasing")
        Y = np.array(self.Y, dtype=self.model.dtype)
        if Y.shape != (n, n):
            raise InputError(f"Y must be {n}x{n}")
        scale = max(1.0, float(np.max(np.abs(Y))))
        if np.max(np.abs(Y + Y.conj().T)) > STRUCTURAL_ZERO_TOL * scale:
            raise InputError("Y is not skew-Hermitian for the model")
        Y = (Y - Y.conj().T) / 2.0
        if np.max(np.abs(np.diag(Y))) > STRUCTURAL_ZERO_TOL * scale:
            raise InvariantError("spin matrix has a nonzero diagonal entry")
        np.fill_diagonal(Y, 0.0)

        blocks = partition_blocks(multiplicity_partition(a, self.tol))
        frozen = np.eye(n, dtype=bool)
        for start, stop in blocks:
            frozen[start:stop, start:stop] = True
        bad = np.max(np.abs(Y[frozen])) if frozen.any() else 0.0
        if bad > STRUCTURAL_ZERO_TOL * scale:
            raise InvariantError(
                f"spin entry {bad:.3e} on a degenerate pair (must vanish where a_i = a_j)"
            )
        Y[frozen] = 0.0

        for arr in (a, p, Y, frozen):
            arr.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "frozen_mask", frozen)

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def is_regular(self) -> bool:
        return len(self.blocks) == self.n


def momentum_map(x: CotangentPoint) -> np.ndarray:
    """The conserved momentum ``J(A, alpha) = [A, alpha]``.

    Skew-Hermitian and traceless; constant along the line
    ``t -> (A + t*alpha, alpha)``.
    """
    return x.A @ x.alpha - x.alpha @ x.A


def hamiltonian_ambient(x: CotangentPoint) -> float:
    """Kinetic energy of straight-line motion: ``Tr(alpha^2) / 2``."""
    return 0.5 * float(np.trace(x.alpha @ x.alpha).real)


def _fix_eigenvector_phases(U: np.ndarray) -> np.ndarray:
    """Largest-magnitude component of every column made positive real."""
    U = U.copy()
    idx = np.argmax(np.abs(U), axis=0)
    lead = U[idx, np.arange(U.shape[1])]
    ph = lead / np.abs(np.where(lead == 0, 1.0, lead))
    return U * ph.conj()


class _PhaseClasses:
    """Union-find over matrix indices with accumulated phase offsets.

    Tracks which relative diagonal-gauge phases are already determined.
    ``offset[i]`` is the phase of index ``i`` relative to its class root.
    """

    def __init__(self, n):
        self.parent = list(range(n))
        self.offset = [0.0] * n

    def find(self, i):
        if self.parent[i] == i:
            return i, 0.0
        root, off = self.find(self.parent[i])
        self.parent[i] = root
        self.offset[i] += off
        return root, self.offset[i]

    def constrain(self, i, j, delta):
        """Impose ``theta_i - theta_j = delta``; False if already pinned."""
        ri, oi = self.find(i)
        rj, oj = self.find(j)
        if ri == rj:
            return False
        self.parent[ri] = rj
        self.offset[ri] = delta - oi + oj
        return True

    def phases(self, n):
        return np.array([self.find(i)[1] for i in range(n)])

    def n_classes(self, n):
        return len({self.find(i)[0] for i in range(n)})


def reduce(x: CotangentPoint, model: MatrixModel | None = None,
           tol: float = DEFAULT_DEGENERACY_TOL):
    """Reduce a cotangent point to its gauge-fixed reduced state.

    Returns ``(ReducedState, GaugeFrame)``.  Degenerate spectra are
    handled by the block normalization described in the module docstring,
    so the map is total.
    """
    if model is None:
        kind = "hermitian" if np.iscomplexobj(x.A) or np.iscomplexobj(x.alpha) \
            else "real_symmetric"
        model = MatrixModel(kind, x.n)
    A = model.validate_matrix(x.A, "A")
    alpha = model.validate_matrix(x.alpha, "alpha")
    n = model.n

    w, U = np.linalg.eigh(A)
    w = w[::-1]
    U = U[:, ::-1]
    U = _fix_eigenvector_phases(U)

    notes = []
    blocks = partition_blocks(multiplicity_partition(w, tol))
    for start, stop in blocks:
        if stop - start == 1:
            continue
        sub = U[:, start:stop]
        M = sub.conj().T @ alpha @ sub
        M = (M + M.conj().T) / 2.0
        d, V = np.linalg.eigh(M)
        d = d[::-1]
        V = V[:, ::-1]
        V = _fix_eigenvector_phases(V)
        U[:, start:stop] = sub @ V
        if np.any(np.diff(d) > -tol):
            notes.append(
                f"repeated block momenta in a-block [{start},{stop}): "
                "inner frame not unique"
            )

    a = w
    alr = U.conj().T @ alpha @ U
    alr = (alr + alr.conj().T) / 2.0
    p = np.real(np.diag(alr)).copy()
    G = a[:, None] - a[None, :]
    Y = (G * alr).astype(model.dtype)
    np.fill_diagonal(Y, 0.0)
    same_block = np.zeros((n, n), dtype=bool)
    for start, stop in blocks:
        same_block[start:stop, start:stop] = True
    Y[same_block] = 0.0

    # residual diagonal gauge: rotate the lex-first nonzero entry of each
    # phase class to the positive real axis (signs in the real model)
    classes = _PhaseClasses(n)
    nz_tol = 1e-12 * max(1.0, float(np.max(np.abs(Y))))
    for i in range(1, n):
        for j in range(i):
            if abs(Y[i, j]) > nz_tol:
                classes.constrain(i, j, -float(np.angle(Y[i, j])))
    theta = classes.phases(n)
    if model.is_complex:
        d = np.exp(1j * theta)
    else:
        d = np.where(np.cos(theta) > 0, 1.0, -1.0)
    Y = (d[:, None] * d[None, :].conj()) * Y
    alr = (d[:, None] * d[None, :].conj()) * alr
    g = (d[:, None] * U.conj().T).astype(model.dtype)

    n_free = classes.n_classes(n) - 1
    if n_free > 0:
        kind = "phase(s)" if model.is_complex else "sign(s)"
        notes.append(f"{n_free} undetermined relative {kind} between "
                     "zero-coupled index groups")
    residual = "; ".join(notes) if notes else "none"

    state = ReducedState(a=a, p=p, Y=Y, model=model, tol=tol)
    return state, GaugeFrame(g=g, residual=residual)


def reconstruct(s: ReducedState, model: MatrixModel | None = None) -> CotangentPoint:
    """Rebuild the canonical cotangent point of a reduced state.

    ``A = diag(a)``; ``alpha`` has diagonal ``p`` and off-diagonal entries
    ``Y_ij / (a_i - a_j)`` across blocks, zero inside degenerate blocks.
    ``reduce(reconstruct(s))`` is the identity on gauge-fixed states.
    """
    model = model or s.model
    n = model.n
    if np.max(np.abs(s.Y[s.frozen_mask])) > 0:
        raise InvariantError("spin matrix is nonzero on a degenerate pair")
    A = np.diag(s.a).astype(model.dtype)
    alpha = np.zeros((n, n), dtype=model.dtype)
    np.fill_diagonal(alpha, s.p)
    off = ~s.frozen_mask
    G = s.a[:, None] - s.a[None, :]
    alpha[off] = s.Y[off] / G[off]
    return CotangentPoint(A=A, alpha=alpha)

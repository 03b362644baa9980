"""The orbit space as a metric cone of sorted spectra.

Conjugation orbits of Hermitian / symmetric matrices are labelled by their
spectra.  Sorting the spectrum non-increasingly picks one representative
per orbit, so the orbit space is the closed cone

    C = { a in R^n : a_1 >= a_2 >= ... >= a_n },

a fundamental chamber for the permutation action on the diagonal section.
The quotient distance between two orbits equals the Euclidean distance of
their chamber representatives, and any two points are joined by a unique
minimal geodesic segment, the affine interpolation in chamber coordinates.

Isotropy strata are encoded by eigenvalue multiplicity partitions: finer
partition = smaller stabilizer = more regular stratum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .models import MatrixModel

#: default absolute tolerance on consecutive sorted gaps for grouping
#: eigenvalues into multiplicity blocks
DEFAULT_DEGENERACY_TOL = 1e-8


def multiplicity_partition(values, tol: float = DEFAULT_DEGENERACY_TOL):
    """Group a non-increasing vector into maximal runs of near-equal entries.

    Entries are chained: consecutive gaps at most ``tol`` belong to one
    block.  Returns the ordered tuple of block sizes (summing to ``len``).
    """
    v = np.asarray(values, dtype=float)
    if tol < 0:
        raise InputError("tolerance must be nonnegative")
    sizes = []
    run = 1
    for k in range(1, v.size):
        if v[k - 1] - v[k] <= tol:
            run += 1
        else:
            sizes.append(run)
            run = 1
    sizes.append(run)
    return tuple(sizes)


def partition_blocks(partition):
    """Index ranges ``(start, stop)`` of each block of an ordered partition."""
    blocks = []
    start = 0
    for size in partition:
        blocks.append((start, start + size))
        start += size
    return tuple(blocks)


def partition_refines(fine, coarse) -> bool:
    """Whether ordered partition ``fine`` refines ``coarse`` (same total)."""
    if sum(fine) != sum(coarse):
        return False
    cuts_fine = set(np.cumsum(fine).tolist())
    cuts_coarse = set(np.cumsum(coarse).tolist())
    return cuts_coarse.issubset(cuts_fine)


@dataclass(frozen=True)
class ChamberPoint:
    """A point of the orbit space: a sorted spectrum with its strata type.

    Parameters
    ----------
    values : array_like
        Real vector sorted non-increasing.  Construction fails on unsorted
        input; this is what keeps every chamber computation inside C.
    tol : float
        Degeneracy tolerance used to compute the multiplicity partition.
    """

    values: np.ndarray
    tol: float = DEFAULT_DEGENERACY_TOL
    multiplicity_partition: tuple = field(init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise InputError("chamber point needs a nonempty 1-d real vector")
        if not np.all(np.isfinite(v)):
            raise InputError("chamber point has non-finite entries")
        if np.any(np.diff(v) > 0):
            raise InputError(f"values {v} are not sorted non-increasing")
        if self.tol < 0:
            raise InputError("tolerance must be nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(
            self, "multiplicity_partition", multiplicity_partition(v, self.tol)
        )

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def is_regular(self) -> bool:
        """True on the principal stratum (all multiplicities one)."""
        return all(m == 1 for m in self.multiplicity_partition)

    def __repr__(self):
        vals = ", ".join(f"{x:g}" for x in self.values)
        return f"ChamberPoint(({vals}), partition={list(self.multiplicity_partition)})"


@dataclass(frozen=True)
class MinimalSegment:
    """The unique minimal geodesic segment between two chamber points.

    In chamber coordinates this is the affine path
    ``t -> (1 - t) * start + t * end`` on [0, 1]; convex combinations of
    sorted vectors are sorted, so the path never leaves the chamber.
    Evaluating the path re-validates sortedness at every point.
    """

    start: ChamberPoint
    end: ChamberPoint
    length: float = field(init=False)

    def __post_init__(self):
        if self.start.n != self.end.n:
            raise InputError("segment endpoints have different dimensions")
        object.__setattr__(
            self, "length", float(np.linalg.norm(self.end.values - self.start.values))
        )

    def __call__(self, t: float) -> ChamberPoint:
        vals = (1.0 - t) * self.start.values + t * self.end.values
        return ChamberPoint(vals, tol=self.start.tol)

    def interior_points(self, samples: int):
        """Equispaced interior points, excluding both endpoints."""
        if samples < 1:
            raise InputError("samples must be >= 1")
        ts = np.arange(1, samples + 1) / (samples + 1)
        return [self(t) for t in ts]


def chamber_map(A, model: MatrixModel | None = None,
                tol: float = DEFAULT_DEGENERACY_TOL) -> ChamberPoint:
    """Project a matrix to its orbit's chamber representative.

    Returns the eigenvalues sorted non-increasing together with the
    multiplicity partition at ``tol``.  Input symmetry is validated; a
    symmetry defect above the fixed threshold raises :class:`InputError`.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    if model is None:
        kind = "hermitian" if np.iscomplexobj(A) else "real_symmetric"
        model = MatrixModel(kind, A.shape[0])
    A = model.validate_matrix(A, "A")
    w = np.linalg.eigvalsh(A)
    return ChamberPoint(w[::-1], tol=tol)


def distance(p: ChamberPoint, q: ChamberPoint) -> float:
    """Quotient distance between two orbits: Euclidean chamber distance.

    This is a lower bound for ``||A - g B g^-1||`` over all group elements
    g, attained at the aligned eigenbases.
    """
    if p.n != q.n:
        raise InputError(f"dimension mismatch: {p.n} vs {q.n}")
    return float(np.linalg.norm(p.values - q.values))


def minimal_segment(p: ChamberPoint, q: ChamberPoint) -> MinimalSegment:
    """The unique minimal geodesic segment from ``p`` to ``q``."""
    return MinimalSegment(p, q)


def strata_type(p: ChamberPoint):
    """Isotropy type of a chamber point: its multiplicity partition."""
    return p.multiplicity_partition


def segment_stratum_check(segment: MinimalSegment, samples: int = 64) -> bool:
    """Do sampled interior points stay at least as regular as both endpoints?

    True iff every sampled interior multiplicity partition refines the
    partitions of both endpoints, i.e. interior stabilizers are contained
    in the endpoint stabilizers.
    """
    sp = segment.start.multiplicity_partition
    ep = segment.end.multiplicity_partition
    for point in segment.interior_points(samples):
        part = point.multiplicity_partition
        if not (partition_refines(part, sp) and partition_refines(part, ep)):
            return False
    return True


def segment_angle(p: ChamberPoint, u, v, model: MatrixModel | None = None) -> float:
    """Angle between two geodesic ray directions at a chamber point.

    Minimum over the stabilizer of ``p`` in the permutation group (block
    permutations preserving the multiplicity partition) of the Euclidean
    angle between ``u`` and the permuted ``v``.  By the rearrangement
    inequality the minimizing permutation sorts ``v`` like ``u`` within
    each block, so no enumeration is needed.
    """
    del model  # the acting Weyl group is the symmetric group for both models
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (p.n,) or v.shape != (p.n,):
        raise InputError("directions must match the chamber point dimension")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise InputError("zero-length direction")
    best = 0.0
    for start, stop in partition_blocks(p.multiplicity_partition):
        ub = np.sort(u[start:stop])
        vb = np.sort(v[start:stop])
        best += float(np.dot(ub, vb))
    cosang = np.clip(best / (nu * nv), -1.0, 1.0)
    return float(np.arccos(cosang))

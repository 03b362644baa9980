"""Matrix models: a compact group acting on a space of matrices by conjugation.

Two models are supported: the unitary group acting on complex Hermitian
matrices, and the (special) orthogonal group acting on real symmetric
matrices.  Both actions are polar: the real diagonal matrices form a
section, and the orbit space is the cone of non-increasing spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

HERMITIAN = "hermitian"
REAL_SYMMETRIC = "real_symmetric"

# symmetry defect above this (relative) threshold rejects an input matrix
MATRIX_VALIDATION_TOL = 1e-10


@dataclass(frozen=True)
class MatrixModel:
    """Which matrix space and conjugation action is being quotiented.

    Parameters
    ----------
    kind : str
        ``"hermitian"`` (unitary conjugation on Hermitian matrices) or
        ``"real_symmetric"`` (orthogonal conjugation on symmetric matrices).
    n : int
        Matrix dimension, at least 1.
    """

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in (HERMITIAN, REAL_SYMMETRIC):
            raise InputError(f"unknown model kind {self.kind!r}")
        if self.n < 1:
            raise InputError(f"model dimension must be >= 1, got {self.n}")

    @classmethod
    def hermitian(cls, n: int) -> "MatrixModel":
        return cls(HERMITIAN, n)

    @classmethod
    def real_symmetric(cls, n: int) -> "MatrixModel":
        return cls(REAL_SYMMETRIC, n)

    @property
    def is_complex(self) -> bool:
        return self.kind == HERMITIAN

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    def validate_matrix(self, M, name: str = "matrix") -> np.ndarray:
        """Check shape and (conjugate-)symmetry; return a clean copy.

        Raises
        ------
        InputError
            If the matrix is not square of the model dimension, contains
            non-finite entries, or its symmetry defect exceeds the fixed
            validation threshold.  Real input is accepted for the Hermitian
            model; complex input with a nonzero imaginary part is rejected
            for the symmetric model.
        """
        M = np.asarray(M)
        if M.shape != (self.n, self.n):
            raise InputError(f"{name} must be {self.n}x{self.n}, got shape {M.shape}")
        if not np.all(np.isfinite(M.real)) or (
            np.iscomplexobj(M) and not np.all(np.isfinite(M.imag))
        ):
            raise InputError(f"{name} contains non-finite entries")
        if not self.is_complex and np.iscomplexobj(M):
            if np.max(np.abs(M.imag)) > MATRIX_VALIDATION_TOL:
                raise InputError(f"{name} has complex entries in a real model")
            M = M.real
        M = M.astype(self.dtype)
        scale = max(1.0, float(np.max(np.abs(M))))
        defect = float(np.max(np.abs(M - M.conj().T)))
        if defect > MATRIX_VALIDATION_TOL * scale:
            raise InputError(
                f"{name} symmetry defect {defect:.3e} exceeds validation "
                f"threshold ({MATRIX_VALIDATION_TOL:g} relative)"
            )
        return (M + M.conj().T) / 2.0

    def random_group_element(self, rng) -> np.ndarray:
        """Haar-distributed unitary / orthogonal matrix."""
        if self.is_complex:
            Z = rng.standard_normal((self.n, self.n)) + 1j * rng.standard_normal(
                (self.n, self.n)
            )
        else:
            Z = rng.standard_normal((self.n, self.n))
        Q, R = np.linalg.qr(Z)
        d = np.diagonal(R)
        ph = d / np.abs(np.where(d == 0, 1.0, d))
        return Q * ph.conj()

    def random_matrix(self, rng, norm: float | None = None) -> np.ndarray:
        """Random matrix in the model space; Frobenius norm fixed if given."""
        if self.is_complex:
            Z = rng.standard_normal((self.n, self.n)) + 1j * rng.standard_normal(
                (self.n, self.n)
            )
        else:
            Z = rng.standard_normal((self.n, self.n))
        M = (Z + Z.conj().T) / 2.0
        if norm is not None:
            M *= norm / np.linalg.norm(M)
        return M.astype(self.dtype)

    def random_regular_pair(self, rng, min_gap: float = 0.2):
        """Seeded regular initial data for simulations.

        The base point has a random spectrum whose consecutive gaps are at
        least ``min_gap`` (centered to zero trace), conjugated by a Haar
        group element; the momentum is a random matrix of unit Frobenius
        norm.
        """
        gaps = min_gap + rng.uniform(0.0, 1.0, self.n - 1)
        spec = np.concatenate([[0.0], np.cumsum(gaps)])[::-1]
        spec = spec - spec.mean()
        g = self.random_group_element(rng)
        A = (g * spec) @ g.conj().T
        A = (A + A.conj().T) / 2.0
        alpha = self.random_matrix(rng, norm=1.0)
        return A.astype(self.dtype), alpha


def model_from_name(name: str, n: int) -> MatrixModel:
    """Resolve a user-facing model name (``symmetric`` is accepted)."""
    key = name.strip().lower().replace("-", "_")
    if key in (HERMITIAN, "h"):
        return MatrixModel.hermitian(n)
    if key in (REAL_SYMMETRIC, "symmetric", "s"):
        return MatrixModel.real_symmetric(n)
    raise InputError(f"unknown model name {name!r}")

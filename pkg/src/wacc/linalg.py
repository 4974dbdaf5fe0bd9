"""
Dense real/complex linear algebra shared by every other module.

Provides the Hermitian eigendecomposition (a cyclic complex Jacobi solver,
with LAPACK as a fast alternative), singular values, matrix norms and the
Fubini-Study distance between complex lines.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import NoConvergence, NonFiniteInput, NotHermitian, ZeroVector, DimensionMismatch

logger = logging.getLogger(__name__)

JACOBI = "jacobi"
LAPACK = "lapack"
EIG_METHODS = (JACOBI, LAPACK)

DEFAULT_HERMITIAN_TOL = 1e-10
DEFAULT_MAX_SWEEPS = 100
# off-diagonal Frobenius mass, relative to ||A||_F
JACOBI_OFF_TOL = 1e-12
JACOBI_THETA_CAP = 1e150
EPS = float(np.finfo(float).eps)


def as_matrix(A, dtype=None):
    """
    Validate and convert input to a finite two-dimensional array.

    Args:
        A (array_like): Matrix entries.
        dtype (numpy dtype, optional): Target dtype. Defaults to the input's.

    Returns:
        numpy.ndarray: The matrix, a fresh array.

    Raises:
        DimensionMismatch: If A is not two-dimensional or has an empty axis.
        NonFiniteInput: If any entry is NaN or Inf.
    """
    M = np.array(A, dtype=dtype, copy=True)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-d matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteInput("matrix has non-finite entries")
    return M


@dataclass(frozen=True)
class HermitianSpectrum:
    """
    Eigenvalues ordered by absolute value, with orthonormal eigenvectors.

    Attributes:
        eigenvalues (numpy.ndarray): Real eigenvalues, |lambda_1| >= ... >= |lambda_n|.
        eigenvectors (numpy.ndarray): Unit eigenvectors as columns, column i
            belonging to eigenvalues[i].
        sweeps (int): Jacobi sweeps used (0 for the LAPACK path).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    @property
    def size(self):
        return len(self.eigenvalues)

    @property
    def dominant(self):
        """(lambda_1, u_1)."""
        return float(self.eigenvalues[0]), self.eigenvectors[:, 0]

    @property
    def lambda_max(self):
        return float(np.max(self.eigenvalues))

    @property
    def lambda_2max(self):
        return float(np.sort(self.eigenvalues)[-2]) if self.size > 1 else math.nan

    @property
    def lambda_min(self):
        return float(np.min(self.eigenvalues))

    @property
    def lambda_2min(self):
        return float(np.sort(self.eigenvalues)[1]) if self.size > 1 else math.nan

    @property
    def min_gap(self):
        """Smallest gap between consecutive eigenvalues in signed order."""
        if self.size < 2:
            return math.inf
        return float(np.min(np.diff(np.sort(self.eigenvalues))))

    @property
    def eigenratio(self):
        """|lambda_1| / |lambda_2|, infinite when lambda_2 vanishes."""
        if self.size < 2:
            return math.inf
        second = abs(self.eigenvalues[1])
        return math.inf if second == 0 else float(abs(self.eigenvalues[0]) / second)

    def reconstruct(self):
        """Sum of lambda_i u_i u_i*."""
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T


@dataclass(frozen=True)
class SvdResult:
    """
    Singular values in non-increasing order, with optional singular vectors.
    """

    values: np.ndarray
    u: Optional[np.ndarray] = None
    vh: Optional[np.ndarray] = None

    @property
    def spectral(self):
        return float(self.values[0]) if len(self.values) else 0.0

    @property
    def smallest(self):
        return float(self.values[-1]) if len(self.values) else 0.0

    def reconstruct(self):
        if self.u is None or self.vh is None:
            raise ValueError("singular vectors were not computed")
        return (self.u * self.values) @ self.vh


class MatrixNorms(NamedTuple):
    frobenius: float
    spectral: float


def hermitian_defect(A):
    """||A - A*||_F."""
    return float(np.linalg.norm(A - A.conj().T))


def _order_spectrum(eigenvalues, eigenvectors):
    # primary key |lambda| descending, ties by signed value descending
    order = np.lexsort((-eigenvalues, -np.abs(eigenvalues)))
    return eigenvalues[order], eigenvectors[:, order]


def _off_norm(M):
    return math.sqrt(max(float(np.sum(np.abs(M) ** 2) - np.sum(np.abs(np.diag(M)) ** 2)), 0.0))


def _jacobi_rotation(M, V, p, q):
    """Annihilate M[p, q] with a complex plane rotation, updating M and V in place."""
    b = M[p, q]
    magnitude = abs(b)
    app = M[p, p].real
    aqq = M[q, q].real
    phase = b / magnitude
    phase /= abs(phase)

    theta = (aqq - app) / (2.0 * magnitude)
    if abs(theta) > JACOBI_THETA_CAP:
        # theta**2 would overflow; t ~ 1/(2 theta) to working precision
        t = 0.5 / theta
    else:
        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    # R = diag(1, conj(phase)) @ [[c, s], [-s, c]]
    R = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
    pair = [p, q]
    M[:, pair] = M[:, pair] @ R
    M[pair, :] = R.conj().T @ M[pair, :]
    V[:, pair] = V[:, pair] @ R

    M[p, q] = 0.0
    M[q, p] = 0.0
    M[p, p] = app - t * magnitude
    M[q, q] = aqq + t * magnitude


def _negligible(M, p, q, floor):
    """True when M[p, q] is below the rounding level of its diagonal pair or the absolute floor."""
    magnitude = abs(M[p, q])
    relative = EPS * math.sqrt(abs(M[p, p].real * M[q, q].real))
    return magnitude <= max(relative, floor)


def _jacobi_eig(H, max_sweeps):
    n = H.shape[0]
    M = H.astype(complex)
    V = np.eye(n, dtype=complex)
    scale = float(np.linalg.norm(M))
    target = JACOBI_OFF_TOL * scale
    # absolute skip threshold
    floor = target / (n * n)

    sweeps = 0
    while _off_norm(M) > target:
        if sweeps >= max_sweeps:
            raise NoConvergence(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal mass {_off_norm(M):.3e}, target {target:.3e})"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                if _negligible(M, p, q, floor):
                    M[p, q] = 0.0
                    M[q, p] = 0.0
                else:
                    _jacobi_rotation(M, V, p, q)
        M = 0.5 * (M + M.conj().T)
        sweeps += 1

    logger.debug(f"Jacobi converged in {sweeps} sweeps for n={n}")
    return np.real(np.diag(M)).copy(), V, sweeps


def hermitian_eig(A, tol=DEFAULT_HERMITIAN_TOL, method=JACOBI, max_sweeps=DEFAULT_MAX_SWEEPS):
    """
    Eigendecomposition of a Hermitian matrix, ordered by absolute value.

    Args:
        A (array_like): Square Hermitian matrix.
        tol (float): Relative symmetry tolerance, ||A - A*||_F <= tol * ||A||_F.
        method (str): "jacobi" (cyclic Jacobi, the reference solver) or
            "lapack" (numpy.linalg.eigh).
        max_sweeps (int): Jacobi sweep budget.

    Returns:
        HermitianSpectrum: Eigenvalues with |lambda_i| non-increasing (ties
        broken by signed value descending) and orthonormal eigenvectors.

    Raises:
        NotHermitian: If the symmetry check fails.
        NoConvergence: If Jacobi exceeds its sweep budget.
    """
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    scale = float(np.linalg.norm(M))
    defect = hermitian_defect(M)
    if defect > tol * scale:
        raise NotHermitian(f"||A - A*||_F = {defect:.3e} exceeds {tol:.1e} * ||A||_F = {tol * scale:.3e}")
    H = 0.5 * (M + M.conj().T)

    if method == JACOBI:
        eigenvalues, eigenvectors, sweeps = _jacobi_eig(H, max_sweeps)
    elif method == LAPACK:
        eigenvalues, eigenvectors = np.linalg.eigh(H)
        sweeps = 0
    else:
        raise ValueError(f"unknown eigensolver {method!r}; expected one of {EIG_METHODS}")

    eigenvalues, eigenvectors = _order_spectrum(np.asarray(eigenvalues, dtype=float), eigenvectors)
    return HermitianSpectrum(eigenvalues, eigenvectors, sweeps)


def svd_values(A, compute_vectors=False):
    """
    Singular values of A in non-increasing order.

    Args:
        A (array_like): Any finite matrix.
        compute_vectors (bool, optional): Also return thin singular vectors.

    Returns:
        SvdResult: The decomposition.
    """
    M = as_matrix(A)
    if compute_vectors:
        u, s, vh = np.linalg.svd(M, full_matrices=False)
        return SvdResult(s, u, vh)
    return SvdResult(np.linalg.svd(M, compute_uv=False))


def matrix_norms(A):
    """
    Frobenius and spectral norms of A.

    Returns:
        MatrixNorms: (frobenius, spectral).
    """
    M = as_matrix(A)
    return MatrixNorms(float(np.linalg.norm(M, "fro")), float(np.linalg.norm(M, 2)))


def fubini_study_distance(x, y):
    """
    Angle between the complex lines through x and y.

    d(x, y) = arccos(|<x, y>| / (||x|| ||y||)), a value in [0, pi/2].

    Raises:
        ZeroVector: If either argument is zero.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ZeroVector("Fubini-Study distance needs nonzero vectors")
    cosine = abs(np.vdot(x, y)) / (nx * ny)
    return float(np.arccos(min(cosine, 1.0)))


def chordal_from_euclidean(distance):
    """
    Chordal distance to the trace of a cone on the unit sphere.

    For a unit vector at Euclidean distance s = sin(theta) <= 1 from a cone,
    the nearest point of the cone on the sphere is at chordal distance
    2 sin(theta / 2).
    """
    s = np.clip(np.asarray(distance, dtype=float), 0.0, 1.0)
    return np.sqrt(np.maximum(2.0 - 2.0 * np.sqrt(1.0 - s * s), 0.0))

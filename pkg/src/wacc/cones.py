"""
Closed convex cones: exact projections, polars, and Gaussian geometry.

Cones are immutable values. Projections act on the last axis, so a batch of
vectors of shape (..., m) is projected in one call.

The PSD cone of s x s symmetric matrices lives in R^{s(s+1)/2} through the
scaled vectorisation svec (off-diagonals times sqrt(2)), which makes the
Euclidean inner product equal to the Frobenius inner product.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg as sla
from scipy import special

from .errors import DimensionMismatch, PreconditionViolated
from .sampling import as_generator

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def chi_mean(k):
    """E||g|| for g ~ N(0, I_k): sqrt(2) Gamma((k+1)/2) / Gamma(k/2)."""
    if k <= 0:
        return 0.0
    return float(SQRT2 * math.exp(special.gammaln((k + 1) / 2.0) - special.gammaln(k / 2.0)))


def svec(M):
    """Scaled vectorisation of symmetric matrices, shape (..., s, s) -> (..., s(s+1)/2)."""
    M = np.asarray(M, dtype=float)
    s = M.shape[-1]
    rows, cols = np.triu_indices(s)
    scale = np.where(rows == cols, 1.0, SQRT2)
    return M[..., rows, cols] * scale


def smat(v, s):
    """Inverse of svec."""
    v = np.asarray(v, dtype=float)
    rows, cols = np.triu_indices(s)
    scale = np.where(rows == cols, 1.0, 1.0 / SQRT2)
    M = np.zeros(v.shape[:-1] + (s, s))
    M[..., rows, cols] = v * scale
    M[..., cols, rows] = v * scale
    return M


def psd_side(ambient_dim):
    """Matrix side s with s(s+1)/2 == ambient_dim."""
    s = int(round((math.sqrt(8 * ambient_dim + 1) - 1) / 2))
    if s * (s + 1) // 2 != ambient_dim:
        raise DimensionMismatch(f"{ambient_dim} is not a triangular number")
    return s


class Cone(ABC):
    """A closed convex cone in R^m with an exact projection."""

    @property
    @abstractmethod
    def ambient_dim(self) -> int:
        ...

    @property
    @abstractmethod
    def spec(self) -> str:
        """Spec string understood by parse_cone."""

    @abstractmethod
    def _project(self, v):
        ...

    def project(self, v):
        """
        Nearest point of the cone to v (batched over leading axes).

        Raises:
            DimensionMismatch: If the last axis of v is not the ambient dimension.
        """
        v = np.asarray(v, dtype=float)
        if v.ndim == 0 or v.shape[-1] != self.ambient_dim:
            raise DimensionMismatch(
                f"vector of length {v.shape[-1] if v.ndim else 0} for a cone in R^{self.ambient_dim}"
            )
        return self._project(v)

    def polar(self):
        return PolarOf(self)

    def closed_form_dimension(self) -> Optional[float]:
        return None

    def closed_form_width(self) -> Optional[float]:
        return None

    def is_linear(self):
        return False

    def with_dimension(self, m):
        """The same kind of cone in R^m, for asymptotic schedules."""
        raise NotImplementedError(f"{type(self).__name__} cannot be rescaled")

    def __str__(self):
        return self.spec


@dataclass(frozen=True)
class FullSpace(Cone):
    m: int

    @property
    def ambient_dim(self):
        return self.m

    @property
    def spec(self):
        return f"full:{self.m}"

    def _project(self, v):
        return v.copy()

    def polar(self):
        return Subspace.zero(self.m)

    def closed_form_dimension(self):
        return float(self.m)

    def closed_form_width(self):
        return chi_mean(self.m)

    def is_linear(self):
        return True

    def basis(self):
        return np.eye(self.m)

    def with_dimension(self, m):
        return FullSpace(m)


@dataclass(frozen=True)
class Subspace(Cone):
    """
    Linear subspace spanned by the orthonormal columns of basis (m x k).

    A basis with zero columns is the zero cone {0}.
    """

    basis_matrix: np.ndarray = field(compare=False)
    m: int
    label: Optional[str] = None

    @classmethod
    def from_vectors(cls, vectors, m=None):
        """Subspace spanned by the columns of vectors (orthonormalised)."""
        V = np.asarray(vectors, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        m = V.shape[0] if m is None else m
        return cls(sla.orth(V) if V.shape[1] else np.zeros((m, 0)), m)

    @classmethod
    def coordinate(cls, k, m):
        """span{e_1, ..., e_k} in R^m."""
        if not 0 <= k <= m:
            raise PreconditionViolated(f"subspace dimension {k} outside [0, {m}]")
        return cls(np.eye(m)[:, :k], m, label=f"subspace:{k}:{m}")

    @classmethod
    def zero(cls, m):
        return cls(np.zeros((m, 0)), m, label=f"subspace:0:{m}")

    @property
    def k(self):
        return self.basis_matrix.shape[1]

    @property
    def ambient_dim(self):
        return self.m

    @property
    def spec(self):
        return self.label or f"subspace:{self.k}:{self.m}"

    def basis(self):
        return self.basis_matrix

    def _project(self, v):
        B = self.basis_matrix
        return (v @ B) @ B.T

    def polar(self):
        if self.k == 0:
            return FullSpace(self.m)
        complement = sla.null_space(self.basis_matrix.T)
        label = None
        if self.label and self.label.startswith("subspace:"):
            label = f"polar:{self.label}"
        return Subspace(complement, self.m, label=label)

    def closed_form_dimension(self):
        return float(self.k)

    def closed_form_width(self):
        return chi_mean(self.k)

    def is_linear(self):
        return True

    def with_dimension(self, m):
        return Subspace.coordinate(int(round(self.k * m / self.m)), m)

    def __eq__(self, other):
        return (
            isinstance(other, Subspace)
            and self.m == other.m
            and self.basis_matrix.shape == other.basis_matrix.shape
            and np.allclose(self.basis_matrix @ self.basis_matrix.T, other.basis_matrix @ other.basis_matrix.T)
        )


@dataclass(frozen=True)
class Orthant(Cone):
    """Nonnegative orthant (sign=+1) or nonpositive orthant (sign=-1)."""

    m: int
    sign: int = 1

    @property
    def ambient_dim(self):
        return self.m

    @property
    def spec(self):
        return f"orthant:{self.m}" if self.sign > 0 else f"polar:orthant:{self.m}"

    def _project(self, v):
        return np.maximum(v, 0.0) if self.sign > 0 else np.minimum(v, 0.0)

    def polar(self):
        return Orthant(self.m, -self.sign)

    def closed_form_dimension(self):
        return self.m / 2.0

    def with_dimension(self, m):
        return Orthant(m, self.sign)


@dataclass(frozen=True)
class SecondOrder(Cone):
    """Lorentz cone {(x, t) : ||x|| <= t}, height t last; sign=-1 negates it."""

    m: int
    sign: int = 1

    @property
    def ambient_dim(self):
        return self.m

    @property
    def spec(self):
        return f"soc:{self.m}" if self.sign > 0 else f"polar:soc:{self.m}"

    def _project(self, v):
        w = v if self.sign > 0 else -v
        x = w[..., :-1]
        t = w[..., -1]
        norm_x = np.linalg.norm(x, axis=-1)
        inside = norm_x <= t
        polar_side = norm_x <= -t
        scale = 0.5 * (norm_x + t)
        safe = np.where(norm_x > 0, norm_x, 1.0)
        boundary = np.concatenate(
            [(scale / safe)[..., None] * x, scale[..., None]], axis=-1
        )
        out = np.where(inside[..., None], w, boundary)
        out = np.where(polar_side[..., None], 0.0, out)
        return out if self.sign > 0 else -out

    def polar(self):
        return SecondOrder(self.m, -self.sign)

    def closed_form_dimension(self):
        return self.m / 2.0

    def with_dimension(self, m):
        return SecondOrder(m, self.sign)


@dataclass(frozen=True)
class PsdCone(Cone):
    """Positive (sign=+1) or negative (sign=-1) semidefinite s x s matrices, via svec."""

    s: int
    sign: int = 1

    @property
    def ambient_dim(self):
        return self.s * (self.s + 1) // 2

    @property
    def spec(self):
        return f"psd:{self.s}" if self.sign > 0 else f"polar:psd:{self.s}"

    def _project(self, v):
        M = smat(v, self.s) * self.sign
        eigenvalues, eigenvectors = np.linalg.eigh(M)
        clipped = np.maximum(eigenvalues, 0.0)
        P = (eigenvectors * clipped[..., None, :]) @ np.swapaxes(eigenvectors, -1, -2)
        return svec(P) * self.sign

    def polar(self):
        return PsdCone(self.s, -self.sign)

    def closed_form_dimension(self):
        return self.s * (self.s + 1) / 4.0

    def with_dimension(self, m):
        # nearest triangular number
        s = max(1, int(round((math.sqrt(8 * m + 1) - 1) / 2)))
        return PsdCone(s, self.sign)


@dataclass(frozen=True)
class PolarOf(Cone):
    """Polar of an arbitrary cone, projected through the Moreau decomposition."""

    inner: Cone

    @property
    def ambient_dim(self):
        return self.inner.ambient_dim

    @property
    def spec(self):
        return f"polar:{self.inner.spec}"

    def _project(self, v):
        return v - self.inner.project(v)

    def polar(self):
        return self.inner

    def closed_form_dimension(self):
        inner = self.inner.closed_form_dimension()
        return None if inner is None else self.ambient_dim - inner

    def with_dimension(self, m):
        return PolarOf(self.inner.with_dimension(m))


def polar(cone):
    """
    Polar cone C° = {z : <x, z> <= 0 for all x in C}.

    Known variants simplify (orthant, second-order and PSD cones to their
    negatives, full space to {0}, subspaces to their orthogonal complements);
    anything else is wrapped in PolarOf.
    """
    return cone.polar()


def closed_form_dimension(cone):
    """Statistical dimension when a closed form is known, else None."""
    return cone.closed_form_dimension()


def closed_form_width(cone):
    """Gaussian width of linear cones (mean of a chi variable), else None."""
    return cone.closed_form_width()


def parse_cone(spec):
    """
    Build a cone from a spec string.

    Accepted forms: "full:m", "orthant:m", "soc:m", "psd:s", "subspace:k:m"
    and "polar:<spec>".

    Raises:
        ValueError: If the spec is malformed.
    """
    text = spec.strip().lower()
    if text.startswith("polar:"):
        return polar(parse_cone(text[len("polar:"):]))
    kind, _, rest = text.partition(":")
    try:
        numbers = [int(part) for part in rest.split(":")] if rest else []
    except ValueError:
        raise ValueError(f"cone spec {spec!r} has non-integer dimensions") from None
    if any(n < 0 for n in numbers):
        raise ValueError(f"cone spec {spec!r} has negative dimensions")

    if kind == "subspace":
        if len(numbers) != 2:
            raise ValueError(f"expected subspace:k:m, got {spec!r}")
        return Subspace.coordinate(numbers[0], numbers[1])
    if len(numbers) != 1 or numbers[0] < 1:
        raise ValueError(f"expected {kind}:<positive int>, got {spec!r}")
    builders = {"full": FullSpace, "orthant": Orthant, "soc": SecondOrder, "psd": PsdCone}
    if kind not in builders:
        raise ValueError(f"unknown cone kind {kind!r} in {spec!r}")
    if kind == "soc" and numbers[0] < 2:
        raise ValueError("a second-order cone needs m >= 2")
    return builders[kind](numbers[0])


@dataclass
class ConeGeometry:
    """
    Monte Carlo statistical dimension and Gaussian width of a cone.

    Attributes:
        statistical_dimension (float): Estimate of E||P_C(g)||^2.
        gaussian_width (float): Estimate of E||P_C(g)||.
        dimension_se (float): Standard error of the dimension estimate.
        width_se (float): Standard error of the width estimate.
        trials (int): Gaussian samples used.
    """

    statistical_dimension: float
    gaussian_width: float
    dimension_se: float
    width_se: float
    trials: int

    @property
    def squared_width_se(self):
        # delta method for w^2
        return 2.0 * self.gaussian_width * self.width_se

    def sandwich_holds(self, k=3.0):
        """w^2 <= delta + k SE and delta <= w^2 + 1 + k SE."""
        slack = k * (self.dimension_se + self.squared_width_se)
        w2 = self.gaussian_width ** 2
        return w2 <= self.statistical_dimension + slack and self.statistical_dimension <= w2 + 1.0 + slack


def cone_geometry(cone, trials, stream, batch_size=20_000):
    """
    Estimate delta(C) = E||P_C(g)||^2 and w(C) = E||P_C(g)|| for g ~ N(0, I_m).

    Args:
        cone (Cone): The cone.
        trials (int): Number of Gaussian samples, at least 100.
        stream (RngStream or Generator): Randomness source.
        batch_size (int): Samples projected per batch.

    Returns:
        ConeGeometry: Estimates with standard errors.
    """
    if trials < 100:
        raise PreconditionViolated(f"trials must be >= 100, got {trials}")
    rng = as_generator(stream)
    m = cone.ambient_dim
    norms = np.empty(trials)
    for start in range(0, trials, batch_size):
        count = min(batch_size, trials - start)
        g = rng.standard_normal((count, m))
        norms[start:start + count] = np.linalg.norm(cone.project(g), axis=1)

    squared = norms ** 2
    root_n = math.sqrt(trials)
    geometry = ConeGeometry(
        statistical_dimension=float(np.mean(squared)),
        gaussian_width=float(np.mean(norms)),
        dimension_se=float(np.std(squared, ddof=1) / root_n),
        width_se=float(np.std(norms, ddof=1) / root_n),
        trials=trials,
    )
    logger.debug(
        f"{cone.spec}: delta={geometry.statistical_dimension:.4f} "
        f"w={geometry.gaussian_width:.4f} ({trials} trials)"
    )
    return geometry

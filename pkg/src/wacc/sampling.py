"""
Seedable samplers for the random models used throughout the package.

Every sampler takes either an RngStream, in which case a fresh generator is
built from it and the output is fully determined by (seed, index, path), or a
live numpy Generator, which lets one trial draw several objects from a single
sub-stream.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special

from .errors import InvalidSigma, PreconditionViolated

logger = logging.getLogger(__name__)

INVERSE_CDF = "inverse_cdf"
REJECTION = "rejection"


@dataclass(frozen=True)
class RngStream:
    """
    A reproducible random stream identified by (seed, index).

    Attributes:
        seed (int): Master seed (64-bit).
        index (int): Stream index; distinct indices give independent streams.
        path (tuple): Spawn path below the stream, see spawn().
    """

    seed: int
    index: int = 0
    path: Tuple[int, ...] = ()

    def spawn(self, i):
        """Child stream number i, independent of siblings and of the parent."""
        return RngStream(self.seed, self.index, self.path + (int(i),))

    def generator(self):
        """A new counter-based Philox generator positioned at the stream start."""
        sequence = np.random.SeedSequence(
            entropy=int(self.seed) & (2**64 - 1), spawn_key=(int(self.index),) + self.path
        )
        return np.random.Generator(np.random.Philox(sequence))


def as_generator(source):
    if isinstance(source, RngStream):
        return source.generator()
    if isinstance(source, np.random.Generator):
        return source
    raise TypeError(f"expected RngStream or numpy Generator, got {type(source).__name__}")


def _require_positive(**dims):
    for name, value in dims.items():
        if int(value) < 1:
            raise PreconditionViolated(f"{name} must be >= 1, got {value}")


def gaussian_matrix(stream, n, m):
    """n x m matrix with i.i.d. standard normal entries."""
    _require_positive(n=n, m=m)
    return as_generator(stream).standard_normal((n, m))


def gue_matrix(stream, n):
    """
    GUE matrix H = (G + G*) / 2 for a complex Gaussian G.

    Diagonal entries are real with variance 1; off-diagonal entries have real
    and imaginary parts of variance 1/2. The result is exactly Hermitian.
    """
    _require_positive(n=n)
    rng = as_generator(stream)
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = 0.5 * (G + G.conj().T)
    upper = np.triu(H, 1)
    return upper + upper.conj().T + np.diag(np.real(np.diag(H)))


def uniform_sphere(stream, ambient_dim, size=None):
    """
    Uniform point(s) on the unit sphere of R^ambient_dim.

    Args:
        stream (RngStream or Generator): Randomness source.
        ambient_dim (int): Dimension of the ambient space (n + 1 for S^n).
        size (int, optional): Number of points; returns shape (size, ambient_dim).
    """
    _require_positive(ambient_dim=ambient_dim)
    shape = (ambient_dim,) if size is None else (size, ambient_dim)
    g = as_generator(stream).standard_normal(shape)
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    # a zero Gaussian vector has probability zero
    return g / norms


def cap_measure(ambient_dim, sigma):
    """
    Fraction of the sphere in R^ambient_dim covered by a cap of chordal radius sigma.

    With u = (1 - cos theta) / 2 the latitude follows Beta(a, a), a = (N - 1) / 2,
    and the chordal radius sigma corresponds to u = sigma^2 / 4.
    """
    if ambient_dim < 2:
        return 0.5
    a = 0.5 * (ambient_dim - 1)
    return float(special.betainc(a, a, min(sigma * sigma / 4.0, 1.0)))


def _orthogonal_directions(rng, z, size):
    w = rng.standard_normal((size, len(z)))
    w -= np.outer(w @ z, z)
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def uniform_cap(stream, z, sigma, size=None, method=INVERSE_CDF):
    """
    Uniform point(s) in the spherical cap B(z, sigma) = {x in S^n : ||x - z|| <= sigma}.

    The radius is chordal (Euclidean). The default method draws the latitude
    from its exact cap-restricted marginal by inverting the incomplete beta
    function and a uniform direction orthogonal to z; "rejection" samples the
    whole sphere and keeps points inside the cap.

    Raises:
        InvalidSigma: If sigma is not in (0, 1].
    """
    if not 0 < sigma <= 1:
        raise InvalidSigma(f"cap radius must lie in (0, 1], got {sigma}")
    z = np.asarray(z, dtype=float)
    z = z / np.linalg.norm(z)
    rng = as_generator(stream)
    count = 1 if size is None else size
    N = len(z)

    if N == 1:
        points = np.tile(z, (count, 1))
    elif method == REJECTION:
        points = np.empty((count, N))
        filled = 0
        while filled < count:
            batch = max(64, int(2 * (count - filled) / max(cap_measure(N, sigma), 1e-6)))
            batch = min(batch, 1_000_000)
            candidates = uniform_sphere(rng, N, size=batch)
            inside = candidates[np.linalg.norm(candidates - z, axis=1) <= sigma]
            take = min(len(inside), count - filled)
            points[filled:filled + take] = inside[:take]
            filled += take
    elif method == INVERSE_CDF:
        a = 0.5 * (N - 1)
        u_max = sigma * sigma / 4.0
        mass = special.betainc(a, a, u_max)
        u = special.betaincinv(a, a, rng.uniform(size=count) * mass)
        u = np.clip(u, 0.0, u_max)
        cos_theta = 1.0 - 2.0 * u
        sin_theta = 2.0 * np.sqrt(u * (1.0 - u))
        directions = _orthogonal_directions(rng, z, count)
        points = cos_theta[:, None] * z + sin_theta[:, None] * directions
        points /= np.linalg.norm(points, axis=1, keepdims=True)
    else:
        raise ValueError(f"unknown cap sampling method {method!r}")

    return points[0] if size is None else points


def uniform_projective(stream, n, size=None):
    """
    Unit representative(s) of uniform point(s) of CP^{n-1}.

    Obtained by normalising an i.i.d. complex Gaussian vector.
    """
    _require_positive(n=n)
    rng = as_generator(stream)
    shape = (n,) if size is None else (size, n)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def pareto(stream, a, size=None):
    """Samples with P{X > s} = a / s for s >= a."""
    if a <= 0:
        raise PreconditionViolated(f"scale a must be positive, got {a}")
    u = as_generator(stream).uniform(size=size)
    # 1 - u lies in (0, 1]
    return a / (1.0 - u)

"""Primitive laws used by the samplers and by the exact-pmf test oracles.

Every law is an immutable value.  Randomness always comes from an explicit
:class:`RngStream`, so a fixed ``(seed, stream_id)`` pair reproduces draws
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .exceptions import DomainError, UnsupportedFeatureError

__all__ = [
    "RngStream",
    "GeometricLaw",
    "GaussianLaw",
    "KNormLaw",
    "UniformBox",
    "geometric_pmf",
    "geometric_logpmf",
    "geometric_sample",
    "unit_ball_volume",
    "knorm_sample",
    "knorm_logpdf",
    "gaussian_sample",
    "gaussian_logpdf",
]


class RngStream:
    """A reproducible, splittable stream of random numbers.

    Backed by a Philox counter-based bit generator keyed through
    :class:`numpy.random.SeedSequence`; ``stream_id`` enters as the spawn key,
    so distinct ids give independent streams for the same seed.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= seed < 2**64 and 0 <= stream_id < 2**64):
            raise DomainError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream with the same seed and another id."""
        return RngStream(self.seed, stream_id)

    def uniform(self, size=None):
        """Uniform draw(s) on [0, 1)."""
        return self.generator.random(size)

    def uniform_open(self, size=None):
        """Uniform draw(s) on (0, 1]; safe to take logs of."""
        return 1.0 - self.generator.random(size)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def gamma(self, shape, scale=1.0, size=None):
        return self.generator.gamma(shape, scale, size)


# ---------------------------------------------------------------------------
# geometric law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeometricLaw:
    """Number of Bernoulli(p) trials up to and including the first success."""

    p: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise DomainError(f"geometric parameter must lie in (0, 1], got {self.p}")

    @property
    def mean(self) -> float:
        return 1.0 / self.p

    def survival(self, k):
        """P(T > k)."""
        k = np.asarray(k, dtype=float)
        if self.p == 1.0:
            return np.where(k >= 1, 0.0, 1.0)
        return np.exp(k * math.log1p(-self.p))

    def quantile(self, level: float) -> int:
        """Smallest k with P(T <= k) >= level."""
        if self.p == 1.0:
            return 1
        k = math.ceil(math.log1p(-level) / math.log1p(-self.p) - 1e-12)
        return max(k, 1)


def geometric_logpmf(law: GeometricLaw, k):
    """log P(T = k), vectorised over ``k``."""
    k = np.asarray(k)
    if np.any(k < 1):
        raise DomainError("geometric support is {1, 2, ...}")
    if law.p == 1.0:
        return np.where(k == 1, 0.0, -np.inf)
    return math.log(law.p) + (k - 1) * math.log1p(-law.p)


def geometric_pmf(law: GeometricLaw, k):
    """P(T = k) = (1 - p)^(k-1) p, evaluated through log space."""
    out = np.exp(geometric_logpmf(law, k))
    return float(out) if np.ndim(out) == 0 else out


def geometric_sample(law: GeometricLaw, rng: RngStream, size=None, method: str = "inversion"):
    """Draw from Geom(p) on {1, 2, ...}.

    ``method="inversion"`` uses k = ceil(log u / log(1 - p)) and costs O(1)
    regardless of p.  ``method="loop"`` simulates Bernoulli trials one by one;
    its cost grows like 1/p and it exists only to demonstrate that effect.
    """
    if method == "loop":
        if size is not None:
            return np.array([geometric_sample(law, rng, method="loop") for _ in range(int(np.prod(size)))]).reshape(size)
        k = 1
        while rng.uniform() >= law.p:
            k += 1
        return k
    if method != "inversion":
        raise DomainError(f"unknown geometric sampling method {method!r}")
    if law.p == 1.0:
        return 1 if size is None else np.ones(size, dtype=np.int64)
    u = rng.uniform_open(size)
    k = np.ceil(np.log(u) / math.log1p(-law.p))
    k = np.maximum(k, 1).astype(np.int64)
    return int(k) if size is None else k


# ---------------------------------------------------------------------------
# continuous laws
# ---------------------------------------------------------------------------


def unit_ball_volume(d: int) -> float:
    """Volume of the Euclidean unit ball in R^d."""
    if d < 1:
        raise DomainError("dimension must be >= 1")
    return math.exp(d * math.log(2.0) + d * gammaln(1.5) - gammaln(1.0 + d / 2.0))


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != d:
        raise DomainError(f"expected trailing dimension {d}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class GaussianLaw:
    """Isotropic normal N(mean, precision_scale^-1 I)."""

    mean: np.ndarray
    precision_scale: float

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        if not self.precision_scale > 0:
            raise DomainError("precision_scale must be positive")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def logpdf(self, x):
        x = _as_points(x, self.dim)
        sq = np.sum((x - self.mean) ** 2, axis=-1)
        return 0.5 * self.dim * math.log(self.precision_scale / (2 * math.pi)) - 0.5 * self.precision_scale * sq

    def sample(self, rng: RngStream, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.mean + rng.normal(shape) / math.sqrt(self.precision_scale)


@dataclass(frozen=True)
class KNormLaw:
    """K-norm law with density proportional to exp(-||x - m||_K / s).

    Only the l2 norm is implemented.
    """

    location: np.ndarray
    scale: float
    norm: str = "l2"

    def __post_init__(self):
        object.__setattr__(self, "location", np.atleast_1d(np.asarray(self.location, dtype=float)))
        if not self.scale > 0:
            raise DomainError("scale must be positive")
        if self.norm != "l2":
            raise UnsupportedFeatureError(f"norm {self.norm!r} is not supported; only 'l2'")

    @property
    def dim(self) -> int:
        return self.location.shape[0]

    @property
    def log_normalizer(self) -> float:
        # c = d! s^d Vol(K)
        d = self.dim
        return gammaln(d + 1.0) + d * math.log(self.scale) + math.log(unit_ball_volume(d))

    def logpdf(self, x):
        x = _as_points(x, self.dim)
        r = np.sqrt(np.sum((x - self.location) ** 2, axis=-1))
        return -r / self.scale - self.log_normalizer

    def sample(self, rng: RngStream, size=None):
        n = 1 if size is None else size
        z = rng.normal((n, self.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        # radial density is proportional to r^(d-1) exp(-r/s): Gamma(d, s)
        r = rng.gamma(self.dim, self.scale, n)
        out = self.location + z * r[:, None]
        return out[0] if size is None else out


@dataclass(frozen=True)
class UniformBox:
    """Uniform law on an axis-aligned box."""

    lower: np.ndarray
    upper: np.ndarray
    _log_volume: float = field(init=False, repr=False)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise DomainError("box needs upper > lower in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "_log_volume", float(np.sum(np.log(hi - lo))))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x):
        x = _as_points(x, self.dim)
        return np.all((x >= self.lower) & (x <= self.upper), axis=-1)

    def logpdf(self, x):
        return np.where(self.contains(x), -self._log_volume, -np.inf)

    def sample(self, rng: RngStream, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.lower + (self.upper - self.lower) * rng.uniform(shape)


def gaussian_logpdf(law: GaussianLaw, x):
    return law.logpdf(x)


def gaussian_sample(law: GaussianLaw, rng: RngStream, size=None):
    return law.sample(rng, size)


def knorm_logpdf(law: KNormLaw, x):
    return law.logpdf(x)


def knorm_sample(law: KNormLaw, rng: RngStream, size=None):
    return law.sample(rng, size)

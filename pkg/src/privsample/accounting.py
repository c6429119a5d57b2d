"""Closed-form privacy accounting for the runtime of rejection samplers.

The runtime of a plain rejection sampler on database D is Geom(p_D).  The
quantity

    R = sup over adjacent (D, D') of log(1 - p_D) / log(1 - p_D')

controls how much that runtime leaks, through the tradeoff function
:func:`f_R` and its (eps, delta) conversions :func:`delta_of_eps` and
:func:`eps_of_delta`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DomainError

__all__ = [
    "TradeoffCurve",
    "EpsDelta",
    "RBound",
    "geom_max_divergence",
    "f_R",
    "f_R_breakpoints",
    "f_R_curve",
    "delta_of_eps",
    "delta_at_zero",
    "eps_of_delta",
    "f_eps_delta",
    "curve_to_eps_delta",
    "exp_mech_R",
    "adaptive_runtime_divergence",
    "batched_acceptance",
    "batched_R",
    "runtime_R",
    "exact_geometric_tradeoff",
]

_CURVE_TOL = 1e-12


@dataclass(frozen=True)
class TradeoffCurve:
    """Piecewise-linear tradeoff function.

    ``alpha`` is strictly decreasing from 1 to 0 and ``beta`` holds the type-II
    error at each vertex.  Evaluation interpolates linearly between vertices,
    which is exact for tradeoffs of discrete laws (randomised tests fill the
    gaps).  Pass ``validate=False`` for empirical curves, which need not be
    convex.
    """

    alpha: np.ndarray
    beta: np.ndarray
    validate: bool = True

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        b = np.asarray(self.beta, dtype=float)
        if a.shape != b.shape or a.ndim != 1 or a.size < 2:
            raise DomainError("alpha and beta must be 1-d arrays of equal length >= 2")
        if not (np.all(np.diff(a) < 0) and a[0] == 1.0 and a[-1] == 0.0):
            raise DomainError("alpha must decrease strictly from 1 to 0")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if self.validate:
            self._check()

    def _check(self, tol: float = 1e-9):
        a, b = self.alpha[::-1], self.beta[::-1]
        if np.any(b < -tol) or np.any(b > 1 + tol):
            raise DomainError("beta must lie in [0, 1]")
        if np.any(np.diff(b) > tol):
            raise DomainError("tradeoff curve must be non-increasing")
        if np.any(b > 1 - a + tol):
            raise DomainError("tradeoff curve must satisfy f(alpha) <= 1 - alpha")
        slopes = np.diff(b) / np.diff(a)
        if np.any(np.diff(slopes) < -tol * (1 + np.abs(slopes[1:]))):
            raise DomainError("tradeoff curve must be convex")

    @classmethod
    def from_function(cls, f, grid: Sequence[float], validate: bool = True) -> "TradeoffCurve":
        grid = np.unique(np.clip(np.concatenate([np.asarray(grid, dtype=float), [0.0, 1.0]]), 0, 1))[::-1]
        return cls(grid, np.asarray(f(grid), dtype=float), validate=validate)

    @classmethod
    def identity(cls) -> "TradeoffCurve":
        """The perfect-privacy line 1 - alpha."""
        return cls(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def __call__(self, alpha):
        out = np.interp(alpha, self.alpha[::-1], self.beta[::-1])
        return float(out) if np.ndim(out) == 0 else out

    def inverse(self) -> "TradeoffCurve":
        """f^{-1}, i.e. the tradeoff with the two hypotheses swapped."""
        # reflect across the diagonal; re-anchor the endpoints
        a, b = self.beta[::-1].copy(), self.alpha[::-1].copy()
        if a[0] < 1.0:
            a, b = np.concatenate([[1.0], a]), np.concatenate([[0.0], b])
        if a[-1] > 0.0:
            a, b = np.concatenate([a, [0.0]]), np.concatenate([b, [b[-1]]])
        keep = np.concatenate([[True], np.diff(a) < 0])
        return TradeoffCurve(a[keep], b[keep], validate=self.validate)

    def symmetrized_min(self) -> "TradeoffCurve":
        """Pointwise min of f and f^{-1} on the union of their vertices (not convexified)."""
        inv = self.inverse()
        grid = np.unique(np.concatenate([self.alpha, inv.alpha]))[::-1]
        return TradeoffCurve(grid, np.minimum(self(grid), inv(grid)), validate=False)


@dataclass(frozen=True)
class EpsDelta:
    eps: float
    delta: float

    def __post_init__(self):
        if not self.eps >= 0:
            raise DomainError("eps must be non-negative")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError("delta must lie in [0, 1]")


@dataclass(frozen=True)
class RBound:
    """Worst-case ratio of log-survival rates; normalised so that R >= 1."""

    R: float

    def __post_init__(self):
        if not self.R >= 1.0:
            raise DomainError("R must be >= 1 (swap the databases)")

    def __float__(self):
        return float(self.R)


def _R(R) -> float:
    R = float(R)
    if not R >= 1.0:
        raise DomainError("R must be >= 1")
    return R


def runtime_R(p: float, q: float) -> float:
    """log(1 - p) / log(1 - q), oriented so the result is >= 1."""
    for v in (p, q):
        if not 0.0 < v < 1.0:
            raise DomainError("acceptance probabilities must lie in (0, 1)")
    r = math.log1p(-p) / math.log1p(-q)
    return r if r >= 1.0 else 1.0 / r


# ---------------------------------------------------------------------------
# pure DP: max-divergence of geometric runtimes
# ---------------------------------------------------------------------------


def geom_max_divergence(p: float, q: float, symmetric: bool = False) -> float:
    """D_inf(Geom(p) || Geom(q)); ``math.inf`` when p < q.

    With ``symmetric=True`` returns the symmetric max-divergence, which is
    infinite for every p != q.
    """
    for v in (p, q):
        if not 0.0 < v < 1.0:
            raise DomainError("geometric parameters must lie in (0, 1)")
    if symmetric:
        return 0.0 if p == q else math.inf
    return math.log(p / q) if p >= q else math.inf


# ---------------------------------------------------------------------------
# f-DP
# ---------------------------------------------------------------------------


def f_R_breakpoints(R: float) -> tuple[float, float]:
    """(alpha_1, alpha_2) = (R^(R/(1-R)), 1 - R^(1/(1-R))) for R > 1."""
    R = _R(R)
    if R == 1.0:
        # limits as R -> 1+: alpha_1 -> 1/e, alpha_2 -> 1 - 1/e
        return math.exp(-1.0), 1.0 - math.exp(-1.0)
    a1 = math.exp(R * math.log(R) / (1.0 - R))
    a2 = -math.expm1(math.log(R) / (1.0 - R))
    return a1, a2


def f_R(R: float, alpha):
    """Tradeoff function bounding the runtime of a sampler with ratio R.

    Piecewise: 1 - alpha^(1/R) below alpha_1, the common tangent line of slope
    -1 in between, and (1 - alpha)^R above alpha_2.  At R = 1 this is 1 - alpha.
    """
    R = _R(R)
    a = np.clip(np.asarray(alpha, dtype=float), 0.0, 1.0)
    if R == 1.0:
        out = 1.0 - a
    else:
        a1, a2 = f_R_breakpoints(R)
        with np.errstate(divide="ignore"):
            low = 1.0 - np.power(a, 1.0 / R)
            mid = -a + a1 + a2
            high = np.power(1.0 - a, R)
        out = np.where(a <= a1, low, np.where(a < a2, mid, high))
    return float(out) if np.ndim(out) == 0 else out


def f_R_curve(R: float, n: int = 1001) -> TradeoffCurve:
    """f_R sampled on an n-point grid plus both breakpoints."""
    grid = np.linspace(0.0, 1.0, n)
    if R > 1.0:
        grid = np.concatenate([grid, f_R_breakpoints(R)])
    return TradeoffCurve.from_function(lambda a: f_R(R, a), grid)


def delta_at_zero(R: float) -> float:
    """delta(0) = (R - 1) R^(R/(1-R)); above it the (eps, delta) bound is (0, delta)."""
    R = _R(R)
    if R == 1.0:
        return 0.0
    return (R - 1.0) * f_R_breakpoints(R)[0]


def delta_of_eps(R: float, eps: float) -> float:
    """delta(eps) = (1 - 1/R) exp((-eps - log R) / (R - 1))."""
    R = _R(R)
    if eps < 0:
        raise DomainError("eps must be non-negative")
    if R == 1.0:
        return 0.0
    return (1.0 - 1.0 / R) * math.exp((-eps - math.log(R)) / (R - 1.0))


def eps_of_delta(R: float, delta: float) -> float:
    """eps(delta) = log(1/R) + (R - 1)(log(1/delta) + log(1 - 1/R)).

    Clamped to 0 once delta exceeds delta(0).
    """
    R = _R(R)
    if not 0.0 < delta <= 1.0:
        raise DomainError("delta must lie in (0, 1]")
    if R == 1.0 or delta >= delta_at_zero(R):
        return 0.0
    eps = -math.log(R) + (R - 1.0) * (-math.log(delta) + math.log1p(-1.0 / R))
    return max(eps, 0.0)


def f_eps_delta(ed: EpsDelta, alpha):
    """max{0, 1 - delta - e^eps alpha, e^-eps (1 - delta - alpha)}."""
    a = np.asarray(alpha, dtype=float)
    e = math.exp(ed.eps) if ed.eps < 700 else math.inf
    with np.errstate(invalid="ignore"):
        first = np.where(a > 0, 1.0 - ed.delta - e * a, 1.0 - ed.delta)
    out = np.maximum.reduce([np.zeros_like(a), first, (1.0 - ed.delta - a) / e])
    return float(out) if np.ndim(out) == 0 else out


def curve_to_eps_delta(f: TradeoffCurve, eps: float) -> EpsDelta:
    """Smallest delta with (1 - delta) - e^eps alpha <= f(alpha) for all alpha.

    ``f`` is piecewise linear, so checking its vertices is exact.
    """
    if eps < 0:
        raise DomainError("eps must be non-negative")
    gap = 1.0 - math.exp(eps) * f.alpha - f.beta
    return EpsDelta(eps, float(min(max(0.0, gap.max()), 1.0)))


# ---------------------------------------------------------------------------
# exponential mechanism, adaptive samplers, batching
# ---------------------------------------------------------------------------


def exp_mech_R(eps: float, p_star: float) -> RBound:
    """R = log(1 - p*) / log(1 - e^-eps p*) for a generic exponential mechanism."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not 0.0 < p_star < 1.0:
        raise DomainError("p_star must lie in (0, 1)")
    return RBound(math.log1p(-p_star) / math.log1p(-math.exp(-eps) * p_star))


def adaptive_runtime_divergence(p_seq, q_seq, horizon: int) -> float:
    """Lower bound on the pure-DP cost of an adaptive sampler's runtime.

    Returns the sup over t <= horizon of
    |log(p_t/q_t) + sum_{i<t} log((1-p_i)/(1-q_i))|, the absolute log ratio of
    the two runtime pmfs at t.  ``math.inf`` if some p_i = 1 while q_i < 1 (or
    vice versa).  This is a necessary condition on eps_T, not a tight cost.
    """
    p = np.asarray(p_seq, dtype=float)
    q = np.asarray(q_seq, dtype=float)
    if horizon < 1 or p.size < horizon or q.size < horizon:
        raise DomainError("both sequences need at least `horizon` entries")
    p, q = p[:horizon], q[:horizon]
    if np.any((p <= 0) | (p > 1) | (q <= 0) | (q > 1)):
        raise DomainError("acceptance probabilities must lie in (0, 1]")
    best = 0.0
    survival_gap = 0.0
    for pt, qt in zip(p, q):
        if (pt == 1.0) != (qt == 1.0):
            return math.inf
        best = max(best, abs(math.log(pt / qt) + survival_gap))
        if pt == 1.0:
            # both runtimes stop here for sure
            break
        survival_gap += math.log1p(-pt) - math.log1p(-qt)
    return best


def batched_acceptance(p: float, k: int) -> float:
    """Acceptance probability of k parallel (or batched) copies: 1 - (1 - p)^k."""
    return -math.expm1(k * math.log1p(-p))


def batched_R(p: float, q: float, k: int) -> float:
    """R for k-fold parallel/batched samplers; identical to the k = 1 value."""
    if k < 1:
        raise DomainError("k must be >= 1")
    for v in (p, q):
        if not 0.0 < v < 1.0:
            raise DomainError("acceptance probabilities must lie in (0, 1)")
    # 1 - [1 - (1-p)^k] is the batch survival probability (1-p)^k
    surv_p = (1.0 - p) ** k
    surv_q = (1.0 - q) ** k
    return math.log(surv_p) / math.log(surv_q)


def exact_geometric_tradeoff(p: float, q: float, alpha_floor: float = 1e-6) -> TradeoffCurve:
    """Exact Neyman-Pearson tradeoff T(Geom(p), Geom(q)).

    For p > q the likelihood ratio favours Geom(q) for long runtimes, so the
    optimal tests reject when T >= t, giving vertices
    ((1-p)^(t-1), 1 - (1-q)^(t-1)).  Vertices are generated until alpha drops
    below ``alpha_floor`` and the curve is then closed at (0, 1).  For p < q the
    curve is the inverse of T(Geom(q), Geom(p)).
    """
    for v in (p, q):
        if not 0.0 < v <= 1.0:
            raise DomainError("geometric parameters must lie in (0, 1]")
    if p == q:
        return TradeoffCurve.identity()
    if p < q:
        return exact_geometric_tradeoff(q, p, alpha_floor).inverse()
    alphas, betas = [], []
    t = 1
    while True:
        a = (1.0 - p) ** (t - 1)
        b = -math.expm1((t - 1) * math.log1p(-q)) if q < 1 else 1.0
        alphas.append(a)
        betas.append(b)
        if a < alpha_floor:
            break
        t += 1
    if alphas[-1] > 0.0:
        alphas.append(0.0)
        betas.append(1.0)
    return TradeoffCurve(np.array(alphas), np.array(betas))

"""Exponential-mechanism targets that come with constant-ratio envelopes.

A strongly concave, L-smooth utility g is sandwiched by two Gaussians
centred at its mode, with c_L/c_U = (alpha/L)^(d/2).  The K-norm gradient
target exp(-||grad g(x)||_2) of a strongly convex, smooth objective is
sandwiched by two l2 K-norm laws, with c_L/c_U = (alpha/L)^d.  Neither
ratio involves the data, which is what the squeeze sampler needs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .distributions import GaussianLaw, KNormLaw, unit_ball_volume
from .exceptions import DomainError, InvalidEnvelopeError, NoModeError
from .samplers import Envelope, UnnormalizedTarget

__all__ = [
    "StronglyConcaveTarget",
    "KNGTarget",
    "ERMSpec",
    "gaussian_envelope",
    "knorm_envelope",
    "build_erm_target",
    "ridge_loss",
    "ridge_loss_grad",
    "ridge_solution",
    "load_erm_spec",
]


def _central_gradient(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


@dataclass(kw_only=True)
class StronglyConcaveTarget(UnnormalizedTarget):
    """exp(g) with g alpha-strongly concave and L-smooth, maximised at x_star."""

    alpha: float
    L_smooth: float
    x_star: np.ndarray
    check: bool = True

    def __post_init__(self):
        self.x_star = np.atleast_1d(np.asarray(self.x_star, dtype=float))
        if self.x_star.shape != (self.dim,):
            raise DomainError("x_star must have length dim")
        if not 0 < self.alpha <= self.L_smooth:
            raise DomainError("need 0 < alpha <= L_smooth")
        if self.check:
            scale = max(1.0, abs(self(self.x_star)))
            grad = _central_gradient(self, self.x_star)
            if np.max(np.abs(grad)) > 1e-4 * scale:
                raise InvalidEnvelopeError(f"x_star is not a stationary point (gradient {grad})")

    @property
    def g_at_mode(self) -> float:
        return self(self.x_star)


@dataclass(kw_only=True)
class KNGTarget(UnnormalizedTarget):
    """exp(-||grad g(x)||_2) for an alpha-strongly convex, L-smooth objective g.

    Built through :meth:`from_gradient`; ``log_density`` is derived from
    ``gradient``.
    """

    gradient: Callable
    alpha: float
    L_smooth: float
    x_star: np.ndarray

    @classmethod
    def from_gradient(cls, gradient: Callable, dim: int, alpha: float, L_smooth: float, x_star) -> "KNGTarget":
        if not 0 < alpha <= L_smooth:
            raise DomainError("need 0 < alpha <= L_smooth")
        x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
        if np.linalg.norm(gradient(x_star)) > 1e-6:
            raise InvalidEnvelopeError("gradient does not vanish at x_star")

        def log_density(x):
            return -float(np.linalg.norm(gradient(x)))

        return cls(log_density=log_density, dim=dim, gradient=gradient, alpha=alpha, L_smooth=L_smooth, x_star=x_star)


def gaussian_envelope(t: StronglyConcaveTarget, validate: bool = True) -> Envelope:
    """Gaussian proposal N(x*, alpha^-1 I) and squeeze N(x*, L^-1 I)."""
    d = t.dim
    g_star = t.g_at_mode
    env = Envelope(
        proposal=GaussianLaw(t.x_star, t.alpha),
        log_cU=g_star + 0.5 * d * math.log(2 * math.pi / t.alpha),
        squeeze=GaussianLaw(t.x_star, t.L_smooth),
        log_cL=g_star + 0.5 * d * math.log(2 * math.pi / t.L_smooth),
    )
    if validate:
        env.validate(t)
    return env


def knorm_envelope(t: KNGTarget, validate: bool = True) -> Envelope:
    """l2 K-norm proposal with scale 1/alpha and squeeze with scale 1/L."""
    d = t.dim
    log_common = gammaln(d + 1.0) + math.log(unit_ball_volume(d))
    env = Envelope(
        proposal=KNormLaw(t.x_star, 1.0 / t.alpha),
        log_cU=log_common - d * math.log(t.alpha),
        squeeze=KNormLaw(t.x_star, 1.0 / t.L_smooth),
        log_cL=log_common - d * math.log(t.L_smooth),
    )
    if validate:
        env.validate(t)
    return env


# ---------------------------------------------------------------------------
# empirical risk minimisation
# ---------------------------------------------------------------------------


def ridge_loss(x, record) -> float:
    """0.5 (a^T x - b)^2 for a record [a_1, ..., a_d, b]."""
    record = np.asarray(record, dtype=float)
    return 0.5 * float(record[:-1] @ x - record[-1]) ** 2


def ridge_loss_grad(x, record) -> np.ndarray:
    record = np.asarray(record, dtype=float)
    a = record[:-1]
    return (a @ x - record[-1]) * a


def ridge_solution(records, alpha_reg: float) -> np.ndarray:
    """Closed-form minimiser of sum 0.5 (a_i^T x - b_i)^2 + 0.5 alpha_reg ||x||^2."""
    rec = np.asarray(records, dtype=float)
    A, b = rec[:, :-1], rec[:, -1]
    return np.linalg.solve(A.T @ A + alpha_reg * np.eye(A.shape[1]), A.T @ b)


@dataclass
class ERMSpec:
    """Regularised empirical risk sum_i loss(x; d_i) + (alpha_reg/2)||x||^2.

    ``loss_grad`` is optional; without it gradients are taken by central
    differences.  The mechanism samples exp((eps / (2 delta_sens)) g_D) with
    g_D the negated risk.
    """

    records: Sequence
    alpha_reg: float
    L_loss: float
    delta_sens: float
    eps: float
    dim: int
    loss: Callable = ridge_loss
    loss_grad: Optional[Callable] = ridge_loss_grad

    def __post_init__(self):
        if not self.delta_sens > 0:
            raise DomainError("sensitivity bound must be positive")
        if not (self.alpha_reg > 0 and self.eps > 0 and self.L_loss >= 0):
            raise DomainError("need alpha_reg > 0, eps > 0, L_loss >= 0")
        self._design = None
        if self.loss is ridge_loss and self.n > 0:
            rec = np.asarray(self.records, dtype=float)
            self._design = (rec[:, :-1], rec[:, -1])

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def scale(self) -> float:
        return self.eps / (2.0 * self.delta_sens)

    def risk(self, x) -> float:
        x = np.asarray(x, dtype=float)
        reg = 0.5 * self.alpha_reg * float(x @ x)
        design = self._design
        if design is not None:
            resid = design[0] @ x - design[1]
            return 0.5 * float(resid @ resid) + reg
        return sum(self.loss(x, r) for r in self.records) + reg

    def risk_grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        design = self._design
        if design is not None and self.loss_grad is ridge_loss_grad:
            A, b = design
            return A.T @ (A @ x - b) + self.alpha_reg * x
        if self.loss_grad is None:
            return _central_gradient(self.risk, x, h=1e-6)
        grad = self.alpha_reg * x
        for r in self.records:
            grad = grad + self.loss_grad(x, r)
        return grad


def load_erm_spec(path) -> ERMSpec:
    """Read {records, alpha_reg, L_loss, delta_sens, eps}; records are ridge rows [a..., b]."""
    with open(path) as fh:
        cfg = json.load(fh)
    records = [list(map(float, r)) for r in cfg["records"]]
    dim = int(cfg.get("dim", len(records[0]) - 1 if records else 1))
    return ERMSpec(records, float(cfg["alpha_reg"]), float(cfg["L_loss"]), float(cfg["delta_sens"]),
                   float(cfg["eps"]), dim)


def build_erm_target(spec: ERMSpec, x_star=None, max_iter: int = 5000, tol: float = 1e-8) -> StronglyConcaveTarget:
    """Scaled utility (eps/(2 Delta)) g_D as a strongly concave target.

    The mode is taken from ``x_star`` or found by gradient descent with step
    1/L that always runs exactly ``max_iter`` iterations, so the optimiser's
    cost does not depend on the records.
    """
    total_L = spec.n * spec.L_loss + spec.alpha_reg
    if x_star is None:
        x = np.zeros(spec.dim)
        step = 1.0 / total_L
        for _ in range(max_iter):
            x = x - step * spec.risk_grad(x)
        if np.linalg.norm(spec.risk_grad(x)) >= tol:
            raise NoModeError(f"gradient norm {np.linalg.norm(spec.risk_grad(x)):.3g} after {max_iter} steps")
        x_star = x
    scale = spec.scale

    def log_density(x):
        return -scale * spec.risk(x)

    return StronglyConcaveTarget(
        log_density=log_density,
        dim=spec.dim,
        alpha=scale * spec.alpha_reg,
        L_smooth=scale * total_L,
        x_star=x_star,
    )

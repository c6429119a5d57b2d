"""Rejection samplers whose runtime is reported as an iteration count.

:func:`simple_reject` is the baseline whose runtime Geom(p_D) leaks the
database.  The other three remove that leak:

* :func:`truncated_reject` always runs a fixed number of iterations;
* :func:`additive_wait_reject` pads the runtime with a geometric wait so the
  total is Geom(1/c) for a data-free constant c;
* :func:`squeeze_reject` publishes only when a proposal also falls under a
  squeeze bound, so the runtime is Geom(c_L/c_U).

All accept tests compare ``log(Y)`` against log-ratios.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .distributions import GeometricLaw, RngStream, UniformBox, geometric_sample
from .exceptions import DomainError, InvalidEnvelopeError, InvariantViolation

__all__ = [
    "UnnormalizedTarget",
    "Envelope",
    "Event",
    "SampleTrace",
    "simple_reject",
    "truncated_iterations",
    "truncated_reject",
    "additive_wait_reject",
    "additive_wait_pmf",
    "squeeze_reject",
    "squeeze_from_known_constant",
    "write_events_jsonl",
]

ENVELOPE_SLACK = 1e-9


def _slack(g):
    return ENVELOPE_SLACK * max(1.0, abs(g)) if math.isfinite(g) else ENVELOPE_SLACK


@dataclass(kw_only=True)
class UnnormalizedTarget:
    """An unnormalised log-density g(x) = log pi~(x).

    ``log_density`` maps a length-``dim`` vector to a float (or, when
    ``vectorized`` is true, an ``(n, dim)`` array to ``n`` floats).  Points
    outside ``support`` (None means all of R^d) have log-density -inf.
    ``log_normalizer`` is log of the integral of pi~ when it is known.
    """

    log_density: Callable
    dim: int
    support: Optional[UniformBox] = None
    vectorized: bool = False
    log_normalizer: Optional[float] = None

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.support is not None and not self.support.contains(x):
            return -math.inf
        if self.vectorized:
            return float(np.asarray(self.log_density(x[None, :]))[0])
        return float(self.log_density(x))

    def evaluate_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        if self.vectorized:
            out = np.asarray(self.log_density(xs), dtype=float).reshape(-1)
        else:
            out = np.array([float(self.log_density(x)) for x in xs])
        if self.support is not None:
            out = np.where(self.support.contains(xs), out, -np.inf)
        return out

    def normalized_logpdf(self, x):
        """log pi(x); requires ``log_normalizer``."""
        if self.log_normalizer is None:
            raise DomainError("target normalizer is unknown")
        return self(x) - self.log_normalizer


class _NormalizedTargetDensity:
    """A normalised target viewed as a (non-sampleable) density."""

    def __init__(self, target: UnnormalizedTarget):
        if target.log_normalizer is None:
            raise DomainError("target normalizer is unknown")
        self.target = target
        self.dim = target.dim

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.target(x) - self.target.log_normalizer
        return self.target.evaluate_many(x) - self.target.log_normalizer


@dataclass
class Envelope:
    """Bounds c_L L(x) <= pi~(x) <= c_U U(x) with U sampleable.

    ``proposal`` and ``squeeze`` are normalised densities exposing
    ``logpdf``; the proposal also exposes ``sample(rng, size=None)``.
    """

    proposal: object
    log_cU: float
    squeeze: object = None
    log_cL: Optional[float] = None

    def __post_init__(self):
        if (self.squeeze is None) != (self.log_cL is None):
            raise DomainError("squeeze and log_cL must be given together")
        if self.log_cL is not None and self.log_cL > self.log_cU + ENVELOPE_SLACK:
            raise InvalidEnvelopeError("c_L cannot exceed c_U")

    @property
    def has_squeeze(self) -> bool:
        return self.squeeze is not None

    @property
    def log_ratio(self) -> float:
        """log(c_L / c_U): the per-iteration publish probability of the squeeze sampler."""
        if not self.has_squeeze:
            raise DomainError("envelope has no squeeze")
        return self.log_cL - self.log_cU

    def validate(self, target: UnnormalizedTarget, n_probe: int = 10_000, seed: int = 0) -> None:
        """Probe the sandwich at ``n_probe`` proposal draws.

        Raises :class:`InvalidEnvelopeError` on a violation beyond a 1e-9
        relative slack.
        """
        rng = RngStream(seed, 0xE7E)
        xs = np.asarray(self.proposal.sample(rng, n_probe)).reshape(n_probe, -1)
        if self.has_squeeze and hasattr(self.squeeze, "sample"):
            half = n_probe // 2
            xs[:half] = np.asarray(self.squeeze.sample(rng, half)).reshape(half, -1)
        g = target.evaluate_many(xs)
        slack = ENVELOPE_SLACK * np.maximum(1.0, np.abs(np.where(np.isfinite(g), g, 0.0)))
        upper = self.log_cU + self.proposal.logpdf(xs)
        bad = g > upper + slack
        if np.any(bad):
            i = int(np.argmax(bad))
            raise InvalidEnvelopeError(f"upper bound violated at x={xs[i]}: g={g[i]:.6g} > {upper[i]:.6g}")
        if self.has_squeeze:
            lower = self.log_cL + self.squeeze.logpdf(xs)
            bad = lower > g + slack
            if np.any(bad):
                i = int(np.argmax(bad))
                raise InvalidEnvelopeError(f"squeeze violated at x={xs[i]}: {lower[i]:.6g} > g={g[i]:.6g}")


@dataclass
class Event:
    iter: int
    x: np.ndarray
    y: float
    target_accept: bool
    publish: bool

    def to_dict(self) -> dict:
        return {
            "iter": self.iter,
            "x": [float(v) for v in np.atleast_1d(self.x)],
            "y": float(self.y),
            "target_accept": bool(self.target_accept),
            "publish": bool(self.publish),
        }


@dataclass
class SampleTrace:
    """Published value plus the runtime (number of iterations)."""

    value: np.ndarray
    runtime: int
    accepted: bool = True
    events: Optional[list] = field(default=None, repr=False)


def write_events_jsonl(events, fp) -> None:
    """One JSON object per line: {iter, x, y, target_accept, publish}."""
    for ev in events:
        fp.write(json.dumps(ev.to_dict()) + "\n")


def _upper_log_ratio(target, env, x):
    """(g(x), g(x) - log c_U - log U(x)); raises if the envelope is violated."""
    g = target(x)
    log_upper = env.log_cU + float(env.proposal.logpdf(x))
    if g > log_upper + _slack(g):
        raise InvalidEnvelopeError(f"target exceeds c_U U at x={x}: {g:.6g} > {log_upper:.6g}")
    return g, g - log_upper


def simple_reject(target: UnnormalizedTarget, env: Envelope, rng: RngStream,
                  record_events: bool = False, max_iter: Optional[int] = None) -> SampleTrace:
    """Plain rejection sampling; runtime ~ Geom(integral of pi~ / c_U)."""
    events = [] if record_events else None
    it = 0
    while max_iter is None or it < max_iter:
        it += 1
        x = env.proposal.sample(rng)
        u = rng.uniform_open()
        _, log_ratio = _upper_log_ratio(target, env, x)
        ok = math.log(u) <= log_ratio
        if events is not None:
            events.append(Event(it, x, u, ok, ok))
        if ok:
            return SampleTrace(x, it, True, events)
    return SampleTrace(x, it, False, events)


def truncated_iterations(alpha0: float, delta: float) -> int:
    """N = ceil(log(1/delta) / log(1/(1 - alpha0)))."""
    if not 0.0 < alpha0 < 1.0:
        raise DomainError("alpha0 must lie in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    n = math.log(delta) / math.log1p(-alpha0)
    # absorb float noise so exact integers (e.g. log 2 / log 2) are not bumped up
    return max(1, math.ceil(n - 1e-9))


def truncated_reject(target: UnnormalizedTarget, env: Envelope, alpha0: float, delta: float,
                     rng: RngStream, record_events: bool = False) -> SampleTrace:
    """Run exactly N iterations and publish the first accepted proposal.

    If nothing is accepted, one extra proposal draw is published with
    ``accepted=False``.  The runtime field is always N.
    """
    n = truncated_iterations(alpha0, delta)
    xs = np.asarray(env.proposal.sample(rng, n)).reshape(n, target.dim)
    us = rng.uniform_open(n)
    g = target.evaluate_many(xs)
    log_upper = env.log_cU + np.asarray(env.proposal.logpdf(xs), dtype=float)
    finite = np.isfinite(g)
    slack = ENVELOPE_SLACK * np.maximum(1.0, np.abs(np.where(finite, g, 0.0)))
    if np.any(g > log_upper + slack):
        i = int(np.argmax(g > log_upper + slack))
        raise InvalidEnvelopeError(f"target exceeds c_U U at x={xs[i]}")
    ok = np.log(us) <= g - log_upper
    events = None
    if record_events:
        first = int(np.argmax(ok)) if ok.any() else -1
        events = [Event(i + 1, xs[i], us[i], bool(ok[i]), i == first) for i in range(n)]
    if ok.any():
        return SampleTrace(xs[int(np.argmax(ok))], n, True, events)
    return SampleTrace(env.proposal.sample(rng), n, False, events)


def additive_wait_reject(target: UnnormalizedTarget, env: Envelope, c: float, rng: RngStream,
                         cD: Optional[float] = None, mode: str = "wait") -> SampleTrace:
    """Exact sampler whose runtime is Geom(1/c) for every database.

    ``cD`` is the envelope constant of the *normalised* target (so the plain
    sampler accepts with probability 1/cD); by default it is c_U / Z using the
    target's known normalizer.  ``c >= cD`` must hold for all databases.

    ``mode="wait"`` runs a plain sampler, then with probability 1 - cD/c adds
    an independent Geom(1/c) wait.  ``mode="thin"`` instead discards each
    acceptance with probability 1 - cD/c and keeps sampling.
    """
    if cD is None:
        log_z = target.log_normalizer if target.log_normalizer is not None else 0.0
        cD = math.exp(env.log_cU - log_z)
    if cD < 1.0 - 1e-12:
        raise DomainError("cD must be >= 1 for normalised densities")
    if c < cD:
        raise DomainError(f"c={c} must be >= cD={cD}")
    keep = cD / c
    if mode == "wait":
        trace = simple_reject(target, env, rng)
        if rng.uniform() >= keep:
            trace.runtime += geometric_sample(GeometricLaw(1.0 / c), rng)
        return trace
    if mode == "thin":
        it = 0
        while True:
            it += 1
            x = env.proposal.sample(rng)
            u = rng.uniform_open()
            _, log_ratio = _upper_log_ratio(target, env, x)
            if math.log(u) <= log_ratio and rng.uniform() < keep:
                return SampleTrace(x, it, True)
    raise DomainError(f"unknown mode {mode!r}")


def additive_wait_pmf(q: float, p: float, kmax: int) -> np.ndarray:
    """Exact pmf on {1..kmax} of X2 (w.p. p/q) or X2 + Wait (otherwise).

    X2 ~ Geom(q) and Wait ~ Geom(p), by explicit convolution.
    """
    if not 0.0 < p <= q <= 1.0:
        raise DomainError("need 0 < p <= q <= 1")
    k = np.arange(1, kmax + 1)
    base = q * (1.0 - q) ** (k - 1)
    wait = p * (1.0 - p) ** (k - 1)
    conv = np.zeros(kmax)
    # P(X2 + Wait = t) = sum_{x=1}^{t-1} P(X2 = x) P(Wait = t - x)
    for t in range(2, kmax + 1):
        conv[t - 1] = np.dot(base[: t - 1], wait[t - 2 :: -1])
    return (p / q) * base + (1.0 - p / q) * conv


def squeeze_reject(target: UnnormalizedTarget, env: Envelope, rng: RngStream,
                   record_events: bool = False) -> SampleTrace:
    """Privacy-aware rejection sampling with a squeeze bound.

    Each iteration draws X ~ U and one uniform Y.  The first X with
    Y <= pi~(X) / (c_U U(X)) becomes the candidate; the candidate is published
    at the first iteration with Y <= c_L L(X) / (c_U U(X)).  Because the same Y
    drives both tests, publication implies a candidate exists; the runtime is
    Geom(c_L / c_U).
    """
    if not env.has_squeeze:
        raise DomainError("squeeze_reject needs an envelope with a squeeze")
    events = [] if record_events else None
    any_accepted = False
    x_s = None
    it = 0
    while True:
        it += 1
        x = env.proposal.sample(rng)
        u = rng.uniform_open()
        log_y = math.log(u)
        g, log_ratio = _upper_log_ratio(target, env, x)
        log_lower = env.log_cL + float(env.squeeze.logpdf(x))
        if log_lower > g + _slack(g):
            raise InvalidEnvelopeError(f"squeeze exceeds target at x={x}: {log_lower:.6g} > {g:.6g}")
        target_accept = log_y <= log_ratio and not any_accepted
        if target_accept:
            x_s = x
            any_accepted = True
        publish = log_y <= log_lower - env.log_cU - float(env.proposal.logpdf(x))
        if events is not None:
            events.append(Event(it, x, u, target_accept, publish))
        if publish:
            if not any_accepted:
                raise InvariantViolation("publish fired before any target acceptance")
            return SampleTrace(x_s, it, True, events)


def squeeze_from_known_constant(target: UnnormalizedTarget, env: Envelope, c: float,
                                rng: RngStream, record_events: bool = False) -> SampleTrace:
    """Squeeze sampler using the normalised target itself as the squeeze.

    With L = pi and c_L = c_U / c the runtime is Geom(1/c); ``c`` is measured
    against the normalised target, so it must be at least c_U / Z.
    """
    squeeze = _NormalizedTargetDensity(target)
    log_c = math.log(c)
    if log_c < env.log_cU - target.log_normalizer - 1e-12:
        raise DomainError("c must be >= c_U for the normalised target")
    wrapped = Envelope(env.proposal, env.log_cU, squeeze, env.log_cU - log_c)
    return squeeze_reject(target, wrapped, rng, record_events)

"""Adaptive rejection sampling for log-Hoelder densities on a box.

The log-density g is approximated by its value at the nearest grid point,
g_hat.  Hoelder continuity in the sup-norm gives

    exp(g_hat - r_hat) <= exp(g) <= exp(g_hat + r_hat),   r_hat = H * rho^s,

where rho is the largest sup-norm distance from a point to its grid point.
Proposals come from exp(g_hat); a proposal becomes the pending sample when
Y <= exp(g - g_hat - r_hat) and the pending sample is published when
Y <= exp(-2 r_hat).  The publish probability exp(-2 r_hat) only depends on
(H, s) and the grid, and the grid only changes on a data-free schedule, so
the time between published samples carries no information about g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .distributions import RngStream
from .exceptions import BudgetError, DomainError, InvalidEnvelopeError, InvariantViolation, ScheduleContractError

__all__ = [
    "LogHolderTarget",
    "GridApproximation",
    "RefinementSchedule",
    "LevelRecord",
    "AdaptiveRun",
    "build_grid",
    "sample_from_grid",
    "adaptive_sample",
    "relative_runtime_ratio",
]

DEFAULT_MAX_EVALS = 1_000_000
_SLACK = 1e-9


@dataclass(kw_only=True)
class LogHolderTarget:
    """exp(g) on a box, with |g(x) - g(y)| <= H ||x - y||_inf^s.

    ``lower``/``upper`` default to the unit cube.  Internally everything runs
    on [0, 1]^d; the affine map rescales H by (longest edge)^s.
    """

    log_density: Callable
    dim: int
    holder_H: float
    holder_s: float = 1.0
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    vectorized: bool = False
    check_holder: bool = True

    def __post_init__(self):
        if not 0.0 < self.holder_s <= 1.0:
            raise DomainError("Hoelder exponent must lie in (0, 1]")
        if not self.holder_H > 0:
            raise DomainError("Hoelder constant must be positive")
        self.lower = np.zeros(self.dim) if self.lower is None else np.asarray(self.lower, dtype=float).reshape(self.dim)
        self.upper = np.ones(self.dim) if self.upper is None else np.asarray(self.upper, dtype=float).reshape(self.dim)
        if np.any(self.upper <= self.lower):
            raise DomainError("box needs upper > lower")
        if self.check_holder:
            self.spot_check()

    @property
    def unit_H(self) -> float:
        return self.holder_H * float(np.max(self.upper - self.lower)) ** self.holder_s

    def to_box(self, u):
        return self.lower + (self.upper - self.lower) * u

    def unit_log_density(self, us) -> np.ndarray:
        """g at points of [0, 1]^d, shape (n, d) -> (n,)."""
        xs = self.to_box(np.asarray(us, dtype=float).reshape(-1, self.dim))
        if self.vectorized:
            return np.asarray(self.log_density(xs), dtype=float).reshape(-1)
        return np.array([float(self.log_density(x)) for x in xs])

    def spot_check(self, n_pairs: int = 2000, seed: int = 0) -> None:
        """Probe the Hoelder bound on random far and near pairs."""
        gen = np.random.default_rng(seed)
        a = gen.random((n_pairs, self.dim))
        b = gen.random((n_pairs, self.dim))
        half = n_pairs // 2
        b[half:] = np.clip(a[half:] + 1e-3 * gen.standard_normal((n_pairs - half, self.dim)), 0.0, 1.0)
        ga = self.unit_log_density(a)
        gb = self.unit_log_density(b)
        dist = np.max(np.abs(a - b), axis=1)
        bound = self.unit_H * dist**self.holder_s
        bad = np.abs(ga - gb) > bound + _SLACK * np.maximum(1.0, np.abs(ga))
        if np.any(bad):
            i = int(np.argmax(bad))
            raise InvalidEnvelopeError(
                f"Hoelder bound violated: |g(x)-g(y)|={abs(ga[i] - gb[i]):.6g} > {bound[i]:.6g}"
            )


@dataclass
class GridApproximation:
    """Piecewise-constant g_hat on a product grid over [0, 1]^d.

    ``mode="center"`` puts m evaluation points at cell centres (radius
    1/(2m) per axis); ``mode="endpoint"`` uses m equally spaced points
    including 0 and 1 with Voronoi cells (radius 1/(2(m-1))).
    """

    m: int
    dim: int
    mode: str
    points: np.ndarray
    edges: np.ndarray
    log_values: np.ndarray
    r_hat: float
    cumulative: np.ndarray
    log_total_mass: float

    @property
    def n_cells(self) -> int:
        return self.m**self.dim

    @property
    def publish_probability(self) -> float:
        return math.exp(-2.0 * self.r_hat)

    def cell_index(self, us) -> np.ndarray:
        us = np.asarray(us, dtype=float).reshape(-1, self.dim)
        idx = np.searchsorted(self.edges[1:-1], us, side="right")
        return np.ravel_multi_index(tuple(idx.T), (self.m,) * self.dim)

    def g_hat(self, us) -> np.ndarray:
        return self.log_values[self.cell_index(us)]

    def log_density(self, us) -> np.ndarray:
        """log of the normalised proposal exp(g_hat) / integral."""
        return self.g_hat(us) - self.log_total_mass


def _axis_layout(m: int, mode: str):
    if mode == "center":
        edges = np.linspace(0.0, 1.0, m + 1)
        points = 0.5 * (edges[:-1] + edges[1:])
    elif mode == "endpoint":
        if m < 2:
            raise DomainError("endpoint grids need m >= 2")
        points = np.linspace(0.0, 1.0, m)
        edges = np.concatenate([[0.0], 0.5 * (points[:-1] + points[1:]), [1.0]])
    else:
        raise DomainError(f"unknown grid mode {mode!r}")
    return points, edges


def build_grid(target: LogHolderTarget, m: int, mode: str = "center", max_evals: int = DEFAULT_MAX_EVALS,
               validate: bool = True, n_probe: int = 10_000, seed: int = 0) -> GridApproximation:
    """Evaluate g on an m^d grid and build the sampling table.

    With ``validate`` the sandwich |g - g_hat| <= r_hat is checked at
    ``n_probe`` uniform points; a violation means the declared (H, s) is wrong.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    d = target.dim
    if m**d > max_evals:
        raise BudgetError(f"{m}^{d} grid evaluations exceed the budget of {max_evals}")
    points, edges = _axis_layout(m, mode)
    radius = float(np.max(np.maximum(points - edges[:-1], edges[1:] - points)))
    r_hat = target.unit_H * radius**target.holder_s
    mesh = np.stack(np.meshgrid(*([points] * d), indexing="ij"), axis=-1).reshape(-1, d)
    log_values = target.unit_log_density(mesh)
    if not np.all(np.isfinite(log_values)):
        raise DomainError("log-density must be finite on the box")
    log_width = np.log(np.diff(edges))
    log_vol = sum(np.meshgrid(*([log_width] * d), indexing="ij")).reshape(-1)
    log_mass = log_values + log_vol
    top = log_mass.max()
    w = np.exp(log_mass - top)
    cumulative = np.cumsum(w)
    total = cumulative[-1]
    cumulative /= total
    grid = GridApproximation(m, d, mode, points, edges, log_values, r_hat, cumulative, float(top + math.log(total)))
    if validate:
        us = np.random.default_rng(seed).random((n_probe, d))
        gap = np.abs(target.unit_log_density(us) - grid.g_hat(us))
        if np.any(gap > r_hat + _SLACK * max(1.0, r_hat)):
            i = int(np.argmax(gap))
            raise InvalidEnvelopeError(f"|g - g_hat| = {gap[i]:.6g} exceeds r_hat = {r_hat:.6g}")
    return grid


def sample_from_grid(grid: GridApproximation, rng: RngStream, size=None):
    """Draw from exp(g_hat) normalised on [0, 1]^d: pick a cell, then a uniform point in it."""
    n = 1 if size is None else size
    v = rng.uniform(n)
    flat = np.minimum(np.searchsorted(grid.cumulative, v, side="right"), grid.n_cells - 1)
    idx = np.stack(np.unravel_index(flat, (grid.m,) * grid.dim), axis=-1)
    left = grid.edges[idx]
    width = grid.edges[idx + 1] - left
    out = left + width * rng.uniform((n, grid.dim))
    return out[0] if size is None else out


@dataclass
class RefinementSchedule:
    """Grid resolution as a function of the iteration count only.

    m starts at ``initial_m`` and doubles every ``doubling_interval``
    iterations (never, if None) while m^d stays within ``max_evals``.
    """

    initial_m: int = 4
    doubling_interval: Optional[int] = 64
    max_evals: int = DEFAULT_MAX_EVALS

    @classmethod
    def from_config(cls, cfg: dict) -> "RefinementSchedule":
        return cls(
            initial_m=int(cfg.get("initial_m", 4)),
            doubling_interval=cfg.get("doubling_interval", 64),
            max_evals=int(cfg.get("max_evals", DEFAULT_MAX_EVALS)),
        )

    @classmethod
    def constant(cls, m: int, max_evals: int = DEFAULT_MAX_EVALS) -> "RefinementSchedule":
        return cls(initial_m=m, doubling_interval=None, max_evals=max_evals)

    def __call__(self, iteration: int, H: float, s: float, dim: int) -> int:
        m = self.initial_m
        if self.doubling_interval:
            m = self.initial_m * 2 ** min(iteration // self.doubling_interval, 62)
        cap = max(1, int(math.floor(self.max_evals ** (1.0 / dim) + 1e-9)))
        while cap**dim > self.max_evals:
            cap -= 1
        return max(1, min(m, cap))


@dataclass
class LevelRecord:
    m: int
    r_hat: float
    start_iteration: int
    iterations: int = 0
    publishes: int = 0

    @property
    def publish_probability(self) -> float:
        return math.exp(-2.0 * self.r_hat)


@dataclass
class AdaptiveRun:
    samples: np.ndarray
    runtimes: np.ndarray
    levels: list = field(default_factory=list)
    total_iterations: int = 0
    n_evaluations: int = 0


class _GuardedTarget:
    """Makes the target's log-density raise while a schedule is being consulted."""

    def __init__(self, target: LogHolderTarget):
        self.target = target
        self.active = False
        self._raw = target.log_density

    def __enter__(self):
        raw = self._raw

        def guarded(x):
            if self.active:
                raise ScheduleContractError("refinement schedule evaluated the target")
            return raw(x)

        self.target.log_density = guarded
        return self

    def __exit__(self, *exc):
        self.target.log_density = self._raw
        return False


def relative_runtime_ratio(r_hat: float) -> float:
    """(1 - exp(-2 r)) / (1 - exp(-r)): rejection-rate ratio of private vs plain samplers."""
    if not r_hat > 0:
        raise DomainError("r_hat must be positive")
    return math.expm1(-2.0 * r_hat) / math.expm1(-r_hat)


def adaptive_sample(target: LogHolderTarget, n_samples: int, rng: RngStream,
                    schedule: Optional[Callable] = None, grid_mode: str = "center",
                    max_iter: Optional[int] = None, lookahead: int = 256,
                    validate_levels: bool = True) -> AdaptiveRun:
    """Draw ``n_samples`` i.i.d. points from exp(g) on the target's box.

    ``schedule(iteration, H, s, dim) -> m`` picks the grid resolution; it must
    not depend on target values and raises :class:`ScheduleContractError` if it
    evaluates the target.  Proposals and uniforms are drawn in batches between
    grid changes.  ``max_iter`` stops early (returning fewer samples), which is
    handy for measuring publish frequencies at a fixed level.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    schedule = RefinementSchedule() if schedule is None else schedule
    H, s, d = target.unit_H, target.holder_s, target.dim
    guard = _GuardedTarget(target)

    def plan(start: int, count: int) -> list:
        guard.active = True
        try:
            return [int(schedule(start + j, H, s, d)) for j in range(count)]
        finally:
            guard.active = False

    samples, runtimes, levels = [], [], []
    grid = None
    any_accepted = False
    x_s = None
    it = 0
    since_publish = 0
    n_evals = 0
    with guard:
        while len(samples) < n_samples and (max_iter is None or it < max_iter):
            ms = plan(it, lookahead)
            m = ms[0]
            batch = next((j for j, mj in enumerate(ms) if mj != m), lookahead)
            if max_iter is not None:
                batch = min(batch, max_iter - it)
            if grid is None or grid.m != m:
                grid = build_grid(target, m, mode=grid_mode, max_evals=max(getattr(schedule, "max_evals", 0), m**d),
                                  validate=validate_levels, seed=len(levels))
                n_evals += grid.n_cells
                levels.append(LevelRecord(m, grid.r_hat, it))
            level = levels[-1]
            us = sample_from_grid(grid, rng, batch)
            log_y = np.log(rng.uniform_open(batch))
            g = target.unit_log_density(us)
            n_evals += batch
            diff = g - grid.g_hat(us)
            if np.any(np.abs(diff) > grid.r_hat + _SLACK * max(1.0, grid.r_hat)):
                raise InvalidEnvelopeError("target left the Hoelder sandwich; (H, s) is wrong")
            accept = log_y <= diff - grid.r_hat
            publish = log_y <= -2.0 * grid.r_hat
            for j in range(batch):
                it += 1
                since_publish += 1
                level.iterations += 1
                if accept[j] and not any_accepted:
                    x_s = us[j]
                    any_accepted = True
                if publish[j]:
                    if not any_accepted:
                        raise InvariantViolation("publish fired before any target acceptance")
                    samples.append(target.to_box(x_s))
                    runtimes.append(since_publish)
                    level.publishes += 1
                    since_publish = 0
                    any_accepted = False
                    if len(samples) == n_samples:
                        break
    out = np.array(samples).reshape(-1, d)
    return AdaptiveRun(out, np.array(runtimes, dtype=np.int64), levels, it, n_evals)

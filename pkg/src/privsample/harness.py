"""Statistical certification and timing-attack simulation.

The ``certify_*`` functions turn samples into :class:`TestReport` records.
:func:`attack_tradeoff` plays the adversary who only sees runtimes.  The
``check_*`` functions at the bottom bundle the package's exit criteria; both
the ``verify`` CLI command and the acceptance tests run them.

Every statistical check uses significance 1e-3 and there are fewer than ten
of them, so a correct implementation fails the suite with probability below
1% (Bonferroni) for a random seed, and never for the pinned default seeds.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from . import accounting as acc
from .adaptive import LogHolderTarget, RefinementSchedule, adaptive_sample
from .distributions import GeometricLaw, RngStream, UniformBox, geometric_pmf
from .exceptions import InsufficientDataError
from .mechanisms import ERMSpec, StronglyConcaveTarget, build_erm_target, gaussian_envelope
from .samplers import (
    Envelope,
    UnnormalizedTarget,
    additive_wait_pmf,
    additive_wait_reject,
    squeeze_reject,
    truncated_iterations,
    truncated_reject,
)

__all__ = [
    "TestReport",
    "AttackResult",
    "certify_runtime_law",
    "certify_independence",
    "ks_against_cdf",
    "attack_tradeoff",
    "runtime_log_ratio_profile",
    "eps_delta_table",
    "tradeoff_comparison_rows",
    "write_csv",
    "run_replicates",
    "PUBLISHED_EPS",
    "CRITERIA",
    "run_suite",
]

SIGNIFICANCE = 1e-3
MIN_RUNTIMES = 1000

# published epsilon(delta) values, rows R = 2 and R = 1.1
PUBLISHED_EPS = {
    2.0: {1e-1: 0.916, 1e-2: 3.22, 1e-3: 5.52, 1e-4: 7.82, 1e-5: 10.13, 1e-6: 12.43},
    1.1: {1e-1: 0.0, 1e-2: 0.125, 1e-3: 0.356, 1e-4: 0.59, 1e-5: 0.82, 1e-6: 1.05},
}


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    test: str
    statistic: float
    threshold: float
    passed: bool
    pvalue: Optional[float] = None
    n: Optional[int] = None
    seed: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "pass": bool(self.passed),
            "n": self.n,
            "seed": self.seed,
            "threshold": self.threshold,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=float)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        pv = "" if self.pvalue is None else f" p={self.pvalue:.3g}"
        return f"[{status}] {self.test}: statistic={self.statistic:.6g} threshold={self.threshold:.6g}{pv}"


# ---------------------------------------------------------------------------
# goodness of fit
# ---------------------------------------------------------------------------


def _merge_small(observed, expected, min_expected=5.0):
    """Merge adjacent bins from the right until every expected count reaches ``min_expected``."""
    obs, exp_ = list(observed), list(expected)
    i = len(exp_) - 1
    while i > 0:
        if exp_[i] < min_expected:
            exp_[i - 1] += exp_.pop(i)
            obs[i - 1] += obs.pop(i)
        i -= 1
    if len(exp_) > 1 and exp_[0] < min_expected:
        exp_[1] += exp_.pop(0)
        obs[1] += obs.pop(0)
    return np.array(obs, dtype=float), np.array(exp_, dtype=float)


def certify_runtime_law(runtimes, p: float, significance: float = SIGNIFICANCE, ddof: int = 0,
                        seed: Optional[int] = None) -> TestReport:
    """Chi-square fit of integer runtimes to Geom(p).

    Bins are {1}, ..., {K-1} and a tail {>= K}, with K the 99.9% quantile of
    Geom(p); sparse trailing bins are merged.  ``ddof=1`` when p was
    estimated from the same data.
    """
    t = np.asarray(runtimes, dtype=np.int64)
    n = t.size
    if n < MIN_RUNTIMES:
        raise InsufficientDataError(f"need at least {MIN_RUNTIMES} runtimes, got {n}")
    law = GeometricLaw(p)
    K = law.quantile(0.999)
    ks = np.arange(1, K)
    probs = np.append(geometric_pmf(law, ks) if K > 1 else np.array([]), float(law.survival(K - 1)))
    counts = np.append(np.bincount(np.minimum(t, K), minlength=K + 1)[1:K], np.sum(t >= K))
    obs, expct = _merge_small(counts, n * probs)
    if obs.size < 2 + ddof:
        passed = bool(np.all(t == 1)) if p == 1.0 else True
        return TestReport("runtime_law", 0.0, significance, passed, 1.0, n, seed, {"p": p, "bins": int(obs.size)})
    stat, pval = stats.chisquare(obs, expct, ddof=ddof)
    return TestReport("runtime_law", float(stat), significance, bool(pval > significance), float(pval), n, seed,
                      {"p": p, "bins": int(obs.size)})


def certify_independence(runtimes_a, runtimes_b, significance: float = SIGNIFICANCE,
                         seed: Optional[int] = None) -> TestReport:
    """Two-sample chi-square on the pooled runtime histogram.

    Values above the pooled 99.9% quantile share a tail bucket; sparse bins
    are merged.  Passes iff the p-value exceeds ``significance``.
    """
    a = np.asarray(runtimes_a, dtype=np.int64)
    b = np.asarray(runtimes_b, dtype=np.int64)
    if a.size < MIN_RUNTIMES or b.size < MIN_RUNTIMES:
        raise InsufficientDataError(f"need at least {MIN_RUNTIMES} runtimes per sample")
    pooled = np.concatenate([a, b])
    lo = int(pooled.min())
    cap = max(int(np.quantile(pooled, 0.999)), lo)
    ca = np.bincount(np.minimum(a, cap) - lo, minlength=cap - lo + 1).astype(float)
    cb = np.bincount(np.minimum(b, cap) - lo, minlength=cap - lo + 1).astype(float)
    # merge columns until each expected cell count is >= 5
    cols_a, cols_b = [], []
    acc_a = acc_b = 0.0
    frac_a = a.size / pooled.size
    for x, y in zip(ca[::-1], cb[::-1]):
        acc_a += x
        acc_b += y
        if min(frac_a, 1 - frac_a) * (acc_a + acc_b) >= 5:
            cols_a.append(acc_a)
            cols_b.append(acc_b)
            acc_a = acc_b = 0.0
    if acc_a + acc_b > 0:
        if cols_a:
            cols_a[-1] += acc_a
            cols_b[-1] += acc_b
        else:
            cols_a.append(acc_a)
            cols_b.append(acc_b)
    meta = {"bins": len(cols_a), "mean_a": float(a.mean()), "mean_b": float(b.mean())}
    if len(cols_a) < 2:
        return TestReport("independence", 0.0, significance, True, 1.0, int(pooled.size), seed, meta)
    stat, pval, _, _ = stats.chi2_contingency(np.array([cols_a, cols_b]), correction=False)
    return TestReport("independence", float(stat), significance, bool(pval > significance), float(pval),
                      int(pooled.size), seed, meta)


def ks_against_cdf(samples, cdf: Callable) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _tv_to_pmf(runtimes, pmf_values) -> float:
    """Total variation restricted to {1..K}: 0.5 * sum |empirical - pmf|."""
    t = np.asarray(runtimes, dtype=np.int64)
    K = len(pmf_values)
    emp = np.bincount(t[t <= K], minlength=K + 1)[1:] / t.size
    return 0.5 * float(np.sum(np.abs(emp - pmf_values)))


# ---------------------------------------------------------------------------
# attacks on the runtime channel
# ---------------------------------------------------------------------------


def runtime_log_ratio_profile(p: float, q: float, kmax: int = 1000):
    """Exact log P(Geom(p) = k) - log P(Geom(q) = k) for k = 1..kmax.

    Returns ``(ks, log_ratios, slope, sup_abs)``; the ratio is linear in k
    with slope log((1-p)/(1-q)), so it is unbounded whenever p != q.
    """
    ks = np.arange(1, kmax + 1)
    lr = (math.log(p) + (ks - 1) * math.log1p(-p)) - (math.log(q) + (ks - 1) * math.log1p(-q))
    slope = (lr[-1] - lr[0]) / (kmax - 1) if kmax > 1 else 0.0
    return ks, lr, float(slope), float(np.max(np.abs(lr)))


@dataclass
class AttackResult:
    exact: acc.TradeoffCurve
    empirical: acc.TradeoffCurve
    R: float
    f_R_grid: np.ndarray
    min_slack_vs_f_R: float
    max_gap_vs_f_R: float
    sup_gap_empirical: float
    log_ratio_ks: np.ndarray
    log_ratio_exact: np.ndarray
    log_ratio_empirical: np.ndarray

    def curve_rows(self):
        rows = [(a, b, "exact") for a, b in zip(self.exact.alpha, self.exact.beta)]
        rows += [(a, b, "empirical") for a, b in zip(self.empirical.alpha, self.empirical.beta)]
        rows += [(a, acc.f_R(self.R, a), "f_R") for a in self.f_R_grid]
        return rows


def _empirical_tradeoff(a, b, reject_long: bool) -> acc.TradeoffCurve:
    """Plug-in errors of the threshold tests on observed runtimes."""
    a = np.sort(np.asarray(a))
    b = np.sort(np.asarray(b))
    ts = np.arange(1, max(a.max(), b.max()) + 2)
    if reject_long:
        # reject H0 when T >= t
        alpha = 1.0 - np.searchsorted(a, ts, side="left") / a.size
        beta = np.searchsorted(b, ts, side="left") / b.size
    else:
        # reject H0 when T <= t - 1
        alpha = np.searchsorted(a, ts - 1, side="right") / a.size
        beta = 1.0 - np.searchsorted(b, ts - 1, side="right") / b.size
        alpha, beta = alpha[::-1], beta[::-1]
    keep = np.concatenate([[True], np.diff(alpha) < 0])
    alpha, beta = alpha[keep], beta[keep]
    if alpha[0] < 1.0:
        alpha, beta = np.concatenate([[1.0], alpha]), np.concatenate([[0.0], beta])
    if alpha[-1] > 0.0:
        alpha, beta = np.concatenate([alpha, [0.0]]), np.concatenate([beta, [1.0]])
    return acc.TradeoffCurve(alpha, beta, validate=False)


def attack_tradeoff(runtimes_a, runtimes_b, p_a: float, q_b: float, kmax: int = 200) -> AttackResult:
    """Likelihood-ratio attack distinguishing Geom(p_a) runtimes from Geom(q_b) runtimes.

    Produces the exact Neyman-Pearson tradeoff, the empirical tradeoff of the
    same threshold tests on the observed runtimes, and f_R with
    R = log(1-p)/log(1-q) (oriented >= 1) for comparison.
    """
    exact = acc.exact_geometric_tradeoff(p_a, q_b)
    R = 1.0 if p_a == q_b else acc.runtime_R(p_a, q_b)
    empirical = _empirical_tradeoff(runtimes_a, runtimes_b, reject_long=p_a >= q_b)
    fine = np.linspace(0.0, 1.0, 2001)
    grid = np.unique(np.concatenate([exact.alpha, empirical.alpha, fine]))
    slack = exact(grid) - acc.f_R(R, grid)
    sup_gap = float(np.max(np.abs(empirical(grid) - exact(grid))))
    ks, lr, _, _ = runtime_log_ratio_profile(p_a, q_b, kmax)
    ca = np.bincount(np.asarray(runtimes_a), minlength=kmax + 1)[1 : kmax + 1] / len(runtimes_a)
    cb = np.bincount(np.asarray(runtimes_b), minlength=kmax + 1)[1 : kmax + 1] / len(runtimes_b)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr_emp = np.where((ca > 0) & (cb > 0), np.log(ca / cb), np.nan)
    return AttackResult(exact, empirical, R, fine, float(slack.min()), float(slack.max()), sup_gap, ks, lr, lr_emp)


# ---------------------------------------------------------------------------
# reproduction data
# ---------------------------------------------------------------------------


def eps_delta_table():
    """eps(delta) for R in {2, 1.1} and delta in {1e-1, ..., 1e-6}."""
    rows = []
    for R in (2.0, 1.1):
        for k in range(1, 7):
            delta = 10.0**-k
            rows.append({"R": R, "delta": delta, "eps": acc.eps_of_delta(R, delta)})
    return rows


def tradeoff_comparison_rows(R: float = 2.0, qs=(0.1, 0.6), n_grid: int = 1001):
    """Curve rows (q, alpha, beta, source) for T(Geom(p), Geom(q)), its inverse, and f_R."""
    rows = []
    grid = np.linspace(0.0, 1.0, n_grid)
    for q in qs:
        p = -math.expm1(R * math.log1p(-q))
        fwd = acc.exact_geometric_tradeoff(p, q)
        bwd = acc.exact_geometric_tradeoff(q, p)
        rows += [(q, a, b, "exact") for a, b in zip(fwd.alpha, fwd.beta)]
        rows += [(q, a, b, "exact_inverse") for a, b in zip(bwd.alpha, bwd.beta)]
        rows += [(q, a, acc.f_R(R, a), "f_R") for a in grid]
    return rows


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, rows) -> None:
    """Comma-separated, header row, LF endings, floats at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def run_replicates(fn: Callable, n: int, seed: int, n_streams: int = 8, workers: int = 1) -> list:
    """Call ``fn(rng)`` n times spread over ``n_streams`` independent streams.

    Stream j handles runs j, j + n_streams, ... in order; results come back in
    run order whatever ``workers`` is, so output is reproducible.
    """
    n_streams = max(1, min(n_streams, n))

    def chunk(j):
        rng = RngStream(seed, j)
        return [fn(rng) for _ in range(j, n, n_streams)]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(chunk, range(n_streams)))
    else:
        parts = [chunk(j) for j in range(n_streams)]
    out = [None] * n
    for j, part in enumerate(parts):
        out[j::n_streams] = part
    return out


# ---------------------------------------------------------------------------
# built-in demo targets
# ---------------------------------------------------------------------------


def gaussian_demo_target() -> StronglyConcaveTarget:
    """g(x) = -x^2 in d = 1 declared with alpha = 1, L = 4 (true curvature 2)."""
    return StronglyConcaveTarget(
        log_density=lambda x: -float(x[0] * x[0]),
        dim=1,
        alpha=1.0,
        L_smooth=4.0,
        x_star=[0.0],
        log_normalizer=0.5 * math.log(math.pi),
    )


def example_lipschitz_target(shift: float = 0.5, phase: float = 0.0) -> LogHolderTarget:
    """g(x) = -3|x - shift| + sin(20 x + phase)/5 on [0, 1]: 7-Lipschitz."""
    return LogHolderTarget(
        log_density=lambda x: -3.0 * np.abs(x[:, 0] - shift) + 0.2 * np.sin(20.0 * x[:, 0] + phase),
        dim=1,
        holder_H=7.0,
        holder_s=1.0,
        vectorized=True,
    )


RIDGE_RECORDS = [[1.0, 0.8], [0.5, -0.2], [-0.7, -0.9], [0.9, 1.1], [0.2, 0.1]]


def ridge_demo_spec(records=None) -> ERMSpec:
    return ERMSpec(RIDGE_RECORDS if records is None else records, alpha_reg=1.0, L_loss=1.0,
                   delta_sens=1.0, eps=1.0, dim=1)


def _ks_threshold(n: int) -> float:
    return 0.01 * math.sqrt(max(1.0, 1e5 / n))


# ---------------------------------------------------------------------------
# exit criteria
# ---------------------------------------------------------------------------


def _timed(limit):
    def wrap(fn):
        def run(seed=7, scale=1.0):
            start = time.perf_counter()
            reports = fn(seed, scale)
            elapsed = time.perf_counter() - start
            # the limits are stated for scale 1
            within = elapsed < limit or scale < 1.0
            reports.append(TestReport(f"{fn.__name__}.runtime", elapsed, limit, within, seed=seed))
            return reports

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


@_timed(1.0)
def check_eps_delta_table(seed, scale):
    """eps(delta) matches the published table within 0.005."""
    out = []
    for row in eps_delta_table():
        want = PUBLISHED_EPS[row["R"]][row["delta"]]
        err = abs(row["eps"] - want)
        out.append(TestReport(f"eps_delta_table[R={row['R']},delta={row['delta']:g}]", err, 0.005, err <= 0.005,
                              metadata={"eps": row["eps"], "published": want}))
    return out


def _f_R_branches(R, a):
    a1, a2 = acc.f_R_breakpoints(R)
    return 1.0 - a ** (1.0 / R), -a + a1 + a2, (1.0 - a) ** R


@_timed(5.0)
def check_f_R_properties(seed, scale):
    """Continuity, convexity, monotonicity, self-inverse, supporting lines."""
    out = []
    grid = np.linspace(0.0, 1.0, 1001)
    for R in (1.01, 1.1, 2.0, 5.0, 20.0):
        a1, a2 = acc.f_R_breakpoints(R)
        low1, mid1, _ = _f_R_branches(R, a1)
        _, mid2, high2 = _f_R_branches(R, a2)
        cont = max(abs(low1 - mid1), abs(mid2 - high2))
        out.append(TestReport(f"f_R[R={R}].continuity", cont, 1e-12, cont <= 1e-12))
        f = acc.f_R(R, grid)
        d1 = np.diff(f)
        d2 = np.diff(f, 2)
        shape_err = max(float(d1.max()), float(-d2.min()), 0.0)
        out.append(TestReport(f"f_R[R={R}].convex_nonincreasing", shape_err, 1e-12, shape_err <= 1e-12))
        inv = float(np.max(np.abs(acc.f_R(R, f) - grid)))
        out.append(TestReport(f"f_R[R={R}].self_inverse", inv, 1e-9, inv <= 1e-9))
        worst = -math.inf
        for k in range(1, 7):
            delta = 10.0**-k
            eps = acc.eps_of_delta(R, delta)
            line = 1.0 - delta - math.exp(eps) * grid
            worst = max(worst, float(np.max(line - f)))
        out.append(TestReport(f"f_R[R={R}].supporting_lines", worst, 1e-9, worst <= 1e-9))
    # tangent-line conversion round trip at eps = 1, delta = 0.127
    ed = acc.EpsDelta(1.0, 0.127)
    curve = acc.TradeoffCurve.from_function(lambda a: acc.f_eps_delta(ed, a), np.linspace(0, 1, 10001))
    got = acc.curve_to_eps_delta(curve, 1.0).delta
    out.append(TestReport("f_eps_delta.round_trip", abs(got - 0.127), 1e-9, abs(got - 0.127) <= 1e-9))
    return out


@_timed(1.0)
def check_tradeoff_vs_f_R(seed, scale):
    """Exact geometric tradeoffs dominate f_2; the bound is tighter at q = 0.1."""
    out = []
    gaps = {}
    fine = np.linspace(0.0, 1.0, 10001)
    for q in (0.1, 0.6):
        p = -math.expm1(2.0 * math.log1p(-q))
        for name, curve in (("fwd", acc.exact_geometric_tradeoff(p, q)), ("inv", acc.exact_geometric_tradeoff(q, p))):
            grid = np.unique(np.concatenate([curve.alpha, fine]))
            slack = curve(grid) - acc.f_R(2.0, grid)
            out.append(TestReport(f"tradeoff_vs_f_R[q={q},{name}].dominates_f_R", float(slack.min()), -1e-12,
                                  bool(slack.min() >= -1e-12)))
            gaps[(q, name)] = float(slack.max())
    out.append(TestReport("tradeoff_vs_f_R.gap_smaller_at_q0.1", gaps[(0.1, "fwd")], gaps[(0.6, "fwd")],
                          gaps[(0.1, "fwd")] < gaps[(0.6, "fwd")],
                          metadata={"gap_q0.1": gaps[(0.1, "fwd")], "gap_q0.6": gaps[(0.6, "fwd")]}))
    return out


def _triangle_target():
    """Normalised density 2x on [0, 1]; with a uniform proposal, c_D = 2."""
    target = UnnormalizedTarget(
        log_density=lambda x: math.log(2.0 * x[0]) if x[0] > 0 else -math.inf,
        dim=1,
        support=UniformBox([0.0], [1.0]),
        log_normalizer=0.0,
    )
    return target, Envelope(UniformBox([0.0], [1.0]), math.log(2.0))


@_timed(10.0)
def check_memoryless(seed, scale):
    """Additive geometric wait turns Geom(0.5) into exactly Geom(0.2)."""
    out = []
    k = np.arange(1, 101)
    err = float(np.max(np.abs(additive_wait_pmf(0.5, 0.2, 100) - geometric_pmf(GeometricLaw(0.2), k))))
    out.append(TestReport("memoryless.pmf_identity", err, 1e-12, err <= 1e-12))
    target, env = _triangle_target()
    n = int(1e5 * scale)
    rng = RngStream(seed, 4)
    runtimes = np.array([additive_wait_reject(target, env, 5.0, rng).runtime for _ in range(n)])
    tv = _tv_to_pmf(runtimes, geometric_pmf(GeometricLaw(0.2), np.arange(1, 61)))
    thr = _ks_threshold(n)
    out.append(TestReport("memoryless.empirical_tv", tv, thr, tv < thr, n=n, seed=seed))
    return out


@_timed(60.0)
def check_squeeze(seed, scale):
    """Squeeze sampler on the Gaussian demo: exact output, Geom(0.5) runtime, data-free runtime."""
    out = []
    n = int(1e5 * scale)
    target = gaussian_demo_target()
    env = gaussian_envelope(target)
    rng = RngStream(seed, 5)
    traces = [squeeze_reject(target, env, rng) for _ in range(n)]
    xs = np.array([t.value[0] for t in traces])
    runtimes = np.array([t.runtime for t in traces])
    ks = float(stats.kstest(xs, "norm", args=(0.0, math.sqrt(0.5))).statistic)
    out.append(TestReport("squeeze.ks_vs_N(0,1/2)", ks, _ks_threshold(n), ks < _ks_threshold(n), n=n, seed=seed))
    law = certify_runtime_law(runtimes, 0.5, seed=seed)
    law.test = "squeeze.runtime_geom(0.5)"
    out.append(law)
    spec_a = ridge_demo_spec()
    spec_b = ridge_demo_spec(RIDGE_RECORDS[:-1] + [[-0.6, 0.9]])
    runs = []
    for j, spec in enumerate((spec_a, spec_b)):
        t = build_erm_target(spec)
        e = gaussian_envelope(t)
        r = RngStream(seed, 50 + j)
        runs.append(np.array([squeeze_reject(t, e, r).runtime for _ in range(n)]))
    ind = certify_independence(runs[0], runs[1], seed=seed)
    ind.test = "squeeze.adjacent_erm_independence"
    out.append(ind)
    return out


@_timed(60.0)
def check_truncated(seed, scale):
    """Truncated sampler: N = 66, constant runtime, none-accepted rate <= delta + 3 sigma."""
    out = []
    alpha0, delta = 0.1, 1e-3
    n_iter = truncated_iterations(alpha0, delta)
    out.append(TestReport("truncated.N", n_iter, 66, n_iter == 66))
    target = UnnormalizedTarget(log_density=lambda x: np.full(len(x), math.log(alpha0)), dim=1,
                                support=UniformBox([0.0], [1.0]), vectorized=True)
    env = Envelope(UniformBox([0.0], [1.0]), 0.0)
    n = int(1e5 * scale)
    rng = RngStream(seed, 6)
    traces = [truncated_reject(target, env, alpha0, delta, rng) for _ in range(n)]
    rt = np.array([t.runtime for t in traces])
    out.append(TestReport("truncated.constant_runtime", int(np.sum(rt != 66)), 0, bool(np.all(rt == 66)), n=n))
    none = float(np.mean([not t.accepted for t in traces]))
    bound = delta + 3.0 * math.sqrt(delta * (1 - delta) / n)
    out.append(TestReport("truncated.none_accepted_rate", none, bound, none <= bound, n=n, seed=seed))
    return out


def _normalized_cdf(g, n_grid=100_001):
    """Trapezoid-rule CDF of exp(g) on [0, 1]."""
    xs = np.linspace(0.0, 1.0, n_grid)
    dens = np.exp(g(xs[:, None]))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))])
    cum /= cum[-1]
    return lambda x: np.interp(x, xs, cum)


@_timed(300.0)
def check_adaptive(seed, scale):
    """Adaptive sampler: publish rate exp(-2 r_hat), exact output, data-free runtimes."""
    out = []
    target = example_lipschitz_target()
    n_iter = int(1e5 * scale)
    for j, (m, mode) in enumerate(((5, "center"), (15, "center"), (5, "endpoint"), (15, "endpoint"), (60, "center"))):
        run = adaptive_sample(target, 10**9, RngStream(seed, 70 + j), schedule=RefinementSchedule.constant(m),
                              grid_mode=mode, max_iter=n_iter)
        lvl = run.levels[0]
        freq = lvl.publishes / lvl.iterations
        err = abs(freq - lvl.publish_probability)
        thr = 0.01 * math.sqrt(max(1.0, 1e5 / n_iter))
        out.append(TestReport(f"adaptive.publish_rate[m={m},{mode}]", err, thr, err <= thr, n=lvl.iterations,
                              seed=seed, metadata={"freq": freq, "expected": lvl.publish_probability,
                                                   "r_hat": lvl.r_hat}))
    n = int(1e5 * scale)
    run = adaptive_sample(target, n, RngStream(seed, 80))
    ks = ks_against_cdf(run.samples[:, 0], _normalized_cdf(target.log_density))
    out.append(TestReport("adaptive.ks_vs_trapezoid", ks, _ks_threshold(n), ks < _ks_threshold(n), n=n, seed=seed))
    other = example_lipschitz_target(shift=0.3, phase=1.0)
    n_pub = max(MIN_RUNTIMES, int(2e4 * scale))
    sched = RefinementSchedule(initial_m=2, doubling_interval=2000)
    ra = adaptive_sample(target, n_pub, RngStream(seed, 81), schedule=sched).runtimes
    rb = adaptive_sample(other, n_pub, RngStream(seed, 82), schedule=sched).runtimes
    ind = certify_independence(ra, rb, seed=seed)
    ind.test = "adaptive.runtime_independence"
    out.append(ind)
    return out


@_timed(1.0)
def check_rs_no_dp(seed, scale):
    """Geom(0.19) vs Geom(0.1): log pmf ratio grows linearly, one-sided divergence infinite."""
    out = []
    ks, lr, slope, sup_abs = runtime_log_ratio_profile(0.19, 0.1, 1000)
    want = math.log(0.81 / 0.9)
    out.append(TestReport("rs_no_dp.slope", abs(slope - want), 1e-12, abs(slope - want) <= 1e-12,
                          metadata={"slope": slope, "sup_abs_log_ratio": sup_abs}))
    grows = bool(np.all(np.diff(np.abs(lr[10:])) > 0)) and sup_abs > 100
    out.append(TestReport("rs_no_dp.unbounded_growth", sup_abs, 100.0, grows))
    inf_dir = acc.geom_max_divergence(0.1, 0.19)
    out.append(TestReport("rs_no_dp.max_divergence_infinite", inf_dir, math.inf, math.isinf(inf_dir)))
    fin = acc.geom_max_divergence(0.19, 0.1)
    brute = float(np.max(lr))
    out.append(TestReport("rs_no_dp.max_divergence_brute_force", abs(fin - brute), 1e-12, abs(fin - brute) <= 1e-12))
    return out


@_timed(1.0)
def check_exp_mech(seed, scale):
    """R >= e^eps over the grid, increasing in p*, limit e^eps as p* -> 0."""
    out = []
    for eps in (0.1, 0.5, 1.0, 2.0):
        Rs = [acc.exp_mech_R(eps, p).R for p in (1e-6, 0.1, 0.5, 0.9)]
        ok = all(R >= math.exp(eps) for R in Rs) and all(np.diff(Rs) > 0)
        out.append(TestReport(f"exp_mech[eps={eps}].lower_bound_monotone", min(Rs) - math.exp(eps), 0.0, ok,
                              metadata={"R": Rs}))
        lim = abs(acc.exp_mech_R(eps, 1e-8).R - math.exp(eps))
        out.append(TestReport(f"exp_mech[eps={eps}].limit", lim, 1e-4, lim <= 1e-4))
    return out


@_timed(1.0)
def check_batching(seed, scale):
    """batched_R does not depend on the batch size."""
    out = []
    for p, q in ((0.3, 0.1), (0.19, 0.1), (0.5, 0.2), (0.05, 0.01), (0.9, 0.6)):
        base = acc.batched_R(p, q, 1)
        dev = max(abs(acc.batched_R(p, q, k) - base) for k in range(1, 65))
        out.append(TestReport(f"batching[p={p},q={q}]", dev, 1e-12, dev <= 1e-12))
    return out


CRITERIA = {
    1: check_eps_delta_table,
    2: check_f_R_properties,
    3: check_tradeoff_vs_f_R,
    4: check_memoryless,
    5: check_squeeze,
    6: check_truncated,
    7: check_adaptive,
    8: check_rs_no_dp,
    9: check_exp_mech,
    10: check_batching,
}


def run_suite(seed: int = 7, scale: float = 1.0, criteria=None) -> list:
    """Run the exit criteria; returns a flat list of reports."""
    reports = []
    for cid in criteria or sorted(CRITERIA):
        for r in CRITERIA[cid](seed, scale):
            r.metadata.setdefault("criterion", cid)
            reports.append(r)
    return reports

import json
import math

import numpy as np
import pytest
from scipy import stats

from privsample.distributions import RngStream
from privsample.exceptions import DomainError, InvalidEnvelopeError, NoModeError
from privsample.harness import certify_runtime_law
from privsample.mechanisms import (
    ERMSpec,
    KNGTarget,
    StronglyConcaveTarget,
    build_erm_target,
    gaussian_envelope,
    knorm_envelope,
    load_erm_spec,
    ridge_solution,
)
from privsample.samplers import squeeze_reject

RECORDS = [[1.0, 2.0], [0.5, -1.0], [-0.3, 0.4]]


def quad_target(curv, alpha, L, center=(0.0,)):
    c = np.asarray(center, dtype=float)
    curv = np.asarray(curv, dtype=float)
    return StronglyConcaveTarget(log_density=lambda x: -0.5 * float(np.sum(curv * (x - c) ** 2)), dim=len(c),
                                 alpha=alpha, L_smooth=L, x_star=c)


def test_ratio_one_is_exact_gaussian(rng):
    t = quad_target([2.0], 2.0, 2.0, center=[1.5])
    env = gaussian_envelope(t)
    assert env.log_ratio == pytest.approx(0.0, abs=1e-12)
    assert all(squeeze_reject(t, env, rng).runtime == 1 for _ in range(50))


def test_ratio_2d():
    t = quad_target([1.0, 4.0], 1.0, 4.0, center=[0.0, 0.0])
    assert math.exp(gaussian_envelope(t).log_ratio) == pytest.approx(0.25, rel=1e-12)


def test_wrong_curvature_detected():
    with pytest.raises(InvalidEnvelopeError):
        gaussian_envelope(quad_target([3.0], 1.0, 2.0))


def test_x_star_must_be_stationary():
    with pytest.raises(InvalidEnvelopeError):
        StronglyConcaveTarget(log_density=lambda x: -float(x[0] ** 2), dim=1, alpha=1, L_smooth=4, x_star=[0.3])


def test_alpha_L_order():
    with pytest.raises(DomainError):
        quad_target([1.0], 2.0, 1.0)


def test_knorm_ratio_1d():
    t = KNGTarget.from_gradient(lambda x: np.array([x[0] if x[0] > 0 else 2 * x[0]]), 1, 1.0, 2.0, [0.0])
    assert math.exp(knorm_envelope(t).log_ratio) == pytest.approx(0.5, rel=1e-12)


def test_knorm_laplace_exact(rng):
    t = KNGTarget.from_gradient(lambda x: np.asarray(x, dtype=float), 1, 1.0, 1.0, [0.0])
    env = knorm_envelope(t)
    assert env.log_ratio == pytest.approx(0.0, abs=1e-12)
    xs = np.array([squeeze_reject(t, env, rng).value[0] for _ in range(5000)])
    assert stats.kstest(xs, "laplace").pvalue > 1e-3


def test_knorm_2d_runtime():
    A = np.diag([1.0, 3.0])
    t = KNGTarget.from_gradient(lambda x: A @ x, 2, 1.0, 3.0, [0.0, 0.0])
    env = knorm_envelope(t)
    assert math.exp(env.log_ratio) == pytest.approx(1 / 9, rel=1e-12)
    rng = RngStream(21)
    assert certify_runtime_law([squeeze_reject(t, env, rng).runtime for _ in range(10000)], 1 / 9).passed


def test_erm_mode_matches_closed_form():
    spec = ERMSpec(RECORDS, alpha_reg=0.5, L_loss=1.0, delta_sens=1.0, eps=1.0, dim=1)
    t = build_erm_target(spec)
    assert t.x_star == pytest.approx(ridge_solution(RECORDS, 0.5), abs=1e-9)
    A = np.array(RECORDS)[:, :1]
    b = np.array(RECORDS)[:, 1]
    assert t.x_star[0] == pytest.approx(float(A[:, 0] @ b / (A[:, 0] @ A[:, 0] + 0.5)), abs=1e-9)


def test_empty_database_is_gaussian():
    spec = ERMSpec([], alpha_reg=2.0, L_loss=1.0, delta_sens=0.5, eps=1.0, dim=2)
    t = build_erm_target(spec)
    x = np.array([0.3, -0.4])
    assert t(x) == pytest.approx(-(1.0 * 2.0 / (4 * 0.5)) * float(x @ x), rel=1e-12)
    assert t.alpha == t.L_smooth


def test_adjacent_databases_same_ratio():
    a = ERMSpec(RECORDS, 1.0, 1.0, 1.0, 1.0, 1)
    b = ERMSpec(RECORDS[:-1] + [[0.9, -2.0]], 1.0, 1.0, 1.0, 1.0, 1)
    ea, eb = gaussian_envelope(build_erm_target(a)), gaussian_envelope(build_erm_target(b))
    assert ea.log_ratio == pytest.approx(eb.log_ratio, abs=1e-15)
    assert ea.log_ratio == pytest.approx(0.5 * math.log(1.0 / 4.0), abs=1e-12)


def test_generic_loss_uses_finite_differences():
    def huber(x, r):
        z = float(r[0] * x[0] - r[1])
        return 0.5 * z * z if abs(z) < 1 else abs(z) - 0.5

    spec = ERMSpec(RECORDS, 1.0, 1.0, 1.0, 1.0, 1, loss=huber, loss_grad=None)
    x = np.array([0.2])
    h = 1e-6
    assert spec.risk_grad(x)[0] == pytest.approx((spec.risk(x + h) - spec.risk(x - h)) / (2 * h), abs=1e-5)


def test_no_mode():
    spec = ERMSpec(RECORDS, 1.0, 1.0, 1.0, 1.0, 1)
    with pytest.raises(NoModeError):
        build_erm_target(spec, max_iter=1)


def test_spec_domain():
    with pytest.raises(DomainError):
        ERMSpec(RECORDS, 1.0, 1.0, 0.0, 1.0, 1)


def test_load_erm_spec(tmp_path):
    path = tmp_path / "db.json"
    path.write_text(json.dumps({"records": RECORDS, "alpha_reg": 1.0, "L_loss": 1.0, "delta_sens": 2.0, "eps": 0.5}))
    spec = load_erm_spec(path)
    assert spec.dim == 1 and spec.n == 3 and spec.scale == pytest.approx(0.125)

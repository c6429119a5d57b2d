import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privsample import accounting as acc
from privsample.exceptions import DomainError


def brute_sup_log_ratio(p, q, kmax=1000):
    k = np.arange(1, kmax + 1)
    return float(np.max(np.log(p / q) + (k - 1) * np.log((1 - p) / (1 - q))))


def np_vertices(p, q, tmax=400):
    """Neyman-Pearson vertices by enumerating deterministic threshold tests."""
    out = []
    for t in range(1, tmax):
        # reject Geom(p) when T >= t
        alpha = sum(p * (1 - p) ** (k - 1) for k in range(t, 4000))
        beta = sum(q * (1 - q) ** (k - 1) for k in range(1, t))
        out.append((alpha, beta))
    return out


class TestMaxDivergence:
    def test_finite_direction_matches_brute_force(self):
        assert acc.geom_max_divergence(0.5, 0.2) == pytest.approx(math.log(2.5), abs=1e-12)
        assert acc.geom_max_divergence(0.5, 0.2) == pytest.approx(brute_sup_log_ratio(0.5, 0.2), abs=1e-12)

    def test_identical(self):
        assert acc.geom_max_divergence(0.3, 0.3) == 0.0
        assert acc.geom_max_divergence(0.3, 0.3, symmetric=True) == 0.0

    def test_infinite_direction(self):
        assert math.isinf(acc.geom_max_divergence(0.2, 0.5))
        assert math.isinf(acc.geom_max_divergence(0.5, 0.2, symmetric=True))

    @pytest.mark.parametrize("p,q", [(0.0, 0.5), (0.5, 1.2)])
    def test_domain(self, p, q):
        with pytest.raises(DomainError):
            acc.geom_max_divergence(p, q)


class TestFR:
    @pytest.mark.parametrize("R,a,want", [(2, 0.25, 0.5), (2, 0.5, 0.25), (1, 0.7, 0.3)])
    def test_values(self, R, a, want):
        assert acc.f_R(R, a) == pytest.approx(want, abs=1e-12)

    def test_breakpoints(self):
        assert acc.f_R_breakpoints(2.0) == pytest.approx((0.25, 0.5))

    @pytest.mark.parametrize("R", [1.01, 1.1, 2.0, 5.0, 20.0])
    def test_shape(self, R):
        g = np.linspace(0, 1, 1001)
        f = acc.f_R(R, g)
        assert np.all(np.diff(f) <= 1e-12)
        assert np.all(np.diff(f, 2) >= -1e-12)
        assert np.all(f <= 1 - g + 1e-12)
        assert np.max(np.abs(acc.f_R(R, f) - g)) <= 1e-9

    def test_curve_object_validates(self):
        curve = acc.f_R_curve(3.0)
        assert 1.0 in curve.alpha and 0.0 in curve.alpha
        assert curve(0.5) == pytest.approx(acc.f_R(3.0, 0.5), abs=1e-6)


class TestEpsDelta:
    def test_delta_at_zero(self):
        assert acc.delta_of_eps(2.0, 0.0) == pytest.approx(0.25, abs=1e-12)
        assert acc.delta_at_zero(1.1) == pytest.approx(0.1 * 1.1 ** (1.1 / -0.1), rel=1e-12)

    def test_R_one_is_perfect(self):
        assert acc.delta_of_eps(1.0, 0.3) == 0.0

    def test_inverse_pair(self):
        assert acc.delta_of_eps(2.0, 0.91629) == pytest.approx(0.1, abs=1e-5)

    @pytest.mark.parametrize("R,delta,want", [(2, 0.01, 3.22), (1.1, 0.001, 0.356), (1.1, 0.1, 0.0),
                                              (2, 1e-6, 12.43), (1.1, 1e-5, 0.82), (2, 0.1, 0.916)])
    def test_table_values(self, R, delta, want):
        assert acc.eps_of_delta(R, delta) == pytest.approx(want, abs=0.005)

    def test_eps_of_delta_domain(self):
        with pytest.raises(DomainError):
            acc.eps_of_delta(2.0, 0.0)

    @settings(max_examples=200)
    @given(st.sampled_from([1.1, 2.0, 5.0]), st.floats(0.0, 10.0))
    def test_round_trip(self, R, eps):
        assert acc.eps_of_delta(R, acc.delta_of_eps(R, eps)) == pytest.approx(eps, abs=1e-9)

    @settings(max_examples=100)
    @given(st.floats(1.01, 20.0), st.floats(1e-8, 0.5))
    def test_supporting_line_below_f_R(self, R, delta):
        eps = acc.eps_of_delta(R, delta)
        g = np.linspace(0, 1, 2001)
        assert np.all(1 - delta - math.exp(eps) * g <= acc.f_R(R, g) + 1e-9)

    def test_supporting_line_is_tight(self):
        # the line touches f_R, so delta cannot be lowered
        R, delta = 2.0, 1e-3
        eps = acc.eps_of_delta(R, delta)
        # tangency point on the first branch: f'(a) = -e^eps
        a = (R * math.exp(eps)) ** (R / (1 - R))
        assert 1 - delta - math.exp(eps) * a == pytest.approx(acc.f_R(R, a), abs=1e-12)

    def test_f_eps_delta(self):
        assert acc.f_eps_delta(acc.EpsDelta(0, 0), 0.3) == pytest.approx(0.7)
        assert acc.f_eps_delta(acc.EpsDelta(50, 0), 0.1) == pytest.approx(0.0, abs=1e-20)

    def test_curve_to_eps_delta(self):
        assert acc.curve_to_eps_delta(acc.TradeoffCurve.identity(), 0.7).delta == 0.0
        ed = acc.EpsDelta(1.0, 0.127)
        curve = acc.TradeoffCurve.from_function(lambda a: acc.f_eps_delta(ed, a), np.linspace(0, 1, 10001))
        assert acc.curve_to_eps_delta(curve, 1.0).delta == pytest.approx(0.127, abs=1e-9)
        fr = acc.f_R_curve(2.0, n=20001)
        assert acc.curve_to_eps_delta(fr, 0.0).delta == pytest.approx(0.25, abs=1e-6)

    def test_curve_to_eps_delta_matches_closed_form(self):
        fr = acc.f_R_curve(2.0, n=200001)
        for eps in (0.5, 1.0, 3.0):
            assert acc.curve_to_eps_delta(fr, eps).delta == pytest.approx(acc.delta_of_eps(2.0, eps), abs=1e-6)


class TestExpMech:
    def test_values(self):
        want = math.log(0.5) / math.log(1 - math.exp(-1) * 0.5)
        assert acc.exp_mech_R(1.0, 0.5).R == pytest.approx(want, abs=1e-12)
        assert acc.exp_mech_R(1.0, 0.5).R == pytest.approx(3.41003, abs=1e-4)
        assert acc.exp_mech_R(1.0, 1e-8).R == pytest.approx(math.e, abs=1e-4)
        assert acc.exp_mech_R(0.1, 0.9).R > math.exp(0.1)

    @given(st.floats(0.01, 5.0), st.floats(1e-6, 0.99))
    def test_lower_bound(self, eps, p):
        assert acc.exp_mech_R(eps, p).R >= math.exp(eps) * (1 - 1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            acc.exp_mech_R(1.0, 1.0)
        with pytest.raises(DomainError):
            acc.exp_mech_R(0.0, 0.5)


class TestAdaptiveDivergence:
    def test_identical_sequences(self):
        p = [0.3] * 50
        assert acc.adaptive_runtime_divergence(p, p, 50) == 0.0

    def test_constant_factor_grows_linearly(self):
        i = np.arange(1, 101)
        p = 0.1 * (1 - 2.0**-i) + 0.05
        q = 1 - 0.9 * (1 - p)
        d50 = acc.adaptive_runtime_divergence(p, q, 50)
        d100 = acc.adaptive_runtime_divergence(p, q, 100)
        assert d100 - d50 == pytest.approx(50 * math.log(1 / 0.9), rel=0.05)

    def test_harmonic_divergence(self):
        n = 2000
        i = np.arange(1, n + 1)
        p = np.full(n, 0.5)
        q = 1 - np.exp(-1 / i) * (1 - p)
        d = [acc.adaptive_runtime_divergence(p, q, h) for h in (10, 100, 1000, 2000)]
        assert all(np.diff(d) > 0)
        assert d[3] - d[2] == pytest.approx(math.log(2), abs=0.01)

    def test_horizon_too_long(self):
        with pytest.raises(DomainError):
            acc.adaptive_runtime_divergence([0.5], [0.5], 2)


class TestBatching:
    def test_examples(self):
        want = math.log(0.7) / math.log(0.9)
        assert acc.batched_R(0.3, 0.1, 4) == pytest.approx(want, abs=1e-12)
        assert want == pytest.approx(3.3853, abs=1e-4)
        assert acc.batched_R(0.2, 0.2, 7) == 1.0
        assert acc.batched_R(0.19, 0.1, 3) == pytest.approx(2.0, abs=1e-12)

    @given(st.floats(0.01, 0.95), st.floats(0.01, 0.95), st.integers(1, 64))
    def test_invariant(self, p, q, k):
        assert acc.batched_R(p, q, k) == pytest.approx(acc.batched_R(p, q, 1), abs=1e-12, rel=1e-12)

    def test_batched_acceptance(self):
        assert acc.batched_acceptance(0.5, 3) == pytest.approx(0.875)


class TestExactTradeoff:
    def test_vertex(self):
        curve = acc.exact_geometric_tradeoff(0.5, 0.2)
        i = int(np.argmin(np.abs(curve.alpha - 0.5)))
        assert curve.alpha[i] == pytest.approx(0.5) and curve.beta[i] == pytest.approx(0.2)

    def test_identical_is_identity(self):
        curve = acc.exact_geometric_tradeoff(0.5, 0.5)
        g = np.linspace(0, 1, 11)
        assert np.allclose(curve(g), 1 - g)

    def test_matches_enumerated_tests(self):
        curve = acc.exact_geometric_tradeoff(0.3, 0.1)
        for a, b in np_vertices(0.3, 0.1, 40):
            assert curve(a) == pytest.approx(b, abs=1e-9)

    @pytest.mark.parametrize("q", [0.05, 0.1, 0.3, 0.6])
    def test_dominates_f_R(self, q):
        p = 1 - (1 - q) ** 2
        g = np.linspace(0, 1, 5001)
        for curve in (acc.exact_geometric_tradeoff(p, q), acc.exact_geometric_tradeoff(q, p)):
            assert np.all(curve(g) - acc.f_R(2.0, g) >= -1e-12)

    def test_reverse_orientation_is_inverse(self):
        fwd = acc.exact_geometric_tradeoff(0.3, 0.1)
        bwd = acc.exact_geometric_tradeoff(0.1, 0.3)
        for a in np.linspace(0.01, 0.99, 25):
            # f^{-1}(f(a)) == a on the strictly decreasing part
            assert bwd(fwd(a)) == pytest.approx(a, abs=1e-6)


class TestCurveValidation:
    def test_rejects_nonconvex(self):
        with pytest.raises(DomainError):
            acc.TradeoffCurve(np.array([1.0, 0.6, 0.3, 0.0]), np.array([0.0, 0.4, 0.6, 1.0]))

    def test_rejects_bad_alpha(self):
        with pytest.raises(DomainError):
            acc.TradeoffCurve(np.array([0.0, 1.0]), np.array([1.0, 0.0]))

    def test_runtime_R_orientation(self):
        assert acc.runtime_R(0.1, 0.19) == pytest.approx(2.0)
        assert acc.runtime_R(0.19, 0.1) == pytest.approx(2.0)
        assert float(acc.RBound(2.0)) == 2.0
        with pytest.raises(DomainError):
            acc.RBound(0.5)

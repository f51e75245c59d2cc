import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from longmem import EPS, CovarianceModel, MomentMap, ParameterDomainError
from longmem.errors import InsufficientDataError
from longmem.moment_map import c_theta_H_cov, c_theta_H_spec, l_infty, l_infty_quadrature, sigma_1_sq
from longmem.noise_models import spectral_constant

GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
WHITE = MomentMap(CovarianceModel.white())
FGN58 = MomentMap(CovarianceModel.fgn(0.58))


@pytest.fixture(scope="module")
def maps():
    from conftest import BUILTIN_MODELS

    return [MomentMap(m) for m in BUILTIN_MODELS]


class TestFValue:
    def test_white_closed_form(self):
        assert WHITE.f_value(0.6) == pytest.approx(1.5625, abs=1e-12)
        # geometric double sum written out as an oracle
        assert sum(0.36**i for i in range(200)) == pytest.approx(1.5625, abs=1e-12)

    def test_small_theta_limit(self, maps):
        for mm in maps:
            assert mm.f_value(1e-9) == pytest.approx(mm.model.variance, rel=1e-8)

    def test_matches_bruteforce(self, maps):
        for mm in maps:
            for t in GRID:
                assert abs(mm.f_value(t) - mm.f_value_bruteforce(t, 2000)) < 1e-8

    def test_bruteforce_basics(self):
        assert WHITE.f_value_bruteforce(0.6, 200) == pytest.approx(1.5625, abs=1e-10)
        assert FGN58.f_value_bruteforce(0.5, 0) == 1.0
        r0 = 1.0
        for K in (1, 5, 20):
            assert FGN58.f_value_bruteforce(0.5, K + 1) >= FGN58.f_value_bruteforce(0.5, K) - 2 * r0 * 0.5**K

    def test_increasing_and_above_variance(self, maps):
        for mm in maps:
            vals = [mm.f_value(t) for t in GRID]
            assert np.all(np.diff(vals) > 0)
            assert min(vals) > mm.model.variance

    @pytest.mark.parametrize("theta", [0.0, 1.0, -0.1, 1 - 1e-7])
    def test_domain(self, theta):
        with pytest.raises(ParameterDomainError):
            WHITE.f_value(theta)

    def test_near_one_streams_covariance(self):
        # truncation depth exceeds the cached prefix here
        mm = MomentMap(CovarianceModel.arfima(0.2))
        t = 0.99995
        assert mm.truncation_depth(t) > mm._prefix.size
        assert mm.f_value(t) > mm.f_value(0.999)

    def test_custom_needs_data(self):
        seq = MomentMap(CovarianceModel.fgn(0.6)).cov_prefix(400)
        mm = MomentMap(CovarianceModel.custom(seq))
        assert mm.f_value(0.5) == pytest.approx(MomentMap(CovarianceModel.fgn(0.6)).f_value(0.5), abs=1e-10)
        with pytest.raises(InsufficientDataError):
            mm.f_value(0.95)


class TestDerivative:
    def test_white_closed_form(self):
        assert WHITE.f_derivative(0.6) == pytest.approx(1.2 / 0.4096, rel=1e-12)

    def test_central_difference(self, maps):
        h = 1e-5
        for mm in maps:
            for t in GRID:
                fd = (mm.f_value(t + h) - mm.f_value(t - h)) / (2 * h)
                assert mm.f_derivative(t) == pytest.approx(fd, rel=1e-5)
                assert mm.f_derivative(t) > 0


class TestInverse:
    def test_round_trip(self, maps):
        for mm in maps:
            for t in GRID:
                theta, clamped = mm.f_inverse(mm.f_value(t))
                assert not clamped
                assert abs(theta - t) < 1e-8

    def test_white_analytic(self):
        theta, clamped = WHITE.f_inverse(1.5625)
        assert not clamped
        assert theta == pytest.approx(math.sqrt(1 - 1 / 1.5625), abs=1e-12)

    def test_below_range_clamps(self, maps):
        for mm in maps:
            assert mm.f_inverse(0.5 * mm.model.variance) == (EPS, True)

    def test_above_range_clamps(self):
        assert FGN58.f_inverse(1e12) == (1 - EPS, True)

    def test_near_upper_end(self):
        y = FGN58.f_value(0.99999)
        theta, clamped = FGN58.f_inverse(y)
        assert not clamped and theta == pytest.approx(0.99999, abs=1e-9)

    @pytest.mark.parametrize("y", [0.0, -1.0, float("nan")])
    def test_domain(self, y):
        with pytest.raises(ParameterDomainError):
            WHITE.f_inverse(y)

    @given(t=st.floats(0.01, 0.99))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, t):
        theta, clamped = FGN58.f_inverse(FGN58.f_value(t))
        assert not clamped and abs(theta - t) < 1e-8

    @given(a=st.floats(1.01, 50.0), b=st.floats(1.01, 50.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone(self, a, b):
        ta, _ = FGN58.f_inverse(a)
        tb, _ = FGN58.f_inverse(b)
        if a < b:
            assert ta < tb
        elif a > b:
            assert ta > tb


class TestRY:
    def test_lag_zero_is_f(self, maps):
        for mm in maps:
            assert mm.r_y(0.6, 0) == pytest.approx(mm.f_value(0.6), abs=1e-12)

    def test_white_closed_form(self):
        assert WHITE.r_y(0.6, 2) == pytest.approx(0.5625, abs=1e-12)
        assert WHITE.r_y_bruteforce(0.6, 2, 200) == pytest.approx(0.5625, abs=1e-10)

    def test_even(self):
        assert FGN58.r_y(0.6, -7) == FGN58.r_y(0.6, 7)

    def test_matches_bruteforce(self, maps):
        for mm in maps:
            for t in (0.2, 0.6, 0.9):
                for k in (1, 3, 10):
                    assert abs(mm.r_y(t, k) - mm.r_y_bruteforce(t, k, 2000)) < 1e-8

    def test_sequence_matches_pointwise(self, maps):
        for mm in maps:
            seq = mm.r_y_sequence(0.7, 300)
            for k in (0, 1, 17, 300):
                assert seq[k] == pytest.approx(mm.r_y(0.7, k), abs=1e-10)

    def test_power_law_tail(self):
        H, theta = 0.58, 0.6
        c = CovarianceModel.fgn(H).hypothesis_constant * c_theta_H_cov(theta, H)
        for k in (500, 2000, 10_000):
            assert FGN58.r_y(theta, k) / (c * k ** (2 * H - 2)) == pytest.approx(1.0, abs=0.05)


class TestSigmaH:
    def test_white_closed_form(self):
        expected = 2 * (1 + 0.36) / (1 - 0.36) ** 3
        direct = 2 * sum((0.6 ** abs(k) / 0.64) ** 2 for k in range(-400, 401))
        assert direct == pytest.approx(expected, rel=1e-12)
        assert WHITE.sigma_H_sq(0.6) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("model", [CovarianceModel.fgn(0.55), CovarianceModel.fgn(0.58), CovarianceModel.fgn(0.7), CovarianceModel.arfima(0.08), CovarianceModel.arfima(0.2)])
    def test_stable_under_doubling(self, model):
        mm = MomentMap(model)
        for K in (1 << 12, 1 << 15):
            a = mm.sigma_H_sq(0.6, K=K)
            b = mm.sigma_H_sq(0.6, K=2 * K)
            assert abs(a / b - 1) < 1e-4

    def test_tail_correction_against_long_direct_sum(self):
        # explicit summation to 2^21 lags plus its own tail must agree with the default
        mm = FGN58
        assert mm.sigma_H_sq(0.6) == pytest.approx(mm.sigma_H_sq(0.6, K=1 << 21), rel=1e-6)

    def test_boundary(self):
        assert math.isfinite(MomentMap(CovarianceModel.fgn(0.74)).sigma_H_sq(0.6))
        with pytest.raises(ParameterDomainError):
            MomentMap(CovarianceModel.fgn(0.76)).sigma_H_sq(0.6)
        with pytest.raises(ParameterDomainError):
            FGN58.sigma_H_sq(0.6, H=0.6)


class TestClosedForms:
    def test_sigma_1_sq_three_quarters(self):
        assert sigma_1_sq(0.75) == pytest.approx(8 / 3, rel=1e-12)

    def test_sigma_1_sq_gamma_oracle(self):
        H = mpmath.mpf("0.58")
        b = mpmath.gamma(2 * H - 1) * mpmath.gamma(2 - 2 * H) / mpmath.gamma(1)
        expected = b * mpmath.sin(2 * mpmath.pi * H - mpmath.pi) / (H * (2 * H - 1) * mpmath.pi)
        assert sigma_1_sq(0.58) == pytest.approx(float(expected), rel=1e-12)

    @pytest.mark.parametrize("H", [0.55, 0.58, 0.65, 0.7, 0.74])
    def test_identities(self, H):
        assert l_infty(H) * H * (2 * H - 1) == pytest.approx(1.0, abs=1e-10)
        for theta in (0.0, 0.3, 0.6):
            assert c_theta_H_cov(theta, H) * (1 - theta) ** 2 == pytest.approx(H * (2 * H - 1) * sigma_1_sq(H), rel=1e-10)

    def test_c_cov_values(self):
        H = 0.62
        assert c_theta_H_cov(0.0, H) == pytest.approx(
            float(mpmath.beta(2 * H - 1, 2 - 2 * H) * mpmath.sin(2 * mpmath.pi * H - mpmath.pi) / mpmath.pi), rel=1e-12
        )
        assert c_theta_H_cov(0.6, 0.75) == pytest.approx(6.25, rel=1e-12)

    def test_c_spec(self):
        assert c_theta_H_spec(0.0, 0.66) == pytest.approx(spectral_constant(0.66), rel=1e-14)
        assert c_theta_H_spec(0.6, 0.75) == pytest.approx(0.39894 / 0.16, abs=1e-4)
        vals = [c_theta_H_spec(t, 0.6) for t in np.linspace(0, 0.95, 20)]
        assert np.all(np.diff(vals) > 0)

    def test_l_infty_limits(self):
        assert l_infty(0.75) == pytest.approx(8 / 3, rel=1e-14)
        assert l_infty(1 - 1e-9) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("H", [0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95])
    def test_l_infty_quadrature(self, H):
        # plain adaptive quadrature after the substitution x = u^(1/(2H-1)) removes the singularity
        a = 2 * H - 1
        direct, _ = quad(lambda u: (1 - u ** (1 / a)) / a, 0, 1, epsabs=1e-14, epsrel=1e-13)
        assert 2 * direct == pytest.approx(l_infty(H), abs=1e-9)
        assert l_infty_quadrature(H) == pytest.approx(l_infty(H), abs=1e-9)

    @pytest.mark.parametrize("fn", [sigma_1_sq, l_infty])
    @pytest.mark.parametrize("H", [0.5, 1.0])
    def test_domain(self, fn, H):
        with pytest.raises(ParameterDomainError):
            fn(H)


class TestTabulate:
    def test_white(self):
        table = WHITE.tabulate_f([0.2, 0.5, 0.8])
        np.testing.assert_allclose(table[:, 1], [1 / 0.96, 4 / 3, 1 / 0.36], rtol=1e-12)

    def test_monotone_and_invertible(self):
        grid = np.linspace(0.01, 0.99, 99)
        table = FGN58.tabulate_f(grid)
        assert np.all(np.diff(table[:, 1]) > 0)
        back = [FGN58.f_inverse(y)[0] for y in table[:, 1]]
        np.testing.assert_allclose(back, grid, atol=1e-8)

    @pytest.mark.parametrize("grid", [[0.5, 0.4], [0.0, 0.5], [0.5, 1.0], []])
    def test_bad_grid(self, grid):
        with pytest.raises(ParameterDomainError):
            WHITE.tabulate_f(grid)


class TestVarianceConstants:
    def test_fgn_model_scaling(self):
        c = FGN58.variance_constants(0.6)
        # fGn: C = H(2H-1) exactly cancels the closed-form 1/(H(2H-1))
        assert c.sigma_1_sq_model == pytest.approx(1.0, rel=1e-12)
        assert c.c_cov_model * (1 - 0.6) ** 2 == pytest.approx(0.58 * 0.16, rel=1e-12)
        assert all(v > 0 for v in (c.sigma_H_sq, c.sigma_1_sq, c.f_prime, c.c_cov, c.c_spec, c.l_inf))

    def test_large_H_has_no_theta_clt(self):
        c = MomentMap(CovarianceModel.fgn(0.8)).variance_constants(0.6)
        assert c.sigma_H_sq == math.inf

    def test_white(self):
        c = WHITE.variance_constants(0.6)
        assert math.isnan(c.sigma_1_sq) and c.sigma_1_sq_model == 1.0

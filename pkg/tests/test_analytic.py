import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from pspin import analytic
from pspin.analytic import ModelParams
from pspin.errors import BracketFailure, DomainError, NoLowTempSolution


def semicircle_log_potential(e):
    """Independent oracle for omega: quadrature against the semicircle law."""

    def f(x):
        if x == e:
            return 0.0
        return math.log(abs(e - x)) * math.sqrt(max(4.0 - x * x, 0.0)) / (2.0 * math.pi)

    pts = [e] if -2.0 < e < 2.0 else None
    val, _ = integrate.quad(f, -2.0, 2.0, limit=400, points=pts)
    return val


class TestOmega:
    @pytest.mark.parametrize("e", [-3.0, -1.9, -1.5, 0.0, 0.7, 2.01, 2.5])
    def test_against_quadrature(self, e):
        assert analytic.omega(e) == pytest.approx(
            semicircle_log_potential(e), abs=1e-7
        )

    def test_vectorized(self):
        es = np.array([-2.0, 0.0, 2.0])
        out = analytic.omega(es)
        assert out.shape == (3,)
        assert out[0] == pytest.approx(analytic.omega(-2.0))

    def test_continuity_at_edge(self):
        edge = 2.0
        assert analytic.omega(edge - 1e-9) == pytest.approx(
            analytic.omega(edge + 1e-9), abs=1e-6
        )


class TestThresholds:
    def test_e_inf_p2(self):
        assert analytic.e_inf(2) == pytest.approx(math.sqrt(2.0), abs=1e-14)

    def test_e_zero_is_theta_root(self):
        for p in (3, 4, 5):
            e0 = analytic.e_zero(p)
            assert abs(analytic.theta(p, -e0)) < 1e-10
            assert e0 > analytic.e_inf(p)

    def test_e_zero_bisection_oracle(self):
        # independent bisection on theta, no brentq
        p = 3
        lo, hi = analytic.e_inf(p) + 1e-12, 3.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if analytic.theta(p, -mid) > 0:
                lo = mid
            else:
                hi = mid
        assert analytic.e_zero(p) == pytest.approx(0.5 * (lo + hi), abs=1e-10)

    def test_c_p_matches_difference_quotient(self):
        for p in (3, 4, 5):
            e0 = analytic.e_zero(p)
            h = 1e-6
            slope = (analytic.theta(p, -e0 + h) - analytic.theta(p, -e0 - h)) / (2 * h)
            assert analytic.c_p(p) == pytest.approx(slope, abs=1e-6)


class TestAlpha:
    @given(
        p=st.integers(min_value=2, max_value=7),
        q=st.floats(min_value=-0.999, max_value=0.999),
    )
    @settings(max_examples=200, deadline=None)
    def test_normalization(self, p, q):
        total = sum(analytic.alpha(p, k, q) ** 2 for k in range(p + 1))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_q_one_collapses(self):
        assert analytic.alpha(3, 0, 1.0) == pytest.approx(1.0)
        for k in (1, 2, 3):
            assert analytic.alpha(3, k, 1.0) == pytest.approx(0.0)

    def test_tail_complements_head(self):
        p, q = 5, 0.6
        head = sum(analytic.alpha(p, k, q) ** 2 for k in range(3))
        assert analytic.alpha_sq_tail(p, q, 3) == pytest.approx(1.0 - head, abs=1e-12)


class TestConstants:
    def test_reference_values_p3_beta6(self):
        b = analytic.constants(ModelParams(3, 6.0))
        assert b.e_inf == pytest.approx(1.632993161855452, abs=1e-12)
        assert b.e_zero == pytest.approx(1.6569983635274732, abs=1e-10)
        assert b.c_p == pytest.approx(0.6250208221069986, rel=1e-10)
        assert b.q_star == pytest.approx(0.969997209822173, abs=1e-9)
        assert b.c_star == pytest.approx(0.29001490266916874, rel=1e-9)

    def test_q_ordering(self):
        for p in (3, 4, 5):
            for beta in (2.0, 4.0, 8.0, 16.0):
                b = analytic.constants(ModelParams(p, beta))
                assert 0 < b.q_star_star < b.q_c < b.q_star < 1

    def test_chi_ordering(self):
        b = analytic.constants(ModelParams(3, 6.0))
        assert b.chi1 < b.chi2 < b.chi3

    def test_high_temperature_has_no_roots(self):
        with pytest.raises(NoLowTempSolution):
            analytic.constants(ModelParams(3, 0.5))

    def test_c_ls_lower_bound_enforced(self):
        p = 3
        bound = 1.0 / (2 * p * (analytic.e_zero(p) - analytic.e_inf(p)))
        with pytest.raises(DomainError):
            analytic.constants(ModelParams(3, 6.0), c_ls=0.5 * bound)

    def test_invalid_params(self):
        with pytest.raises(Exception):
            ModelParams(1, 6.0)
        with pytest.raises(Exception):
            ModelParams(3, -1.0)


class TestLambdaZ:
    def test_parisi_identity(self):
        for p in (3, 4, 5):
            for beta in (2.0, 4.0, 8.0, 16.0):
                params = ModelParams(p, beta)
                b = analytic.constants(params)
                lz = analytic.lambda_z(params, b.e_zero, b.q_star)
                pr = analytic.parisi_1rsb(params, b.m_star, b.q_star**2)
                assert abs(lz.value - pr) < 1e-8

    def test_derivatives_match_finite_differences(self):
        params = ModelParams(3, 6.0)
        e, q, h = 1.6, 0.9, 1e-6
        lz = analytic.lambda_z(params, e, q)
        up = analytic.lambda_z(params, e, q + h).value
        dn = analytic.lambda_z(params, e, q - h).value
        assert lz.dq == pytest.approx((up - dn) / (2 * h), rel=1e-5)
        assert lz.dq2 == pytest.approx((up - 2 * lz.value + dn) / h**2, rel=1e-3)

    def test_q_zero_limit(self):
        params = ModelParams(3, 6.0)
        lz = analytic.lambda_z(params, 1.6, 0.0)
        assert lz.value == pytest.approx(0.5 * 36.0, abs=1e-12)

    def test_stationary_at_q_star(self):
        params = ModelParams(4, 8.0)
        b = analytic.constants(params)
        lz = analytic.lambda_z(params, b.e_zero, b.q_star)
        assert abs(lz.dq) < 1e-8
        assert lz.dq2 < 0


class TestP2FreeEnergy:
    def test_high_temperature_branch(self):
        beta = 0.3
        assert analytic.p2_free_energy(beta) == pytest.approx(0.5 * beta * beta)

    def test_continuous_at_transition(self):
        bc = 1.0 / math.sqrt(2.0)
        assert analytic.p2_free_energy(bc - 1e-10) == pytest.approx(
            analytic.p2_free_energy(bc + 1e-10), abs=1e-8
        )

    def test_low_temperature_slope(self):
        # dF/dbeta -> ground state energy sqrt(2) for large beta
        h = 1e-5
        beta = 40.0
        slope = (analytic.p2_free_energy(beta + h) - analytic.p2_free_energy(beta - h)) / (2 * h)
        assert slope == pytest.approx(math.sqrt(2.0) - 1.0 / (2 * beta), abs=1e-3)


class TestBandDensities:
    def test_log_xi1_at_q_zero(self):
        params = ModelParams(3, 2.0)
        n = 16
        pt = analytic.band_density(params, n, 0.0, 0.0)
        assert pt.log_xi1 == pytest.approx(0.5 * 4.0 * n, abs=1e-10)

    def test_pair_density_decouples_at_rho_zero(self):
        params = ModelParams(3, 2.0)
        n, u, q1, q2 = 12, -3.0, 0.4, 0.6
        lx2 = analytic.log_xi2(params, n, u, q1, q2, 0.0)
        lx1a = analytic.band_density(params, n, u, q1).log_xi1
        lx1b = analytic.band_density(params, n, u, q2).log_xi1
        assert lx2 == pytest.approx(lx1a + lx1b, abs=1e-9)

    @pytest.mark.parametrize("p,q1,q2", [(3, 0.0, 1.0 - 1e-6), (4, 0.3, 0.9), (5, 0.0, 0.5)])
    def test_band_lipschitz_grid_oracle(self, p, q1, q2):
        params = ModelParams(p, 4.0)
        grid = np.linspace(q1, q2, 20001)
        oracle = sum(
            float(np.max(analytic.alpha(p, k, grid) ** 2)) for k in range(2, p + 1)
        )
        assert analytic.band_lipschitz(params, q1, q2) == pytest.approx(
            oracle, rel=1e-6
        )

    def test_aux_constants_affine_in_u(self):
        params = ModelParams(3, 6.0)
        b = analytic.constants(params)
        n, kappa = 32, 0.37
        a0 = analytic.aux_constants(params, n)
        a1 = analytic.aux_constants(params, n, u=a0.m_n + kappa)
        assert a0.log_v - a1.log_v == pytest.approx(
            params.beta * b.q_star**3 * kappa, rel=1e-10
        )

    def test_y_law_consistent_with_c_star(self):
        params = ModelParams(3, 6.0)
        b = analytic.constants(params)
        a = analytic.aux_constants(params, 64)
        assert a.y_mean == pytest.approx(0.25 * math.log(b.c_star))
        assert a.y_var == pytest.approx(-0.5 * math.log(b.c_star))
        # lognormal unit-mean consistency
        assert a.y_mean + 0.5 * a.y_var == pytest.approx(0.0, abs=1e-12)


class TestSphereArea:
    def test_against_closed_forms(self):
        # 2-sphere in R^3: 4 pi; circle in R^2: 2 pi
        assert math.exp(analytic.log_sphere_area(3)) == pytest.approx(4 * math.pi)
        assert math.exp(analytic.log_sphere_area(2)) == pytest.approx(2 * math.pi)

    def test_area_ratio_consistent(self):
        n = 17
        direct = analytic.log_sphere_area(n - 1) - analytic.log_sphere_area(n)
        assert analytic.log_area_ratio(n) == pytest.approx(direct, abs=1e-12)


class TestAsymptoticInvariants:
    def test_omega_far_field(self):
        x = 1e3
        assert analytic.omega(x) - math.log(x) == pytest.approx(0.0, abs=1e-5)
        assert analytic.omega(-x) == pytest.approx(analytic.omega(x), abs=1e-12)

    def test_quadratic_characterization_of_q_roots(self):
        # alpha_2(q) * sqrt(2) beta at the outer roots equals r -/+ sqrt(r^2-1)
        for p, beta in ((3, 6.0), (4, 8.0)):
            b = analytic.constants(ModelParams(p, beta))
            r = b.e_zero / b.e_inf
            lo = r - math.sqrt(r * r - 1.0)
            hi = r + math.sqrt(r * r - 1.0)
            assert analytic.alpha(p, 2, b.q_star) * math.sqrt(2.0) * beta == pytest.approx(lo, abs=1e-8)
            assert analytic.alpha(p, 2, b.q_star_star) * math.sqrt(2.0) * beta == pytest.approx(hi, abs=1e-8)

    def test_q_star_large_beta_rate(self):
        # q_* approaches 1 - chi1/sqrt(2p(p-1)) at rate beta^-2
        p = 3
        betas = np.array([8.0, 16.0, 32.0, 64.0])
        gaps = []
        for beta in betas:
            b = analytic.constants(ModelParams(p, beta))
            lim = 1.0 - b.chi1 / math.sqrt(2.0 * p * (p - 1))
            gaps.append(abs(b.q_star - lim))
        fit = np.polyfit(np.log(betas), np.log(gaps), 1)
        assert fit[0] <= -1.8

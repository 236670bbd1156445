import numpy as np
import pytest

from common import DomainError
from mati import (
    FlowRateParams,
    MatiParams,
    coupling_ratio,
    hybrid_u,
    mati,
    mati_surface,
    mati_tilde,
    phi_eval,
    phi_rk4,
    transit_time,
)


def _draws(rng, n):
    """(gamma, Lambda) pairs on both sides of the seam and close to it."""
    gammas = np.exp(rng.uniform(np.log(0.1), np.log(20.0), n))
    lambdas = np.exp(rng.uniform(np.log(0.1), np.log(20.0), n))
    lambdas[: n // 10] = gammas[: n // 10] * (1.0 + rng.uniform(-1e-3, 1e-3, n // 10))
    return gammas, lambdas


class TestMati:
    @pytest.mark.parametrize(
        "gamma,lambda_cap,expected",
        [
            (1.0, 1.0, 1.0),
            (2.0, 2.0, 0.5),
            (np.sqrt(2.0), 1.0, np.pi / 4.0),
        ],
    )
    def test_closed_form_values(self, gamma, lambda_cap, expected):
        assert mati(gamma, lambda_cap) == pytest.approx(expected, rel=1e-12)

    def test_low_gain_branch(self):
        gamma, lambda_cap = 0.6, 1.0
        r = np.sqrt(1.0 - 0.36)
        assert mati(gamma, lambda_cap) == pytest.approx(np.arctanh(r) / r, rel=1e-12)

    def test_matches_transit_time(self, rng):
        gammas, lambdas = _draws(rng, 100)
        for gamma, lambda_cap in zip(gammas, lambdas):
            reference = transit_time(gamma, lambda_cap)
            assert mati(gamma, lambda_cap) == pytest.approx(reference, rel=1e-6)

    @pytest.mark.parametrize("lambda_cap", [0.1, 1.0, 7.5])
    def test_seam_continuity(self, lambda_cap):
        for factor in (1.0 - 1e-6, 1.0 + 1e-6):
            assert abs(mati(lambda_cap * factor, lambda_cap) - 1.0 / lambda_cap) < 1e-4

    def test_decreasing_on_grid(self):
        grid = np.geomspace(0.1, 20.0, 20)
        table = mati_surface(grid, grid)
        assert np.all(np.diff(table, axis=0) < 0.0)  # gamma
        assert np.all(np.diff(table, axis=1) < 0.0)  # Lambda

    @pytest.mark.parametrize("gamma,lambda_cap", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (np.inf, 1.0)])
    def test_rejects_nonpositive(self, gamma, lambda_cap):
        with pytest.raises(DomainError):
            mati(gamma, lambda_cap)

    def test_coupling_ratio_zero_on_seam(self):
        assert coupling_ratio(3.0, 3.0) == 0.0


class TestMatiTilde:
    @pytest.mark.parametrize(
        "gamma,lambda_cap,lam",
        [(2.0, 1.0, 0.2), (0.5, 1.0, 0.2), (1.0, 1.0, 0.5), (10.0, 5.989, 0.1), (0.3, 4.0, 0.7)],
    )
    def test_matches_transit_time(self, gamma, lambda_cap, lam):
        reference = transit_time(gamma, lambda_cap, 1.0 / lam, lam)
        assert mati_tilde(lam, gamma, lambda_cap) == pytest.approx(reference, rel=1e-8)

    def test_below_mati(self):
        assert mati_tilde(0.3, 2.0, 1.0) < mati(2.0, 1.0)

    def test_tends_to_mati(self):
        assert mati_tilde(1e-8, 2.0, 1.0) == pytest.approx(mati(2.0, 1.0), rel=1e-6)

    @pytest.mark.parametrize("gamma,lambda_cap", [(2.0, 1.0), (1.0, 1.0), (0.3, 4.0)])
    def test_decreasing_in_lambda(self, gamma, lambda_cap):
        values = [mati_tilde(lam, gamma, lambda_cap) for lam in np.linspace(0.05, 0.95, 19)]
        assert np.all(np.diff(values) < 0.0)

    @pytest.mark.parametrize("lam", [0.0, 1.0, 1.5])
    def test_lambda_range(self, lam):
        with pytest.raises(DomainError):
            mati_tilde(lam, 1.0, 1.0)


class TestPhi:
    def test_initial_value(self):
        params = MatiParams.create(2.0, 1.0, 0.25)
        assert phi_eval(0.0, params) == pytest.approx(4.0, rel=1e-12)

    @pytest.mark.parametrize(
        "gamma,lambda_cap,lam", [(2.0, 1.0, 0.3), (0.5, 1.0, 0.3), (1.0, 1.0, 0.3)]
    )
    def test_window_end_reaches_lambda(self, gamma, lambda_cap, lam):
        params = MatiParams.create(gamma, lambda_cap, lam)
        window = mati_tilde(lam, gamma, lambda_cap)
        assert phi_eval(window, params) == pytest.approx(lam, rel=1e-8)

    @pytest.mark.parametrize(
        "gamma,lambda_cap,lam", [(3.0, 1.0, 0.2), (0.4, 2.0, 0.5), (1.0, 1.0, 0.1)]
    )
    def test_matches_rk4(self, gamma, lambda_cap, lam):
        params = MatiParams.create(gamma, lambda_cap, lam)
        tau = 0.5 * mati_tilde(lam, gamma, lambda_cap)
        assert phi_eval(tau, params) == pytest.approx(phi_rk4(tau, params), rel=1e-8)

    def test_matches_rk4_random(self, rng):
        gammas, lambdas = _draws(rng, 100)
        for gamma, lambda_cap in zip(gammas, lambdas):
            lam = rng.uniform(0.05, 0.95)
            params = MatiParams.create(gamma, lambda_cap, lam)
            tau = rng.uniform(0.0, mati_tilde(lam, gamma, lambda_cap))
            assert phi_eval(tau, params) == pytest.approx(phi_rk4(tau, params), rel=1e-6)

    def test_stays_in_band_and_decreases(self, rng):
        for _ in range(100):
            gamma, lambda_cap = np.exp(rng.uniform(np.log(0.05), np.log(20.0), 2))
            lam = rng.uniform(0.05, 0.95)
            params = MatiParams.create(gamma, lambda_cap, lam)
            taus = np.linspace(0.0, mati_tilde(lam, gamma, lambda_cap), 25)
            phis = np.array([phi_eval(tau, params) for tau in taus])
            assert np.all(phis >= lam * (1.0 - 1e-9))
            assert np.all(phis <= (1.0 / lam) * (1.0 + 1e-12))
            assert np.all(np.diff(phis) < 0.0)

    def test_outside_window(self):
        params = MatiParams.create(2.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            phi_eval(-0.1, params)
        with pytest.raises(DomainError):
            phi_eval(2.0 * mati_tilde(0.5, 2.0, 1.0), params)


class TestHybridU:
    def test_zero_error_is_v(self):
        params = MatiParams.create(2.0, 1.0, 0.5)
        assert hybrid_u(3.0, 0.0, 0.1, params) == 3.0

    def test_adds_weighted_error(self):
        params = MatiParams.create(2.0, 1.0, 0.5)
        expected = 3.0 + 2.0 * phi_eval(0.1, params) * 4.0
        assert hybrid_u(3.0, 2.0, 0.1, params) == pytest.approx(expected)

    def test_tau_checked_without_error(self):
        params = MatiParams.create(2.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            hybrid_u(3.0, 0.0, -0.1, params)
        with pytest.raises(DomainError):
            hybrid_u(3.0, 0.0, 2.0 * mati_tilde(0.5, 2.0, 1.0), params)


def test_mati_surface():
    gammas = np.array([0.5, 1.0, 4.0])
    lambdas = np.array([0.5, 2.0])
    table = mati_surface(gammas, lambdas, delta=0.999)
    assert table.shape == (3, 2)
    assert table[1, 0] == pytest.approx(0.999 * mati(1.0, 0.5))
    assert np.all(np.diff(table, axis=0) < 0.0)


class TestFlowRate:
    def test_lambda_cap(self):
        assert FlowRateParams.create(0.5, 2.0).lambda_cap == 2.25
        assert FlowRateParams.create(-4.0, 1.0).lambda_cap == -1.0

    def test_bound_rate(self):
        params = FlowRateParams.create(0.5, 2.0)
        assert params.bound_rate(params.lambda_cap) == -0.5
        negative = FlowRateParams.create(-4.0, 1.0)
        assert negative.bound_rate(0.001) == pytest.approx(4.0)
        assert negative.bound_rate(5.0) == 4.0

    def test_rejects_nonpositive_gain(self):
        with pytest.raises(DomainError):
            FlowRateParams.create(0.1, 0.0)

"""
Tests for the level-energy density, the profile posterior and the MAP solver.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate, stats

from app.core.exceptions import (
    DegenerateInputException,
    InsufficientLevelsException,
    InvalidArgumentException,
)
from app.models.signal_data import BetaPrior, EstimationMethod, LevelEnergies, SolverConfig
from app.services.posterior import (
    energy_log_density,
    energy_moments,
    expected_energies,
    grid_argmax,
    log_likelihood,
    log_posterior_profile,
    log_prior_density,
    map_estimate,
    posterior_grid,
    posterior_h_derivative,
    profile_sigma2,
)


def random_energies(rng, J, j1, j2, hurst=None):
    """Energies scattered around their model expectations for a random H."""
    hurst = hurst if hurst is not None else rng.uniform(0.15, 0.85)
    base = expected_energies(hurst, rng.uniform(0.5, 2.0), j1, j2, J)
    noise = np.exp(rng.normal(0.0, 0.3, size=base.c))
    return LevelEnergies(
        energies={j: y * e for (j, y), e in zip(base.energies.items(), noise)},
        J=J, j1=j1, j2=j2,
    )


def random_prior(rng):
    """Beta prior with mean in [0.2, 0.8] and both parameters above 1."""
    mean, ess = rng.uniform(0.2, 0.8), rng.uniform(10.0, 1000.0)
    return BetaPrior(mean * ess, (1.0 - mean) * ess)


def reference_log_posterior(hurst, energies, prior):
    """Term-by-term log posterior at the profiled sigma^2."""
    b, c, m = energies.b, energies.c, energies.m
    s0 = sum(y * 2.0 ** ((2 * hurst + m) * j) for j, y in energies.energies.items())
    sigma2 = b * s0 / (b * c + 2)
    total = 0.0
    for j, y in energies.energies.items():
        rate = b * 2.0 ** ((2 * hurst + m) * j) / (2 * sigma2)
        total += stats.gamma.logpdf(y, a=b / 2, scale=1.0 / rate)
    return total + stats.beta.logpdf(hurst, prior.alpha, prior.beta) - math.log(sigma2)


class TestEnergyDensity:
    """Tests for energy_log_density and energy_moments."""

    @pytest.mark.parametrize("J", [3, 4, 5, 6])
    def test_density_integrates_to_one(self, J):
        """exp(ln g) integrates to 1 within 1e-6."""
        j, hurst, sigma2 = J - 2, 0.5, 1.0
        mean, variance = energy_moments(j, hurst, sigma2, J=J)
        upper = mean + 40.0 * math.sqrt(variance)
        total, _ = integrate.quad(
            lambda y: math.exp(energy_log_density(y, j, hurst, sigma2, J=J)),
            0.0, upper, points=[mean], limit=200, epsabs=1e-12,
        )
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_mean_by_quadrature(self):
        """E y_j = sigma^2 2^-(2H+m)j for m=1, J=4, j=2, H=0.3, sigma^2=2."""
        j, hurst, sigma2, J = 2, 0.3, 2.0, 4
        mean, variance = energy_moments(j, hurst, sigma2, J=J)
        upper = mean + 40.0 * math.sqrt(variance)
        first, _ = integrate.quad(
            lambda y: y * math.exp(energy_log_density(y, j, hurst, sigma2, J=J)),
            0.0, upper, points=[mean], limit=200, epsabs=1e-12,
        )
        assert first == pytest.approx(sigma2 * 2.0 ** (-(2 * hurst + 1) * j), abs=1e-6)
        assert mean == pytest.approx(sigma2 * 2.0 ** (-(2 * hurst + 1) * j), rel=1e-14)

    def test_variance_by_quadrature(self):
        """Var y_j matches the closed form."""
        j, hurst, sigma2, J = 2, 0.3, 2.0, 4
        mean, variance = energy_moments(j, hurst, sigma2, J=J)
        upper = mean + 40.0 * math.sqrt(variance)
        second, _ = integrate.quad(
            lambda y: (y - mean) ** 2 * math.exp(energy_log_density(y, j, hurst, sigma2, J=J)),
            0.0, upper, points=[mean], limit=200, epsabs=1e-14,
        )
        assert second == pytest.approx(variance, rel=1e-6)

    def test_mode_matches_grid_argmax(self):
        """The density peaks at (b/2 - 1) / rate."""
        j, hurst, sigma2, J = 3, 0.4, 1.5, 6
        b = 2.0 ** J
        rate = b * 2.0 ** ((2 * hurst + 1) * j) / (2 * sigma2)
        mode = (b / 2 - 1) / rate
        grid = np.linspace(0.5 * mode, 1.5 * mode, 200_001)
        values = energy_log_density(grid, j, hurst, sigma2, J=J)
        assert grid[np.argmax(values)] == pytest.approx(mode, rel=1e-5)

    def test_matches_scipy_gamma(self):
        """ln g equals the Gamma(b/2, rate) log-density."""
        j, hurst, sigma2, J = 5, 0.7, 0.8, 11
        b = 2.0 ** J
        rate = b * 2.0 ** ((2 * hurst + 1) * j) / (2 * sigma2)
        y = energy_moments(j, hurst, sigma2, J=J)[0] * 1.02
        expected = stats.gamma.logpdf(y, a=b / 2, scale=1.0 / rate)
        assert energy_log_density(y, j, hurst, sigma2, J=J) == pytest.approx(expected, rel=1e-10)

    def test_large_b_stays_finite(self):
        """b/2 well above 1000 evaluates without overflow."""
        value = energy_log_density(1e-4, 4, 0.5, 1.0, J=14)
        assert math.isfinite(value)

    def test_rejects_nonpositive_energy(self):
        """y must be positive."""
        with pytest.raises(InvalidArgumentException, match="positive"):
            energy_log_density(0.0, 2, 0.5, 1.0)


class TestLikelihoodAndProfile:
    """Tests for log_likelihood, profile_sigma2 and log_posterior_profile."""

    def test_log_likelihood_closed_form(self, rng):
        """Sum of level log-densities equals an independent Gamma evaluation."""
        for _ in range(10):
            energies = random_energies(rng, J=int(rng.integers(6, 12)), j1=2, j2=5)
            hurst, sigma2 = rng.uniform(0.05, 0.95), rng.uniform(0.2, 3.0)
            expected = 0.0
            for j, y in energies.energies.items():
                rate = energies.b * 2.0 ** ((2 * hurst + 1) * j) / (2 * sigma2)
                expected += stats.gamma.logpdf(y, a=energies.b / 2, scale=1.0 / rate)
            assert log_likelihood(hurst, sigma2, energies) == pytest.approx(expected, rel=1e-9)

    def test_log_likelihood_ignores_storage_order(self, model_energies):
        """Permuting the (j, y_j) pairs does not change the likelihood."""
        reordered = LevelEnergies(
            energies=dict(reversed(list(model_energies.energies.items()))),
            J=model_energies.J, j1=model_energies.j1, j2=model_energies.j2,
        )
        assert log_likelihood(0.4, 1.3, reordered) == log_likelihood(0.4, 1.3, model_energies)

    def test_profile_sigma2_zeroes_stationarity_equation(self, rng):
        """-(bc+2)/(2 sigma^2) + b S0 / (2 sigma^4) vanishes at the profiled sigma^2."""
        for _ in range(20):
            energies = random_energies(rng, J=int(rng.integers(4, 12)), j1=1, j2=3)
            hurst = rng.uniform(0.05, 0.95)
            b, c = energies.b, energies.c
            s0 = math.fsum(y * 2.0 ** ((2 * hurst + 1) * j) for j, y in energies.energies.items())
            sigma2 = profile_sigma2(hurst, energies)
            scale = (b * c + 2) / (2 * sigma2)
            residual = -scale + b * s0 / (2 * sigma2 ** 2)
            assert abs(residual) <= 1e-8 * scale

    def test_profile_equals_term_by_term_evaluation(self, rng):
        """The vectorised profile matches likelihood + log prior - ln sigma^2."""
        prior = BetaPrior(307.2, 716.8)
        for _ in range(10):
            energies = random_energies(rng, J=11, j1=4, j2=6)
            hurst = rng.uniform(0.1, 0.9)
            expected = reference_log_posterior(hurst, energies, prior)
            assert log_posterior_profile(hurst, energies, prior) == pytest.approx(expected, rel=1e-9, abs=1e-7)

    def test_profile_consistent_with_components(self, model_energies, half_prior):
        """Profile = log_likelihood(H, sigma_hat^2) + log_prior_density(H) - ln sigma_hat^2."""
        hurst = 0.37
        sigma2 = profile_sigma2(hurst, model_energies)
        expected = log_likelihood(hurst, sigma2, model_energies) + log_prior_density(hurst, half_prior) - math.log(sigma2)
        assert log_posterior_profile(hurst, model_energies, half_prior) == pytest.approx(expected, rel=1e-9)

    def test_locally_concave_at_half(self, model_energies, half_prior):
        """Expected energies at H=0.5 with prior mean 0.5: negative second difference at 0.5."""
        step = 1e-3
        values = [log_posterior_profile(h, model_energies, half_prior) for h in (0.5 - step, 0.5, 0.5 + step)]
        assert values[0] - 2 * values[1] + values[2] < 0

    def test_log_prior_density_matches_scipy(self):
        """Beta log density agrees with scipy.stats.beta."""
        prior = BetaPrior(85.33, 170.67)
        assert log_prior_density(0.31, prior) == pytest.approx(stats.beta.logpdf(0.31, 85.33, 170.67), rel=1e-12)

    def test_posterior_grid_matches_pointwise(self, model_energies, half_prior):
        """posterior_grid is log_posterior_profile evaluated elementwise."""
        h_values = np.array([0.2, 0.45, 0.8])
        grid = posterior_grid(model_energies, half_prior, h_values)
        for h, value in zip(h_values, grid):
            assert value == pytest.approx(log_posterior_profile(h, model_energies, half_prior), rel=1e-12)

    def test_degenerate_energy(self, half_prior):
        """A zero energy makes the likelihood undefined."""
        energies = LevelEnergies(energies={4: 0.0, 5: 1e-3, 6: 1e-4}, J=11, j1=4, j2=6)
        with pytest.raises(DegenerateInputException):
            log_posterior_profile(0.5, energies, half_prior)


class TestDerivative:
    """Tests for posterior_h_derivative."""

    def test_matches_central_difference(self, rng):
        """Analytic derivative agrees with a step-1e-6 central difference within 1e-4 relative."""
        prior = BetaPrior(512.0, 512.0)
        step = 1e-6
        for _ in range(20):
            energies = random_energies(rng, J=11, j1=4, j2=6)
            hurst = rng.uniform(0.1, 0.9)
            numeric = (
                log_posterior_profile(hurst + step, energies, prior)
                - log_posterior_profile(hurst - step, energies, prior)
            ) / (2 * step)
            analytic = posterior_h_derivative(hurst, energies, prior)
            assert abs(analytic - numeric) <= 1e-4 * max(abs(analytic), 1.0)

    @pytest.mark.parametrize("factor", [1e-3, 7.5, 1e4])
    def test_invariant_to_energy_scaling(self, model_energies, half_prior, factor):
        """Multiplying all y_j by k leaves the derivative unchanged."""
        base = posterior_h_derivative(0.31, model_energies, half_prior)
        scaled = posterior_h_derivative(0.31, model_energies.scaled(factor), half_prior)
        assert scaled == pytest.approx(base, rel=1e-12, abs=1e-9)

    @pytest.mark.parametrize("j1", [2, 5, 9])
    def test_single_level_flat_prior(self, j1):
        """One level under a flat prior: the derivative is -2 ln2 j1 at every H."""
        energies = LevelEnergies(energies={j1: 0.37}, J=11, j1=j1, j2=j1)
        flat = BetaPrior(1.0, 1.0)
        for hurst in (0.05, 0.5, 0.93):
            expected = -2.0 * math.log(2.0) * j1
            assert posterior_h_derivative(hurst, energies, flat) == pytest.approx(expected, rel=1e-12)

    def test_single_level_at_five(self):
        energies = LevelEnergies(energies={5: 2.0}, J=8, j1=5, j2=5)
        assert posterior_h_derivative(0.4, energies, BetaPrior(1.0, 1.0)) == pytest.approx(-6.93147, abs=1e-5)

    @pytest.mark.parametrize("hurst", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_hurst_outside_open_interval(self, model_energies, half_prior, hurst):
        with pytest.raises(InvalidArgumentException, match=r"\(0, 1\)"):
            posterior_h_derivative(hurst, model_energies, half_prior)


class TestGridArgmax:
    """Tests for the dense-grid oracle."""

    def test_matches_posterior_grid_argmax(self, rng):
        """On a 1e-4 grid the oracle picks the same point as posterior_grid."""
        step, h_min = 1e-4, 1e-7
        for _ in range(10):
            energies = random_energies(rng, J=9, j1=2, j2=7)
            prior = random_prior(rng)
            h_values = h_min + step * np.arange(int((1.0 - 2e-7) / step) + 1)
            expected = h_values[int(np.argmax(posterior_grid(energies, prior, h_values)))]
            assert grid_argmax(energies, prior, step=step) == pytest.approx(expected, abs=1e-12)

    def test_chunking_does_not_change_result(self, model_energies, half_prior):
        """Chunk size only changes the batching, not the selected grid point."""
        coarse = grid_argmax(model_energies, half_prior, step=1e-5)
        assert grid_argmax(model_energies, half_prior, step=1e-5, chunk=37) == pytest.approx(coarse, abs=1e-12)

    def test_boundary_maximum(self):
        """Energies falling like 2^(-4j) under a flat prior put the maximum at h_max."""
        energies = LevelEnergies(energies={j: 2.0 ** (-4 * j) for j in range(3, 7)}, J=10, j1=3, j2=6)
        assert grid_argmax(energies, BetaPrior(1.0, 1.0), step=1e-5) > 1.0 - 2e-5

    def test_rejects_bad_bounds(self, model_energies, half_prior):
        with pytest.raises(InvalidArgumentException):
            grid_argmax(model_energies, half_prior, h_min=0.6, h_max=0.4)


class TestMapEstimate:
    """Tests for map_estimate."""

    def test_model_expectations_match_dense_grid(self, model_energies, half_prior):
        """Exact H=0.5 energies, prior (512, 512): solver equals the 1e-7 grid argmax within 1e-6."""
        result = map_estimate(model_energies, half_prior)
        oracle = grid_argmax(model_energies, half_prior)
        assert abs(result.h_hat - oracle) <= 1e-6
        assert result.method == EstimationMethod.BAYES_MAP
        assert result.levels_used == (4, 6)
        assert not result.diagnostics.boundary_hit
        assert result.diagnostics.root_brackets >= 1

    @pytest.mark.slow
    def test_random_instances_match_dense_grid(self, rng):
        """100 random small instances: solver equals the 1e-7 grid argmax within 1e-6."""
        started = time.perf_counter()
        for _ in range(100):
            J = int(rng.integers(4, 9))
            j1 = int(rng.integers(0, J - 2))
            j2 = int(rng.integers(j1 + 1, J))
            energies = random_energies(rng, J, j1, j2)
            prior = random_prior(rng)
            result = map_estimate(energies, prior)
            oracle = grid_argmax(energies, prior)
            assert abs(result.h_hat - oracle) <= 1e-6, (J, j1, j2, prior)
        assert time.perf_counter() - started <= 120.0

    def test_interior_mode_is_stationary(self, model_energies, half_prior):
        """At an interior mode the derivative changes sign within the bisection tolerance."""
        config = SolverConfig()
        h_hat = map_estimate(model_energies, half_prior, config).h_hat
        below = posterior_h_derivative(h_hat - 2 * config.refine_tolerance, model_energies, half_prior)
        above = posterior_h_derivative(h_hat + 2 * config.refine_tolerance, model_energies, half_prior)
        assert below >= 0 >= above

    @pytest.mark.parametrize("factor", [1e-2, 1e3])
    def test_scale_equivariance(self, model_energies, factor):
        """y_j -> k y_j keeps h_hat and multiplies sigma2_hat by k."""
        prior = BetaPrior(307.2, 716.8)
        base = map_estimate(model_energies, prior)
        scaled = map_estimate(model_energies.scaled(factor), prior)
        assert abs(scaled.h_hat - base.h_hat) <= 2e-7
        assert scaled.sigma2_hat == pytest.approx(factor * base.sigma2_hat, rel=1e-6)

    def test_prior_pull_is_monotone(self):
        """Larger ESS at fixed mean moves h_hat monotonically toward the prior mean."""
        energies = expected_energies(0.5, 1.0, 2, 4, J=6)
        estimates = [
            map_estimate(energies, BetaPrior(0.3 * ess, 0.7 * ess)).h_hat
            for ess in (4.0, 16.0, 64.0, 256.0, 1024.0)
        ]
        assert all(later <= earlier for earlier, later in zip(estimates, estimates[1:]))
        assert all(0.3 < h < 0.5 for h in estimates)

    def test_prior_mean_matching_truth(self, model_energies, half_prior):
        """Exact H=0.5 energies with a prior centred on 0.5 give h_hat near 0.5."""
        assert map_estimate(model_energies, half_prior).h_hat == pytest.approx(0.5, abs=0.01)

    def test_boundary_win_is_flagged(self):
        """A spectrum steeper than H=1 allows with a flat prior drives the mode to h_max."""
        energies = LevelEnergies(energies={j: 2.0 ** (-4.0 * j) for j in range(3, 7)}, J=10, j1=3, j2=6)
        config = SolverConfig()
        result = map_estimate(energies, BetaPrior(1.0, 1.0), config)
        assert result.h_hat == config.h_max
        assert result.diagnostics.boundary_hit

    def test_needs_two_levels(self, half_prior):
        """A single level cannot identify H."""
        energies = LevelEnergies(energies={5: 1e-3}, J=11, j1=5, j2=5)
        with pytest.raises(InsufficientLevelsException, match="two levels"):
            map_estimate(energies, half_prior)

    def test_zero_energy_is_degenerate(self, half_prior):
        """y_j = 0 is rejected before solving."""
        energies = LevelEnergies(energies={4: 1e-3, 5: 0.0}, J=11, j1=4, j2=5)
        with pytest.raises(DegenerateInputException):
            map_estimate(energies, half_prior)

    def test_sigma2_is_profiled(self, model_energies, half_prior):
        """sigma2_hat equals profile_sigma2 at the returned H."""
        result = map_estimate(model_energies, half_prior)
        assert result.sigma2_hat == profile_sigma2(result.h_hat, model_energies)

    def test_log_posterior_at_mode_reported(self, model_energies, half_prior):
        """The reported log-posterior is the profile value at h_hat."""
        result = map_estimate(model_energies, half_prior)
        assert result.log_posterior_at_mode == pytest.approx(
            log_posterior_profile(result.h_hat, model_energies, half_prior), rel=1e-12
        )

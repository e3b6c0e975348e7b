"""Logistic fitter and its point-process equivalence machinery."""

import math

import numpy as np
import pytest
import scipy.optimize
from scipy.special import expit

from ppmfit import (
    ModelSpec,
    QuadratureScheme,
    binary_loglik,
    binary_poisson_gap,
    build_equal_weight_scheme,
    build_grid_scheme,
    convergence_experiment,
    equal_weight_invariance,
    fit_logistic,
    generate_quadrature_grid,
    intercept_offset,
    ppm_loglik,
    unit_weight_scheme,
)

from conftest import full_region


@pytest.fixture(scope="module")
def grid_trace(landscape):
    spec = ModelSpec(("grad", "bump"), quadratic=False)
    return convergence_experiment(
        landscape["region"],
        landscape["presences"],
        landscape["stack"],
        spec,
        steps=[4.0, 2.0, 1.0, 0.5],
        mode="grid",
        seed=0,
    )


def scheme_with_slopes(rng, region, n=40, spacing=1.0, stack=None, spec=None):
    from conftest import smooth_stack
    from ppmfit import PointSet

    stack = stack or smooth_stack(region.n_rows, region.n_cols)
    spec = spec or ModelSpec(("grad", "bump"), quadratic=False)
    presences = PointSet(
        np.column_stack(
            [
                rng.uniform(region.x_min, region.x_max - 1e-9, n),
                rng.uniform(region.y_min, region.y_max - 1e-9, n),
            ]
        )
    )
    quad = generate_quadrature_grid(region, spacing)
    return build_equal_weight_scheme(region, presences, quad, stack, spec)


class TestFitLogistic:
    def test_symmetric_toy_intercept_zero(self):
        X = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, -1.0], [1.0, -1.0]])
        labels = np.array([1.0, 1.0, 0.0, 0.0])
        fit = fit_logistic(X, labels)
        # data are separated, so the slope drifts; symmetry pins the intercept
        assert abs(fit.gamma[0]) < 1e-8

    def test_fitted_probabilities_sum_to_n(self):
        rng = np.random.default_rng(15)
        X = np.column_stack([np.ones(200), rng.normal(size=(200, 2))])
        labels = (rng.random(200) < expit(X @ np.array([-0.5, 1.0, -0.7]))).astype(float)
        fit = fit_logistic(X, labels)
        assert fit.converged
        p_hat = expit(X @ fit.gamma)
        assert ((p_hat > 0) & (p_hat < 1)).all()
        assert p_hat.sum() == pytest.approx(labels.sum(), rel=1e-8)

    def test_matches_derivative_free_optimizer(self):
        rng = np.random.default_rng(50)
        X = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
        labels = (rng.random(50) < expit(X @ np.array([0.2, -0.8, 0.5]))).astype(float)
        fit = fit_logistic(X, labels)
        res = scipy.optimize.minimize(
            lambda g: -binary_loglik(g, X, labels),
            x0=np.zeros(3),
            method="Powell",
            options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 20000},
        )
        np.testing.assert_allclose(fit.gamma, res.x, atol=1e-5)

    def test_adjusted_intercept_offset(self):
        rng = np.random.default_rng(16)
        X = np.column_stack([np.ones(120), rng.normal(size=120)])
        labels = np.zeros(120)
        labels[:30] = 1.0
        fit = fit_logistic(X, labels)
        assert fit.gamma0_adjusted == pytest.approx(fit.gamma[0] + math.log(90), rel=1e-12)

    def test_single_class_rejected(self):
        X = np.ones((5, 1))
        with pytest.raises(ValueError, match="both classes"):
            fit_logistic(X, np.ones(5))

    def test_separation_is_flagged_or_stationary(self):
        # one-sided cloud: coefficients drift; must not loop forever
        X = np.column_stack([np.ones(30), np.linspace(0, 1, 30)])
        labels = (X[:, 1] > 0.5).astype(float)
        fit = fit_logistic(X, labels)
        assert fit.iterations <= 100
        if not fit.converged:
            assert "separation" in fit.message or "improve" in fit.message


class TestInterceptOffset:
    def test_single_entry_shape(self):
        v = intercept_offset(math.log(50), 4)
        assert v[0] == math.log(50)
        assert (v[1:] == 0.0).all()


class TestBinaryPoissonGap:
    def test_small_probability_regime(self):
        # all p <= 1e-6 at m = 1e6 with few presences: remainder below 1e-5
        m, n = 10**6, 2
        X = np.ones((m, 1))
        w = np.ones(m)
        z = np.zeros(m)
        z[:n] = 1.0
        scheme = QuadratureScheme(X=X, w=w, z=z, n_presence=n, area=float(m))
        gamma = np.array([math.log(1e-7 * (m - n))])  # p ~ 1e-7
        p = expit(X[0] @ gamma - math.log(m - n))
        assert p <= 1e-6
        assert binary_poisson_gap(scheme, gamma) < 1e-5

    def test_hand_summation_oracle(self):
        rng = np.random.default_rng(33)
        m, n = 10, 4
        X = np.column_stack([np.ones(m), rng.normal(size=m)])
        w = np.ones(m)
        z = np.zeros(m)
        z[:n] = 1.0
        scheme = QuadratureScheme(X=X, w=w, z=z, n_presence=n, area=10.0)
        gamma = np.array([0.3, -0.6])

        l_bin = 0.0
        for i in range(m):
            eta = gamma[0] - math.log(m - n) + X[i, 1] * gamma[1]
            p = 1.0 / (1.0 + math.exp(-eta))
            l_bin += math.log(p) if i < n else math.log(1.0 - p)
        l_ppm = 0.0
        for i in range(m):
            eta = gamma[0] - math.log(m) + X[i, 1] * gamma[1]
            lam = math.exp(eta)
            l_ppm += (eta if i < n else 0.0) - lam
        assert binary_poisson_gap(scheme, gamma) == pytest.approx(abs(l_bin - l_ppm), rel=1e-12)

    def test_gap_halves_when_m_doubles(self):
        rng = np.random.default_rng(71)
        region = full_region(24, 24)
        gamma = None
        gaps, ms = [], []
        for spacing in (1.0, 1.0 / math.sqrt(2.0), 0.5):
            scheme, prepared = scheme_with_slopes(rng, region, n=30, spacing=spacing)
            if gamma is None:
                gamma = np.array([0.4, 0.3, -0.5])
            gaps.append(binary_poisson_gap(scheme, gamma))
            ms.append(scheme.m)
        slope = np.polyfit(np.log(ms), np.log(gaps), 1)[0]
        assert -1.2 < slope < -0.8
        # roughly halves per doubling of m
        assert gaps[2] / gaps[0] == pytest.approx(ms[0] / ms[2], rel=0.2)


class TestEqualWeightInvariance:
    def test_identities_hold(self):
        rng = np.random.default_rng(14)
        region = full_region(16, 16)
        scheme, _ = scheme_with_slopes(rng, region, n=30, spacing=1.0)
        report = equal_weight_invariance(scheme)
        assert report.max_slope_rel_dev < 1e-8
        assert report.max_slope_se_rel_dev < 1e-8
        assert report.intercept_offset_abs_dev < 1e-8
        shift = math.log(scheme.area / scheme.m)
        observed = report.fit_unit.beta[0] - report.fit_weighted.beta[0]
        assert observed == pytest.approx(shift, abs=1e-8)

    def test_duplicate_fit_oracle(self):
        from ppmfit import fit_ppm

        rng = np.random.default_rng(41)
        region = full_region(10, 10)
        scheme, _ = scheme_with_slopes(rng, region, n=30, spacing=1.0)
        report = equal_weight_invariance(scheme)
        again_w = fit_ppm(scheme)
        again_1 = fit_ppm(unit_weight_scheme(scheme))
        np.testing.assert_array_equal(report.fit_weighted.beta, again_w.beta)
        np.testing.assert_array_equal(report.fit_unit.beta, again_1.beta)

    def test_unit_area_scheme_identical_fits(self):
        # m = |A| makes the two weightings literally the same problem
        rng = np.random.default_rng(26)
        region = full_region(12, 12)
        n = 44
        spacing = 12.0 / 10.0  # 100 quad points + 44 presences = 144 = |A|
        scheme, _ = scheme_with_slopes(rng, region, n=n, spacing=spacing)
        assert scheme.m == 144 and scheme.area == 144.0
        report = equal_weight_invariance(scheme)
        np.testing.assert_allclose(report.fit_unit.beta, report.fit_weighted.beta, rtol=1e-12)
        assert report.expected_intercept_shift == 0.0

    def test_unequal_weights_rejected(self):
        rng = np.random.default_rng(17)
        region = full_region(8, 8)
        scheme, _ = scheme_with_slopes(rng, region, n=10, spacing=1.0)
        bad = QuadratureScheme(
            X=scheme.X,
            w=np.linspace(0.5, 1.5, scheme.m),
            z=scheme.z,
            n_presence=scheme.n_presence,
            area=scheme.area,
        )
        with pytest.raises(ValueError, match="equal"):
            equal_weight_invariance(bad)


class TestConvergenceExperiment:
    def test_final_slopes_within_one_percent(self, grid_trace):
        last = grid_trace.rows[-1]
        for name in grid_trace.coef_names[1:]:
            rel = abs(last.logit_est[name] - last.ppm_est[name]) / abs(last.ppm_est[name])
            assert rel < 0.01

    def test_logistic_intercept_drifts_like_log_m(self, landscape):
        # the -log(m) drift needs m >> n, so use a sparse pattern
        from ppmfit import IntensitySurface, simulate_poisson

        region, stack = landscape["region"], landscape["stack"]
        sparse_surface = IntensitySurface(
            region=region, values=landscape["surface"].values / 10.0
        )
        presences = simulate_poisson(sparse_surface, region, seed=8)
        spec = ModelSpec(("grad", "bump"), quadratic=False)
        trace = convergence_experiment(
            region, presences, stack, spec, steps=[2.0, 1.0, 0.5, 0.25], mode="grid"
        )
        icpts = [row.logit_est["intercept"] for row in trace.rows]
        ms = [row.m for row in trace.rows]
        for t in range(1, len(icpts) - 1):
            expected = -math.log(ms[t + 1] / ms[t])
            assert (icpts[t + 1] - icpts[t]) == pytest.approx(expected, rel=0.10)

    def test_binary_loglik_diverges_ppm_settles(self, grid_trace):
        l_bin = [row.l_bin for row in grid_trace.rows]
        l_ppm = [row.l_ppm for row in grid_trace.rows]
        assert all(b2 < b1 for b1, b2 in zip(l_bin, l_bin[1:]))
        assert abs(l_ppm[-1] - l_ppm[-2]) < abs(l_ppm[-2] - l_ppm[-3]) + 1.0

    def test_random_mode_inflates_ses(self, landscape, grid_trace):
        spec = ModelSpec(("grad", "bump"), quadratic=False)
        trace = convergence_experiment(
            landscape["region"],
            landscape["presences"],
            landscape["stack"],
            spec,
            steps=[1000],
            mode="random",
            seed=5,
        )
        random_row = trace.rows[0]
        converged_row = grid_trace.rows[-1]
        for name in trace.coef_names[1:]:
            assert random_row.logit_se[name] > converged_row.logit_se[name]

    def test_csv_deterministic(self, landscape, tmp_path):
        spec = ModelSpec(("grad", "bump"), quadratic=False)
        args = (landscape["region"], landscape["presences"], landscape["stack"], spec)
        a = convergence_experiment(*args, steps=[500, 1000], mode="random", seed=9)
        b = convergence_experiment(*args, steps=[500, 1000], mode="random", seed=9)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        a.to_csv(pa)
        b.to_csv(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_bad_schedules_rejected(self, landscape):
        spec = ModelSpec(("grad", "bump"), quadratic=False)
        args = (landscape["region"], landscape["presences"], landscape["stack"], spec)
        with pytest.raises(ValueError, match="decreasing"):
            convergence_experiment(*args, steps=[1.0, 2.0], mode="grid")
        with pytest.raises(ValueError, match="increasing"):
            convergence_experiment(*args, steps=[100, 50], mode="random")


class TestSchemeLogLikConsistency:
    def test_gap_uses_matched_parameters(self):
        # the two objective values agree with direct library evaluation
        rng = np.random.default_rng(61)
        region = full_region(12, 12)
        scheme, _ = scheme_with_slopes(rng, region, n=20, spacing=1.0)
        gamma = np.array([0.1, 0.2, -0.3])
        l_bin = binary_loglik(
            gamma - intercept_offset(math.log(scheme.m - scheme.n_presence), 3),
            scheme.X,
            scheme.labels,
        )
        l_unit = ppm_loglik(
            gamma - intercept_offset(math.log(scheme.m), 3), unit_weight_scheme(scheme)
        )
        assert binary_poisson_gap(scheme, gamma) == pytest.approx(abs(l_bin - l_unit), rel=1e-10)

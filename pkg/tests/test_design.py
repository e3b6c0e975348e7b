"""Design construction and the standardized/raw coefficient map."""

import numpy as np
import pytest

from ppmfit import (
    ModelSpec,
    build_design,
    destandardize_coefficients,
    fit_standardization,
)


class TestModelSpec:
    def test_quadratic_term_count(self):
        for k in range(1, 7):
            spec = ModelSpec(tuple(f"v{i}" for i in range(k)), quadratic=True)
            assert spec.n_terms == 1 + k + k * (k + 1) // 2

    def test_four_covariates_give_fifteen_terms(self):
        spec = ModelSpec(("a", "b", "c", "d"), quadratic=True)
        assert spec.n_terms == 15
        assert len(spec.coef_names) == 15

    def test_coef_name_order(self):
        spec = ModelSpec(("a", "b"), quadratic=True)
        assert spec.coef_names == ["intercept", "a", "b", "a^2", "b^2", "a*b"]

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            ModelSpec(("a", "a"))


class TestBuildDesign:
    def test_single_covariate_expansion(self):
        spec = ModelSpec(("x",), quadratic=True, standardize=False)
        X = build_design(spec, [[2.0]])
        np.testing.assert_array_equal(X, [[1.0, 2.0, 4.0]])

    def test_two_covariate_hand_expansion(self):
        spec = ModelSpec(("a", "b"), quadratic=True, standardize=False)
        raw = np.array([[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]])
        X = build_design(spec, raw)
        expected = np.array(
            [
                [1, 1.0, 2.0, 1.0, 4.0, 2.0],
                [1, 0.5, -1.0, 0.25, 1.0, -0.5],
                [1, 3.0, 0.0, 9.0, 0.0, 0.0],
            ]
        )
        np.testing.assert_array_equal(X, expected)

    def test_full_quadratic_column_count(self):
        rng = np.random.default_rng(0)
        raw = rng.normal(size=(20, 4))
        spec = fit_standardization(ModelSpec(("a", "b", "c", "d"), quadratic=True), raw)
        assert build_design(spec, raw).shape == (20, 15)

    def test_standardize_requires_prepared_spec(self):
        spec = ModelSpec(("x",))
        with pytest.raises(ValueError, match="fit_standardization"):
            build_design(spec, [[1.0], [2.0]])

    def test_zero_variance_covariate_errors(self):
        spec = ModelSpec(("x", "flat"))
        raw = np.column_stack([np.arange(5.0), np.full(5, 3.0)])
        with pytest.raises(ValueError, match="zero-variance.*flat"):
            fit_standardization(spec, raw)

    def test_intercept_only(self):
        spec = ModelSpec((), standardize=False)
        np.testing.assert_array_equal(build_design(spec, np.empty((3, 0))), np.ones((3, 1)))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        raw = rng.normal(size=(50, 3))
        spec = fit_standardization(ModelSpec(("a", "b", "c"), quadratic=True), raw)
        assert build_design(spec, raw).tobytes() == build_design(spec, raw).tobytes()


class TestDestandardize:
    def test_identity_when_off(self):
        spec = ModelSpec(("x",), quadratic=True, standardize=False)
        beta = np.array([1.0, -2.0, 0.5])
        cov = np.eye(3) * 0.3
        b, c = destandardize_coefficients(spec, beta, cov)
        np.testing.assert_array_equal(b, beta)
        np.testing.assert_array_equal(c, cov)

    def test_intercept_only_centering_noop(self):
        spec = ModelSpec((), standardize=False)
        b, _ = destandardize_coefficients(spec, np.array([2.5]))
        np.testing.assert_array_equal(b, [2.5])

    def test_matches_refit_in_raw_units(self):
        # same weighted-Poisson fit in standardized and raw parameterizations
        from ppmfit import QuadratureScheme, fit_ppm

        rng = np.random.default_rng(9)
        raw = np.column_stack(
            [rng.normal(1.0, 2.0, size=60), rng.normal(2.0, 0.5, size=60)]
        )
        spec_std = fit_standardization(ModelSpec(("a", "b"), quadratic=True), raw)
        spec_raw = ModelSpec(("a", "b"), quadratic=True, standardize=False)

        w = np.full(60, 0.5)
        n_presence = 25
        z = np.zeros(60)
        z[:n_presence] = 1.0 / w[:n_presence]

        def fit_with(spec):
            X = build_design(spec, raw)
            scheme = QuadratureScheme(X=X, w=w, z=z, n_presence=n_presence, area=30.0)
            return fit_ppm(scheme)

        fit_std = fit_with(spec_std)
        fit_raw = fit_with(spec_raw)
        beta_back, cov_back = destandardize_coefficients(spec_std, fit_std.beta, fit_std.cov)
        np.testing.assert_allclose(beta_back, fit_raw.beta, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(
            np.sqrt(np.diag(cov_back)), fit_raw.se, rtol=1e-6, atol=1e-9
        )

    def test_polynomial_value_invariance(self):
        rng = np.random.default_rng(4)
        raw = rng.normal(3.0, 1.7, size=(40, 3))
        spec = fit_standardization(ModelSpec(("a", "b", "c"), quadratic=True), raw)
        spec_raw = ModelSpec(("a", "b", "c"), quadratic=True, standardize=False)
        for _ in range(5):
            beta = rng.normal(size=spec.n_terms)
            beta_raw, _ = destandardize_coefficients(spec, beta)
            eta_std = build_design(spec, raw) @ beta
            eta_raw = build_design(spec_raw, raw) @ beta_raw
            np.testing.assert_allclose(eta_raw, eta_std, rtol=1e-10, atol=1e-10)

    def test_roundtrip_via_inverse(self):
        rng = np.random.default_rng(6)
        raw = rng.normal(0.0, 2.0, size=(30, 2))
        spec = fit_standardization(ModelSpec(("a", "b"), quadratic=True), raw)
        from ppmfit.design import _standardized_in_raw_terms

        M = _standardized_in_raw_terms(spec)
        beta = rng.normal(size=spec.n_terms)
        beta_raw, _ = destandardize_coefficients(spec, beta)
        np.testing.assert_allclose(np.linalg.solve(M.T, beta_raw), beta, rtol=1e-10)

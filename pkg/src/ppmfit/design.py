"""Model terms and design matrices for log-intensity models.

A model is an intercept plus linear terms in the named covariates and,
when ``quadratic`` is set, all squares and pairwise products. Covariates are
standardized by default before the polynomial terms are formed: raw-unit
quadratic fits can be catastrophically ill-conditioned, while the
standardized fit is stable and maps back to raw units by an exact affine
reparameterization (:func:`destandardize_coefficients`).
"""

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of the linear predictor.

    Column order is fixed: intercept, linear terms in ``variables`` order,
    squares in the same order, then cross products in lexicographic index
    order. A full quadratic over k covariates has ``1 + k + k(k+1)/2``
    columns.

    ``mu``/``sigma`` hold the centering and scaling constants actually used
    to build a design; they are fixed from data once by
    :func:`fit_standardization` and must be reused for prediction.
    """

    variables: tuple
    quadratic: bool = False
    standardize: bool = True
    mu: tuple = None
    sigma: tuple = None

    def __post_init__(self):
        variables = tuple(self.variables)
        object.__setattr__(self, "variables", variables)
        if len(set(variables)) != len(variables):
            raise ValueError("duplicate covariate names in model spec")
        for attr in ("mu", "sigma"):
            val = getattr(self, attr)
            if val is not None:
                val = tuple(float(v) for v in val)
                if len(val) != len(variables):
                    raise ValueError(f"{attr} must have one entry per variable")
                object.__setattr__(self, attr, val)

    @property
    def k(self):
        return len(self.variables)

    @property
    def n_terms(self):
        k = self.k
        return 1 + k + (k * (k + 1)) // 2 if self.quadratic else 1 + k

    @property
    def coef_names(self):
        names = ["intercept"] + list(self.variables)
        if self.quadratic:
            names += [f"{v}^2" for v in self.variables]
            for a in range(self.k):
                for b in range(a + 1, self.k):
                    names.append(f"{self.variables[a]}*{self.variables[b]}")
        return names

    @property
    def is_prepared(self):
        return (not self.standardize) or (self.mu is not None and self.sigma is not None)


def fit_standardization(spec, raw):
    """Fix the per-covariate centering/scaling constants from data rows."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[1] != spec.k:
        raise ValueError(f"raw matrix must have {spec.k} columns")
    if not spec.standardize:
        return spec
    mu = raw.mean(axis=0)
    sigma = raw.std(axis=0)
    degenerate = [spec.variables[j] for j in np.nonzero(sigma == 0.0)[0]]
    if degenerate:
        raise ValueError(f"zero-variance covariate(s) {degenerate}: cannot standardize")
    return replace(spec, mu=tuple(mu), sigma=tuple(sigma))


def build_design(spec, raw):
    """Expand raw covariate rows into the (n, p) design matrix.

    Column 1 is the intercept; squares and cross products are formed from
    the (standardized, if enabled) linear columns so the standardized and
    raw parameterizations differ by an exact affine coefficient map.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[1] != spec.k:
        raise ValueError(f"raw matrix must have {spec.k} columns")
    if not np.isfinite(raw).all():
        raise ValueError("raw covariate values must be finite")
    if spec.standardize:
        if not spec.is_prepared:
            raise ValueError("spec has standardize=True but no mu/sigma; call fit_standardization first")
        lin = (raw - np.asarray(spec.mu)) / np.asarray(spec.sigma)
    else:
        lin = raw

    n = raw.shape[0]
    cols = [np.ones(n)]
    cols.extend(lin[:, j] for j in range(spec.k))
    if spec.quadratic:
        cols.extend(lin[:, j] * lin[:, j] for j in range(spec.k))
        for a in range(spec.k):
            for b in range(a + 1, spec.k):
                cols.append(lin[:, a] * lin[:, b])
    return np.column_stack(cols) if cols else np.ones((n, 1))


def _standardized_in_raw_terms(spec):
    """Matrix M with t_std(x) = M @ t_raw(x) for the spec's term vector."""
    k = spec.k
    p = spec.n_terms
    mu = np.asarray(spec.mu, dtype=float)
    sigma = np.asarray(spec.sigma, dtype=float)
    i_int = 0

    def i_lin(j):
        return 1 + j

    def i_sq(j):
        return 1 + k + j

    def i_cross(a, b):
        # crosses follow the squares, lexicographic (a, b) with a < b
        idx = 1 + 2 * k
        for aa in range(k):
            for bb in range(aa + 1, k):
                if (aa, bb) == (a, b):
                    return idx
                idx += 1
        raise KeyError((a, b))

    M = np.zeros((p, p))
    M[i_int, i_int] = 1.0
    for j in range(k):
        r = i_lin(j)
        M[r, i_lin(j)] = 1.0 / sigma[j]
        M[r, i_int] = -mu[j] / sigma[j]
    if spec.quadratic:
        for j in range(k):
            r = i_sq(j)
            s2 = sigma[j] ** 2
            M[r, i_sq(j)] = 1.0 / s2
            M[r, i_lin(j)] = -2.0 * mu[j] / s2
            M[r, i_int] = mu[j] ** 2 / s2
        for a in range(k):
            for b in range(a + 1, k):
                r = i_cross(a, b)
                ss = sigma[a] * sigma[b]
                M[r, i_cross(a, b)] = 1.0 / ss
                M[r, i_lin(b)] = -mu[a] / ss
                M[r, i_lin(a)] = -mu[b] / ss
                M[r, i_int] = mu[a] * mu[b] / ss
    return M


def destandardize_coefficients(spec, beta_std, cov_std=None):
    """Map standardized-fit coefficients back to raw covariate units.

    The linear predictor is unchanged: for every x,
    ``t_std(x) @ beta_std == t_raw(x) @ beta_raw``. The covariance matrix
    transforms as ``M.T @ cov_std @ M`` for the same affine map M. With
    standardization off this is the identity.
    """
    beta_std = np.asarray(beta_std, dtype=float)
    if beta_std.shape != (spec.n_terms,):
        raise ValueError(f"expected {spec.n_terms} coefficients, got {beta_std.shape}")
    if not spec.standardize:
        if cov_std is None:
            return beta_std.copy(), None
        return beta_std.copy(), np.asarray(cov_std, dtype=float).copy()
    if not spec.is_prepared:
        raise ValueError("spec has no mu/sigma; cannot destandardize")
    M = _standardized_in_raw_terms(spec)
    beta_raw = M.T @ beta_std
    if cov_std is None:
        return beta_raw, None
    cov_raw = M.T @ np.asarray(cov_std, dtype=float) @ M
    return beta_raw, cov_raw

"""Shared synthetic landscapes and helpers for the test suite."""

import numpy as np
import pytest

from ppmfit import (
    CovariateStack,
    IntensitySurface,
    ModelSpec,
    PointSet,
    RasterGrid,
    Region,
    build_design,
    simulate_poisson,
)

NODATA = -9999.0


def make_raster(values, x_ll=0.0, y_ll=0.0, cell_size=1.0, nodata=NODATA):
    return RasterGrid(x_ll=x_ll, y_ll=y_ll, cell_size=cell_size, nodata=nodata, values=values)


def full_region(n_rows, n_cols, cell_size=1.0, x_min=0.0, y_min=0.0):
    return Region(x_min, y_min, cell_size, np.ones((n_rows, n_cols), dtype=bool))


def smooth_stack(n_rows=24, n_cols=24, cell_size=1.0):
    """Two smooth covariates on a full rectangle: a tilted plane and a bump."""
    jj, ii = np.meshgrid(np.arange(n_cols), np.arange(n_rows))
    u = (jj + 0.5) / n_cols
    v = (ii + 0.5) / n_rows
    grad = 4.0 * u + 1.0 * v
    bump = np.exp(-((u - 0.4) ** 2 + (v - 0.6) ** 2) / 0.08)
    grids = (
        make_raster(grad, cell_size=cell_size),
        make_raster(bump, cell_size=cell_size),
    )
    return CovariateStack(("grad", "bump"), grids)


def intensity_from_truth(region, stack, spec_raw, beta_raw, target_n=None):
    """Per-cell intensity exp(t_raw(x) beta) with optional total-mass scaling.

    ``spec_raw`` must have standardize=False so the coefficients are in raw
    covariate units. When ``target_n`` is given the intercept is adjusted so
    the expected point count over the region equals it exactly.
    """
    raw = stack.subset(spec_raw.variables).cell_matrix()
    X = build_design(spec_raw, raw)
    lam = np.exp(X @ np.asarray(beta_raw, dtype=float)).reshape(region.mask.shape)
    beta = np.asarray(beta_raw, dtype=float).copy()
    if target_n is not None:
        mass = float(lam[region.mask].sum() * region.cell_size**2)
        beta[0] += np.log(target_n / mass)
        lam = lam * (target_n / mass)
    return IntensitySurface(region=region, values=np.where(region.mask, lam, 0.0)), beta


@pytest.fixture(scope="session")
def landscape():
    """Region + 2-covariate stack + presences from a known log-linear truth."""
    region = full_region(24, 24)
    stack = smooth_stack(24, 24)
    spec_raw = ModelSpec(("grad", "bump"), quadratic=False, standardize=False)
    surface, beta_true = intensity_from_truth(
        region, stack, spec_raw, beta_raw=(0.0, 0.55, -0.9), target_n=420
    )
    presences = simulate_poisson(surface, region, seed=42)
    return {
        "region": region,
        "stack": stack,
        "spec_raw": spec_raw,
        "surface": surface,
        "beta_true": beta_true,
        "presences": presences,
    }

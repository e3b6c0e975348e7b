"""Assembly of weighted-Poisson quadrature schemes.

A scheme holds the fitting dataset: presence rows first, then quadrature
rows, with weights w and the pseudo-response z (1/w at presences, 0 at
quadrature points). The point-process log-likelihood evaluated on a scheme
is a weighted Poisson log-likelihood, so one dataset serves both the
point-process fitter and the presence/background logistic fitter.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .design import build_design, fit_standardization
from .rasters import sample_covariates
from .region import PointSet, compute_tile_weights, generate_quadrature_grid, region_area


@dataclass(frozen=True)
class QuadratureScheme:
    """Design matrix, weights and pseudo-response for one fit.

    Rows 0..n_presence-1 are presences; the rest are quadrature points.
    Invariants: w > 0, z = 1/w at presences and 0 elsewhere.
    """

    X: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    n_presence: int
    area: float

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        w = np.asarray(self.w, dtype=float)
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "z", z)
        m = X.shape[0]
        if w.shape != (m,) or z.shape != (m,):
            raise ValueError("X, w, z must have matching row counts")
        if self.n_presence < 1 or m - self.n_presence < 1:
            raise ValueError("scheme needs at least one presence and one quadrature point")
        if not (w > 0).all():
            raise ValueError("weights must be strictly positive")

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def n_quad(self):
        return self.m - self.n_presence

    @property
    def labels(self):
        """Presence indicator per row (the logistic response)."""
        lab = np.zeros(self.m)
        lab[: self.n_presence] = 1.0
        return lab


def _pseudo_response(w, n_presence):
    z = np.zeros(len(w))
    z[:n_presence] = 1.0 / w[:n_presence]
    return z


def _design_for(region, presences, quad, stack, spec):
    coords = np.concatenate([presences.coords, quad.coords], axis=0)
    raw = sample_covariates(stack.subset(spec.variables), coords) if spec.k else np.empty((len(coords), 0))
    prepared = fit_standardization(spec, raw)
    return build_design(prepared, raw), prepared


def build_grid_scheme(region, presences, stack, spec, spacing):
    """Scheme with grid quadrature points and tile weights of pitch ``spacing``.

    The tile size equals the grid spacing, so every tile holds exactly one
    quadrature point plus any presences that fall in it.

    Returns ``(scheme, prepared_spec)`` where the prepared spec carries the
    standardization constants used for the design.
    """
    quad = generate_quadrature_grid(region, spacing)
    w = compute_tile_weights(region, presences, quad, spacing)
    X, prepared = _design_for(region, presences, quad, stack, spec)
    scheme = QuadratureScheme(
        X=X,
        w=w,
        z=_pseudo_response(w, presences.n),
        n_presence=presences.n,
        area=region_area(region),
    )
    return scheme, prepared


def build_equal_weight_scheme(region, presences, quad, stack, spec):
    """Scheme where every point gets the same weight |A|/m."""
    area = region_area(region)
    m = presences.n + quad.n
    w = np.full(m, area / m)
    X, prepared = _design_for(region, presences, quad, stack, spec)
    scheme = QuadratureScheme(
        X=X, w=w, z=_pseudo_response(w, presences.n), n_presence=presences.n, area=area
    )
    return scheme, prepared


def sample_uniform_in_region(region, n, rng):
    """n points uniform over the region mask: uniform cell, uniform offset."""
    rows, cols = np.nonzero(region.mask)
    pick = rng.integers(0, len(rows), size=n)
    offset = rng.random((n, 2))
    x = region.x_min + (cols[pick] + offset[:, 0]) * region.cell_size
    y = region.y_min + (rows[pick] + offset[:, 1]) * region.cell_size
    return PointSet(np.column_stack([x, y]))


def build_random_scheme(region, presences, stack, spec, n_quad, rng):
    """Scheme with uniformly random quadrature points and weights |A|/m.

    Equal weights make the weighted log-likelihood a crude Monte-Carlo
    estimate of the intensity integral.
    """
    quad = sample_uniform_in_region(region, n_quad, rng)
    return build_equal_weight_scheme(region, presences, quad, stack, spec)


def unit_weight_scheme(scheme):
    """The same rows with all weights set to one (z becomes the indicator)."""
    w = np.ones(scheme.m)
    return replace(scheme, w=w, z=_pseudo_response(w, scheme.n_presence))

"""Quadrature refinement to convergence and all-subsets AIC selection.

Refinement halves the spacing each step (a 4-fold increase in quadrature
points) until the maximized log-likelihood moves by less than ``tol``
(default 1.0). Subset selection enumerates every variable subset on one
shared quadrature scheme per spacing, so AIC values compare fits of the
same data.
"""

import csv
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .design import ModelSpec, build_design, fit_standardization
from .ppm import fit_ppm
from .quadrature import (
    QuadratureScheme,
    _pseudo_response,
    build_grid_scheme,
)
from .rasters import sample_covariates
from .region import compute_tile_weights, generate_quadrature_grid, region_area


@dataclass
class RefinementStep:
    spacing: float
    m: int
    log_lik: float
    beta: np.ndarray
    se: np.ndarray


@dataclass
class RefinementTrace:
    """Per-spacing fit summaries; spacings decrease, point counts grow."""

    coef_names: list
    steps: list = field(default_factory=list)
    converged_spacing: float = None

    def log_liks(self):
        return np.array([s.log_lik for s in self.steps])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["spacing", "m", "log_lik"]
            for name in self.coef_names:
                header += [name, f"se_{name}"]
            writer.writerow(header)
            for s in self.steps:
                rec = [repr(float(s.spacing)), str(s.m), repr(float(s.log_lik))]
                for b, se in zip(s.beta, s.se):
                    rec += [repr(float(b)), repr(float(se))]
                writer.writerow(rec)


class RefinementError(RuntimeError):
    """An inner fit failed during refinement; carries the partial trace."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def refine_until_converged(region, presences, stack, spec, initial_spacing, tol=1.0, max_steps=8):
    """Refine the quadrature grid until the log-likelihood settles.

    Returns ``(fit, prepared_spec, trace)`` for the finest grid reached.
    Estimates in the trace are in raw covariate units. An inner fit failure
    aborts with :class:`RefinementError` carrying the trace so far.
    """
    from .design import destandardize_coefficients

    if not tol > 0:
        raise ValueError("tol must be > 0")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")

    trace = RefinementTrace(coef_names=spec.coef_names)
    spacing = float(initial_spacing)
    fit = prepared = None
    prev_ll = None
    for _ in range(max_steps):
        try:
            scheme, prepared = build_grid_scheme(region, presences, stack, spec, spacing)
            fit = fit_ppm(scheme)
        except Exception as exc:
            raise RefinementError(f"fit failed at spacing {spacing}: {exc}", trace) from exc
        if not fit.converged:
            raise RefinementError(f"fit did not converge at spacing {spacing}", trace)
        beta_raw, cov_raw = destandardize_coefficients(prepared, fit.beta, fit.cov)
        trace.steps.append(
            RefinementStep(
                spacing=spacing,
                m=scheme.m,
                log_lik=fit.log_lik,
                beta=beta_raw,
                se=np.sqrt(np.diag(cov_raw)),
            )
        )
        if prev_ll is not None and abs(fit.log_lik - prev_ll) < tol:
            trace.converged_spacing = spacing
            break
        prev_ll = fit.log_lik
        spacing /= 2.0
    return fit, prepared, trace


class SchemeBuilder:
    """One quadrature layout shared by many model specs.

    Quadrature points, tile weights and the raw covariate matrix are built
    once for a fixed spacing; each spec reuses them with its own columns,
    so competing fits see identical data.
    """

    def __init__(self, region, presences, stack, spacing):
        self.region = region
        self.presences = presences
        self.stack = stack
        self.spacing = float(spacing)
        self.quad = generate_quadrature_grid(region, spacing)
        self.w = compute_tile_weights(region, presences, self.quad, spacing)
        self.z = _pseudo_response(self.w, presences.n)
        self.area = region_area(region)
        coords = np.concatenate([presences.coords, self.quad.coords], axis=0)
        self._raw = sample_covariates(stack, coords)
        self._col = {name: j for j, name in enumerate(stack.names)}

    @property
    def m(self):
        return self.presences.n + self.quad.n

    def build(self, spec):
        """(scheme, prepared_spec) for one model on the shared layout."""
        raw = (
            self._raw[:, [self._col[v] for v in spec.variables]]
            if spec.k
            else np.empty((self.m, 0))
        )
        prepared = fit_standardization(spec, raw)
        X = build_design(prepared, raw)
        scheme = QuadratureScheme(
            X=X, w=self.w, z=self.z, n_presence=self.presences.n, area=self.area
        )
        return scheme, prepared


@dataclass
class SelectionRow:
    variables: tuple
    p: int
    log_lik: float
    aic: float
    delta_aic: float
    converged: bool


@dataclass
class SelectionTable:
    """2^k candidate models ranked by AIC (non-converged rows last)."""

    rows: list

    @property
    def best(self):
        return self.rows[0]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variables", "p", "log_lik", "aic", "delta_aic", "converged"])
            for row in self.rows:
                writer.writerow(
                    [
                        "+".join(row.variables) if row.variables else "(intercept)",
                        str(row.p),
                        repr(float(row.log_lik)),
                        repr(float(row.aic)),
                        repr(float(row.delta_aic)),
                        str(row.converged).lower(),
                    ]
                )


def all_subsets_aic(builder, variables, family="quadratic", standardize=True):
    """Fit every subset of ``variables`` and rank the models by AIC.

    The empty subset (intercept only) is included, so k variables give 2^k
    rows. With ``family="quadratic"`` each subset gets the full quadratic
    model over its members. Ties are broken by fewer terms, then by subset
    order, so the table is bit-for-bit reproducible.
    """
    variables = list(variables)
    if family not in ("linear", "quadratic"):
        raise ValueError(f"unknown family {family!r}")
    if len(variables) > 10:
        raise ValueError("all-subsets enumeration is limited to 10 variables")

    rows = []
    for size in range(len(variables) + 1):
        for subset in combinations(variables, size):
            spec = ModelSpec(
                variables=subset,
                quadratic=(family == "quadratic" and len(subset) > 0),
                standardize=standardize and len(subset) > 0,
            )
            scheme, _ = builder.build(spec)
            fit = fit_ppm(scheme)
            rows.append(
                SelectionRow(
                    variables=subset,
                    p=scheme.X.shape[1],
                    log_lik=fit.log_lik,
                    aic=fit.aic,
                    delta_aic=0.0,
                    converged=fit.converged,
                )
            )

    subset_order = {row.variables: i for i, row in enumerate(rows)}
    rows.sort(key=lambda r: (not r.converged, r.aic, r.p, subset_order[r.variables]))
    best_aic = rows[0].aic
    for row in rows:
        row.delta_aic = row.aic - best_aic
    return SelectionTable(rows=rows)

"""Weighted Poisson point-process likelihood and its Newton/IRLS fitter.

The log intensity is linear in the design columns. On a quadrature scheme
with weights w and pseudo-response z, the objective is

    sum_i w_i * (z_i * log(lambda_i) - lambda_i),   log(lambda_i) = (X beta)_i

whose gradient is X' (w * (z - lambda)) and whose Fisher information is
X' diag(w * lambda) X. For the Poisson log link the expected and observed
information coincide, so the Newton iteration here is IRLS.

The constant log(n!) of the exact point-process likelihood does not depend
on beta and is omitted throughout; reported log-likelihoods and AICs are
comparable within a dataset.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

_ETA_MAX = 700.0  # exp overflows float64 just above this
_MAX_ITER = 100
_MAX_HALVINGS = 60
_SCORE_RTOL = 1e-8
_LOGLIK_RTOL = 1e-10


class PredictorOverflowError(ArithmeticError):
    """The linear predictor would overflow exp(); signals a divergent step."""

    def __init__(self, eta_max, row):
        self.eta_max = float(eta_max)
        self.row = int(row)
        super().__init__(
            f"linear predictor {eta_max:.3g} at row {row} overflows exp(); "
            "step too large"
        )


class RankDeficientError(ValueError):
    """Design matrix is not of full column rank."""

    def __init__(self, dependent_columns):
        self.dependent_columns = list(dependent_columns)
        super().__init__(
            f"design matrix is rank deficient; dependent column index(es) {self.dependent_columns}"
        )


@dataclass
class FitResult:
    """Converged (or capped) maximum-likelihood estimate on one scheme."""

    beta: np.ndarray
    fisher: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)
    se: np.ndarray
    log_lik: float
    aic: float
    iterations: int
    converged: bool
    max_abs_score: float
    loglik_trace: list = field(repr=False, default_factory=list)
    message: str = ""

    @property
    def p(self):
        return len(self.beta)


def _linear_predictor(beta, scheme):
    eta = scheme.X @ beta
    if eta.size and eta.max() > _ETA_MAX:
        row = int(np.argmax(eta))
        raise PredictorOverflowError(eta[row], row)
    return eta


def ppm_loglik(beta, scheme):
    """Weighted Poisson log-likelihood at ``beta``.

    Rows with z = 0 contribute only their -w*lambda mass term.
    """
    eta = _linear_predictor(np.asarray(beta, dtype=float), scheme)
    lam = np.exp(eta)
    return float(np.dot(scheme.w, scheme.z * eta - lam))


def ppm_score(beta, scheme):
    """Gradient of :func:`ppm_loglik`: X' (w * (z - lambda))."""
    eta = _linear_predictor(np.asarray(beta, dtype=float), scheme)
    lam = np.exp(eta)
    return scheme.X.T @ (scheme.w * (scheme.z - lam))


def ppm_fisher(beta, scheme):
    """Fisher information X' diag(w * lambda) X, exactly symmetric."""
    eta = _linear_predictor(np.asarray(beta, dtype=float), scheme)
    lam = np.exp(eta)
    info = (scheme.X * (scheme.w * lam)[:, None]).T @ scheme.X
    return (info + info.T) / 2.0


def check_full_rank(X, rtol=1e-10):
    """Raise :class:`RankDeficientError` naming dependent columns."""
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        raise RankDeficientError(list(range(X.shape[1])))
    rank = int(np.count_nonzero(diag > rtol * diag[0]))
    if rank < X.shape[1]:
        raise RankDeficientError(sorted(piv[rank:].tolist()))


def _default_init(scheme):
    beta = np.zeros(scheme.X.shape[1])
    col0 = scheme.X[:, 0]
    if np.all(col0 == 1.0):
        beta[0] = np.log(scheme.n_presence / scheme.w.sum())
    return beta


def fit_ppm(scheme, init=None):
    """Fit the point-process model by Newton iteration with step halving.

    Convergence requires both a small score (relative to the total presence
    mass sum(w*z)) and a stalled log-likelihood. A step is accepted when it
    does not reduce the log-likelihood beyond float evaluation slack, so
    accepted iterations are non-decreasing up to roundoff. Non-convergence
    within the iteration cap returns a result flagged ``converged=False``
    rather than raising.
    """
    check_full_rank(scheme.X)
    beta = _default_init(scheme) if init is None else np.asarray(init, dtype=float).copy()

    score_scale = 1.0 + float(np.dot(scheme.w, scheme.z))
    log_lik = ppm_loglik(beta, scheme)
    trace = [log_lik]
    converged = False
    message = ""
    iterations = 0

    for iterations in range(1, _MAX_ITER + 1):
        score = ppm_score(beta, scheme)
        fisher = ppm_fisher(beta, scheme)
        try:
            delta = np.linalg.solve(fisher, score)
        except np.linalg.LinAlgError:
            message = "singular Fisher information; stopping"
            break

        slack = 1e-13 * (1.0 + abs(log_lik))
        step = 1.0
        new_beta, new_log_lik = beta, log_lik
        improved = False
        for _ in range(_MAX_HALVINGS):
            cand = beta + step * delta
            try:
                cand_ll = ppm_loglik(cand, scheme)
            except PredictorOverflowError:
                cand_ll = -np.inf
            if cand_ll >= log_lik - slack:
                new_beta, new_log_lik = cand, cand_ll
                improved = True
                break
            step /= 2.0
        if not improved:
            # no ascent step found: at numerical stationarity
            new_beta, new_log_lik = beta, log_lik

        delta_ll = new_log_lik - log_lik
        beta, log_lik = new_beta, new_log_lik
        trace.append(log_lik)

        score = ppm_score(beta, scheme)
        max_abs_score = float(np.abs(score).max())
        if max_abs_score < _SCORE_RTOL * score_scale and abs(delta_ll) < _LOGLIK_RTOL * (
            1.0 + abs(log_lik)
        ):
            converged = True
            break
        if not improved:
            message = "step halving could not improve the log-likelihood"
            break

    fisher = ppm_fisher(beta, scheme)
    cov = np.linalg.inv(fisher)
    se = np.sqrt(np.diag(cov))
    max_abs_score = float(np.abs(ppm_score(beta, scheme)).max())
    p = scheme.X.shape[1]
    if not converged and not message:
        message = f"did not converge in {_MAX_ITER} iterations"
    return FitResult(
        beta=beta,
        fisher=fisher,
        cov=cov,
        se=se,
        log_lik=log_lik,
        aic=-2.0 * log_lik + 2.0 * p,
        iterations=iterations,
        converged=converged,
        max_abs_score=max_abs_score,
        loglik_trace=trace,
        message=message,
    )


def predict_intensity(fit, spec, stack):
    """Fitted intensity per cell as a raster (expected records per unit area).

    Cells where any covariate is nodata propagate nodata.
    """
    from .design import build_design
    from .rasters import RasterGrid

    sub = stack.subset(spec.variables) if spec.k else stack
    g0 = stack.grid0
    valid = np.ones(g0.values.shape, dtype=bool)
    if spec.k:
        for grid in sub.grids:
            valid &= grid.valid_mask
        raw = np.column_stack([g.values[valid] for g in sub.grids])
    else:
        raw = np.empty((int(valid.sum()), 0))
    X = build_design(spec, raw)
    lam = np.exp(X @ fit.beta)
    nodata = -9999.0
    values = np.full(g0.values.shape, nodata)
    values[valid] = lam
    return RasterGrid(
        x_ll=g0.x_ll, y_ll=g0.y_ll, cell_size=g0.cell_size, nodata=nodata, values=values
    )

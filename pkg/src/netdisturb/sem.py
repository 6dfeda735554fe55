"""Maximum-likelihood estimation of the network disturbance model.

The model for one period's log flows y (length n) is

    y = X beta + u,    u = rho W u + eps,    eps ~ N(0, sigma^2 I)

so u = (I - rho W)^{-1} eps and Sigma = sigma^2 (I - rho W)^{-1} (I - rho W')^{-1}.
With A = I - rho W, the log-likelihood concentrates over beta and sigma^2:
beta(rho) is the least-squares fit of A y on A X, sigma^2(rho) = e'e/n with
e = A(y - X beta(rho)), and the profiled log-likelihood is

    l(rho) = -(n/2)(log 2 pi + 1) - (n/2) log sigma^2(rho) + log|det(I - rho W)|

The Jacobian term uses the eigenvalues of W: log|det(I - rho W)| equals the
real part of sum_i log(1 - rho lambda_i) (complex eigenvalues of the
asymmetric W pair up, so the imaginary parts cancel).  rho is searched over
an open interval bounded by the reciprocals of W's extreme real
eigenvalues, by a one-dimensional Nelder-Mead simplex with a golden-section
fallback when the simplex stalls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats
from scipy.linalg import qr

from ._serialize import write_csv, write_json
from .covariates import DesignMatrix
from .errors import EstimationError
from .weights import WeightMatrix

LOG_2PI = math.log(2.0 * math.pi)

# Optimizer iterates are kept this far inside the open rho interval.
BOUNDARY_MARGIN = 1e-6
# sigma^2 below this is treated as a degenerate (perfect) fit.
DEGENERATE_SIGMA2 = 1e-12


@dataclass(frozen=True, eq=False)
class SemProblem:
    """One period's estimation problem: y = X beta + u with weights W.

    ``X`` may be a :class:`~netdisturb.covariates.DesignMatrix` (its column
    names are kept) or a plain array; ``W`` a
    :class:`~netdisturb.weights.WeightMatrix` or a plain array.
    """

    y: np.ndarray
    X: np.ndarray
    W: np.ndarray
    column_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = self.X
        names = tuple(self.column_names)
        if isinstance(X, DesignMatrix):
            names = names or X.column_names
            X = X.rows
        W = self.W
        if isinstance(W, WeightMatrix):
            W = W.entries
        y = np.asarray(self.y, dtype=float).ravel()
        X = np.asarray(X, dtype=float)
        W = np.asarray(W, dtype=float)
        n = y.shape[0]
        if X.ndim != 2 or X.shape[0] != n:
            raise EstimationError(f"X shape {X.shape} does not match y length {n}")
        if W.shape != (n, n):
            raise EstimationError(f"W shape {W.shape} does not match y length {n}")
        if not n > X.shape[1]:
            raise EstimationError(
                f"need more observations than parameters (n={n}, p={X.shape[1]})"
            )
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X)) and np.all(np.isfinite(W))):
            raise EstimationError("y, X and W must be finite")
        if not names:
            names = tuple(f"x{k}" for k in range(X.shape[1]))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues of W plus the induced open search interval for rho."""

    eigenvalues: np.ndarray
    rho_lower: float
    rho_upper: float


def spectrum(W, interval: str = "unit") -> Spectrum:
    """Eigenvalues of W and the admissible rho interval.

    Parameters
    ----------
    W : WeightMatrix or (n, n) array
    interval : {"unit", "spectral"}
        "unit" intersects (-1, 1) with the reciprocal-eigenvalue interval
        (the default; for row-normalized W the two usually coincide).
        "spectral" uses (1/lambda_min, 1/lambda_max) over W's real
        eigenvalues alone, falling back to -1/+1 on a side with no
        negative/positive real eigenvalue.
    """
    if isinstance(W, WeightMatrix):
        W = W.entries
    W = np.asarray(W, dtype=float)
    if interval not in ("unit", "spectral"):
        raise EstimationError(f"unknown interval policy {interval!r}")
    try:
        eigenvalues = np.linalg.eigvals(W)
    except np.linalg.LinAlgError as exc:
        raise EstimationError(f"eigenvalue computation failed: {exc}") from None

    scale = max(1.0, float(np.abs(eigenvalues).max(initial=0.0)))
    real_mask = np.abs(eigenvalues.imag) <= 1e-9 * scale
    real_parts = eigenvalues.real[real_mask]
    tiny = 1e-12 * scale
    positive = real_parts[real_parts > tiny]
    negative = real_parts[real_parts < -tiny]
    upper = 1.0 / positive.max() if positive.size else math.inf
    lower = 1.0 / negative.min() if negative.size else -math.inf
    if interval == "unit":
        lower = max(lower, -1.0)
        upper = min(upper, 1.0)
    else:
        if not math.isfinite(lower):
            lower = -1.0
        if not math.isfinite(upper):
            upper = 1.0
    return Spectrum(eigenvalues=eigenvalues, rho_lower=lower, rho_upper=upper)


def log_det(rho: float, spec: Spectrum) -> float:
    """log|det(I - rho W)| via the eigenvalues of W.

    Equals the real part of ``sum(log(1 - rho * lambda_i))``; conjugate
    eigenvalue pairs make the imaginary parts cancel exactly.
    """
    factors = 1.0 - rho * spec.eigenvalues
    magnitudes = np.abs(factors)
    if np.any(magnitudes == 0.0):
        raise EstimationError(f"rho={rho} sits on a pole of the log-determinant")
    return float(np.sum(np.log(magnitudes)))


class ProfilePoint(NamedTuple):
    loglik: float
    beta: np.ndarray
    sigma2: float


def _name_collinear_columns(X, names) -> list[str]:
    # Pivoted QR: columns past the numerical rank are the dependent ones.
    _, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag.max(initial=0.0) * max(X.shape) * np.finfo(float).eps
    rank = int(np.sum(diag > tol))
    return [names[k] for k in sorted(piv[rank:])]


class _ProfileCache:
    """Precomputed W y and W X so repeated profile evaluations stay cheap."""

    def __init__(self, problem: SemProblem):
        self.problem = problem
        self.Wy = problem.W @ problem.y
        self.WX = problem.W @ problem.X
        if np.linalg.matrix_rank(problem.X) < problem.p:
            bad = _name_collinear_columns(problem.X, problem.column_names)
            raise EstimationError(
                f"design matrix is rank deficient; collinear columns: {bad}"
            )

    def point(self, rho: float, spec: Spectrum) -> ProfilePoint:
        prob = self.problem
        Ay = prob.y - rho * self.Wy
        AX = prob.X - rho * self.WX
        beta, *_ = np.linalg.lstsq(AX, Ay, rcond=None)
        e = Ay - AX @ beta
        n = prob.n
        sigma2 = float(e @ e) / n
        if sigma2 <= 0.0:
            loglik = math.inf
        else:
            loglik = (
                -0.5 * n * (LOG_2PI + 1.0)
                - 0.5 * n * math.log(sigma2)
                + log_det(rho, spec)
            )
        return ProfilePoint(loglik=loglik, beta=beta, sigma2=sigma2)


def profile_loglik(rho: float, problem: SemProblem, spec: Spectrum) -> ProfilePoint:
    """Concentrated log-likelihood at ``rho`` with the implied beta, sigma^2.

    At rho = 0 this reduces exactly to the OLS solution and its Gaussian
    log-likelihood.
    """
    if not spec.rho_lower < rho < spec.rho_upper:
        raise EstimationError(
            f"rho={rho} outside open interval ({spec.rho_lower}, {spec.rho_upper})"
        )
    return _ProfileCache(problem).point(rho, spec)


def _nelder_mead_1d(
    f: Callable[[float], float],
    x0: float,
    x1: float,
    lo: float,
    hi: float,
    xtol: float,
    max_iter: int,
):
    """Maximize f over [lo, hi] with a two-point simplex; returns (x, converged)."""

    def clamp(x):
        return min(max(x, lo), hi)

    pts = [[clamp(x0), f(clamp(x0))], [clamp(x1), f(clamp(x1))]]
    for _ in range(max_iter):
        pts.sort(key=lambda t: -t[1])
        (best, fb), (worst, fw) = pts
        if abs(best - worst) <= xtol:
            return best, True
        xr = clamp(best + (best - worst))
        fr = f(xr)
        if fr > fb:
            xe = clamp(best + 2.0 * (best - worst))
            fe = f(xe)
            pts[1] = [xe, fe] if fe > fr else [xr, fr]
        elif fr > fw:
            pts[1] = [xr, fr]
        else:
            xc = 0.5 * (best + worst)
            pts[1] = [xc, f(xc)]
    pts.sort(key=lambda t: -t[1])
    return pts[0][0], False


def _golden_section(f, lo, hi, xtol, max_iter):
    """Golden-section maximization on [lo, hi]; returns (x, converged)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol:
            return (0.5 * (a + b), True)
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c if fc > fd else d), False


@dataclass(eq=False)
class SemFit:
    """Estimates, uncertainty and residuals for one fitted period.

    ``p_values`` has one entry per beta coefficient followed by the one for
    rho (NaN when no standard error is available).  ``u_hat`` is y - X beta
    and ``eps_hat = (I - rho W) u_hat`` is the whitened disturbance.
    """

    rho_hat: float
    beta_hat: np.ndarray
    sigma2_hat: float
    se_beta: np.ndarray
    se_rho: float | None
    p_values: np.ndarray
    loglik: float
    aic: float
    u_hat: np.ndarray
    eps_hat: np.ndarray
    converged: bool
    degenerate: bool = False
    column_names: tuple[str, ...] = ()
    rho_bounds: tuple[float, float] | None = None

    @property
    def n(self) -> int:
        return self.u_hat.shape[0]

    @property
    def p(self) -> int:
        return self.beta_hat.shape[0]


def _two_sided_p(estimate, se):
    if se is None or not np.all(np.isfinite(np.atleast_1d(se))):
        return np.nan
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(estimate) / se
    return 2.0 * stats.norm.sf(z)


def fit(
    problem: SemProblem,
    *,
    interval: str = "unit",
    xtol: float = 1e-8,
    max_iter: int = 500,
    spec: Spectrum | None = None,
) -> SemFit:
    """Fit the disturbance model by profiled maximum likelihood.

    The simplex starts from {0, rho_upper / 2} and is clamped
    ``BOUNDARY_MARGIN`` inside the open rho interval; if it stalls, a
    golden-section pass over the whole interval takes over.  Standard
    errors for beta come from sigma^2 ((AX)'(AX))^{-1} at the optimum; the
    one for rho from the curvature of the profiled log-likelihood,
    estimated by a central second difference.

    Parameters
    ----------
    problem : SemProblem
    interval : {"unit", "spectral"}
        rho search interval policy, see :func:`spectrum`.
    xtol : float
        Convergence width for the rho search.
    max_iter : int
        Iteration cap for each optimizer stage.
    spec : Spectrum, optional
        Reuse a precomputed spectrum of problem.W.

    Returns
    -------
    SemFit
        With ``converged=False`` when the rho search hit the iteration cap
        (estimates are still reported).
    """
    if spec is None:
        spec = spectrum(problem.W, interval=interval)
    cache = _ProfileCache(problem)
    lo = spec.rho_lower + BOUNDARY_MARGIN
    hi = spec.rho_upper - BOUNDARY_MARGIN
    if not lo < hi:
        raise EstimationError(
            f"empty rho search interval ({spec.rho_lower}, {spec.rho_upper})"
        )

    def objective(rho: float) -> float:
        return cache.point(rho, spec).loglik

    rho_hat, converged = _nelder_mead_1d(
        objective, 0.0, 0.5 * spec.rho_upper, lo, hi, xtol, max_iter
    )
    # A simplex whose points both clamp onto an interval end collapses there
    # and looks converged without being at a maximum; treat any landing at
    # the edge as a stall and let golden section arbitrate.
    near_edge = min(rho_hat - lo, hi - rho_hat) <= 10.0 * xtol
    if not converged or near_edge:
        alt, alt_converged = _golden_section(objective, lo, hi, xtol, max_iter)
        if objective(alt) >= objective(rho_hat):
            rho_hat, converged = alt, alt_converged

    at_optimum = cache.point(rho_hat, spec)
    beta = at_optimum.beta
    sigma2 = at_optimum.sigma2
    u_hat = problem.y - problem.X @ beta
    eps_hat = u_hat - rho_hat * (problem.W @ u_hat)
    p = problem.p
    aic = -2.0 * at_optimum.loglik + 2.0 * (p + 2)

    degenerate = sigma2 < DEGENERATE_SIGMA2
    if degenerate:
        se_beta = np.full(p, np.nan)
        se_rho = math.nan
    else:
        AX = problem.X - rho_hat * cache.WX
        xtx_inv = np.linalg.inv(AX.T @ AX)
        se_beta = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))
        se_rho = _profile_curvature_se(objective, rho_hat, lo, hi, spec)
    p_values = np.append(_two_sided_p(beta, se_beta), _two_sided_p(rho_hat, se_rho))

    return SemFit(
        rho_hat=float(rho_hat),
        beta_hat=beta,
        sigma2_hat=sigma2,
        se_beta=se_beta,
        se_rho=se_rho,
        p_values=p_values,
        loglik=at_optimum.loglik,
        aic=aic,
        u_hat=u_hat,
        eps_hat=eps_hat,
        converged=converged,
        degenerate=degenerate,
        column_names=problem.column_names,
        rho_bounds=(spec.rho_lower, spec.rho_upper),
    )


def _profile_curvature_se(objective, rho_hat, lo, hi, spec) -> float:
    h = 1e-4 * (spec.rho_upper - spec.rho_lower)
    # Shrink the step if the optimum sits close to an interval end.
    room = min(hi - rho_hat, rho_hat - lo)
    if room <= 0:
        return math.nan
    h = min(h, 0.5 * room)
    d2 = (objective(rho_hat + h) - 2.0 * objective(rho_hat) + objective(rho_hat - h)) / (
        h * h
    )
    if d2 >= 0:
        return math.nan
    return math.sqrt(-1.0 / d2)


def fit_ols(problem: SemProblem) -> SemFit:
    """Fit the restricted model with rho fixed at 0 (independent errors).

    The weight matrix of the problem is ignored; the AIC counts p + 1
    parameters (beta and sigma^2).
    """
    X, y = problem.X, problem.y
    n, p = problem.n, problem.p
    if np.linalg.matrix_rank(X) < p:
        bad = _name_collinear_columns(X, problem.column_names)
        raise EstimationError(
            f"design matrix is rank deficient; collinear columns: {bad}"
        )
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    u_hat = y - X @ beta
    sigma2 = float(u_hat @ u_hat) / n
    degenerate = sigma2 < DEGENERATE_SIGMA2
    if degenerate:
        loglik = math.inf
        se_beta = np.full(p, np.nan)
    else:
        loglik = -0.5 * n * (LOG_2PI + 1.0) - 0.5 * n * math.log(sigma2)
        se_beta = np.sqrt(
            np.maximum(sigma2 * np.diag(np.linalg.inv(X.T @ X)), 0.0)
        )
    p_values = np.append(_two_sided_p(beta, se_beta), np.nan)
    return SemFit(
        rho_hat=0.0,
        beta_hat=beta,
        sigma2_hat=sigma2,
        se_beta=se_beta,
        se_rho=None,
        p_values=p_values,
        loglik=loglik,
        aic=-2.0 * loglik + 2.0 * (p + 1),
        u_hat=u_hat,
        eps_hat=u_hat.copy(),
        converged=True,
        degenerate=degenerate,
        column_names=problem.column_names,
        rho_bounds=None,
    )


def fit_to_dict(result: SemFit) -> dict:
    """JSON-ready mapping with one entry per SemFit field."""
    return {
        "rho_hat": result.rho_hat,
        "beta_hat": result.beta_hat,
        "sigma2_hat": result.sigma2_hat,
        "se_beta": result.se_beta,
        "se_rho": result.se_rho,
        "p_values": result.p_values,
        "loglik": result.loglik,
        "aic": result.aic,
        "u_hat": result.u_hat,
        "eps_hat": result.eps_hat,
        "converged": result.converged,
        "degenerate": result.degenerate,
        "column_names": list(result.column_names),
        "rho_bounds": result.rho_bounds,
    }


def write_fit_json(path, result: SemFit) -> None:
    write_json(path, fit_to_dict(result))


def coefficient_rows(period, structure: str, result: SemFit):
    """Rows for the coefficients CSV: beta terms first, then rho."""
    rows = []
    for k, name in enumerate(result.column_names):
        rows.append(
            (period, structure, name, result.beta_hat[k], result.se_beta[k],
             result.p_values[k])
        )
    se_rho = math.nan if result.se_rho is None else result.se_rho
    rows.append((period, structure, "rho", result.rho_hat, se_rho, result.p_values[-1]))
    return rows


def write_coefficients_csv(path, entries) -> None:
    """Write ``period,structure,term,estimate,se,p_value`` rows.

    ``entries`` is an iterable of (period, structure_id, SemFit).
    """
    rows = []
    for period, structure, result in entries:
        rows.extend(coefficient_rows(period, structure, result))
    write_csv(path, ("period", "structure", "term", "estimate", "se", "p_value"), rows)

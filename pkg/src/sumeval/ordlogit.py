"""Proportional-odds ordered logistic regression.

Cumulative-logit convention: ln(P(Y<=l)/P(Y>l)) = xi_l - eta.x, so a positive
coefficient pushes the outcome toward higher levels. The likelihood is
maximized by damped Newton iteration with the cutpoints reparameterized as
(xi_1, xi_1 + e^d2, ...) to keep them strictly increasing; standard errors
come from the inverse observed Hessian in the natural (eta, xi) space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .stats import AnalysisError, DataMatrix, benjamini_hochberg

MAX_ITERATIONS = 200
GRADIENT_TOL = 1e-8
MAX_HALVINGS = 30
DIVERGENCE_BOUND = 30.0


class ConvergenceError(AnalysisError):
    """Newton iteration failed; carries the last iterate's diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class OrderedLogitFit:
    variable_names: tuple[str, ...]
    coefficients: np.ndarray
    odds_ratios: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values_raw: np.ndarray
    p_values_bh: np.ndarray
    intercepts: np.ndarray  # cutpoints xi_l, strictly increasing
    levels: tuple[float, ...]  # observed y values in ascending order
    log_likelihood: float
    aic: float
    n_obs: int
    n_iterations: int


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _unpack(theta: np.ndarray, p: int, n_cuts: int) -> tuple[np.ndarray, np.ndarray]:
    eta = theta[:p]
    xi = np.empty(n_cuts)
    xi[0] = theta[p]
    if n_cuts > 1:
        xi[1:] = theta[p] + np.cumsum(np.exp(theta[p + 1 :]))
    return eta, xi


def _loglik_terms(eta, xi, x, y_idx):
    """Per-observation upper/lower cut CDFs and densities under the model."""
    z = xi[None, :] - (x @ eta)[:, None]  # (n, K-1)
    f = _sigmoid(z)
    n = x.shape[0]
    k = xi.size + 1
    upper_cdf = np.ones(n)
    lower_cdf = np.zeros(n)
    has_upper = y_idx < k - 1
    has_lower = y_idx > 0
    rows = np.arange(n)
    upper_cdf[has_upper] = f[rows[has_upper], y_idx[has_upper]]
    lower_cdf[has_lower] = f[rows[has_lower], y_idx[has_lower] - 1]
    prob = np.clip(upper_cdf - lower_cdf, 1e-300, 1.0)
    dens_upper = np.where(has_upper, upper_cdf * (1.0 - upper_cdf), 0.0)
    dens_lower = np.where(has_lower, lower_cdf * (1.0 - lower_cdf), 0.0)
    return prob, upper_cdf, lower_cdf, dens_upper, dens_lower, has_upper, has_lower


def _loglik(theta, x, y_idx, p, n_cuts) -> float:
    eta, xi = _unpack(theta, p, n_cuts)
    prob, *_ = _loglik_terms(eta, xi, x, y_idx)
    return float(np.log(prob).sum())


def _grad_hess_natural(eta, xi, x, y_idx):
    """Gradient and Hessian of the log-likelihood in (eta, xi) coordinates."""
    n, p = x.shape
    n_cuts = xi.size
    prob, a_cdf, b_cdf, a, b, has_upper, has_lower = _loglik_terms(eta, xi, x, y_idx)

    g_upper = a / prob  # dL/dz_upper per observation
    g_lower = -b / prob

    a_prime = np.where(has_upper, a * (1.0 - 2.0 * a_cdf), 0.0)
    b_prime = np.where(has_lower, b * (1.0 - 2.0 * b_cdf), 0.0)
    h_uu = (a_prime * prob - a * a) / prob**2
    h_ll = (-b_prime * prob - b * b) / prob**2
    h_ul = a * b / prob**2

    dim = p + n_cuts
    grad = np.zeros(dim)
    hess = np.zeros((dim, dim))

    # eta block
    s1 = g_upper + g_lower  # dL/d(eta.x) direction factor
    grad[:p] = -(x * s1[:, None]).sum(axis=0)
    s2 = h_uu + 2.0 * h_ul + h_ll
    hess[:p, :p] = (x * s2[:, None]).T @ x

    upper_idx = np.where(has_upper, y_idx, 0)
    lower_idx = np.where(has_lower, y_idx - 1, 0)
    for c in range(n_cuts):
        up = has_upper & (upper_idx == c)
        lo = has_lower & (lower_idx == c)
        grad[p + c] = g_upper[up].sum() + g_lower[lo].sum()
        hess[p + c, p + c] = h_uu[up].sum() + h_ll[lo].sum()
        # eta x cutpoint cross terms
        cross = -(x[up] * (h_uu[up] + h_ul[up])[:, None]).sum(axis=0)
        cross += -(x[lo] * (h_ll[lo] + h_ul[lo])[:, None]).sum(axis=0)
        hess[:p, p + c] = cross
        hess[p + c, :p] = cross
    # adjacent cutpoint cross terms: observation with class k touches cuts k and k-1
    both = has_upper & has_lower
    for c in range(1, n_cuts):
        sel = both & (upper_idx == c)
        v = h_ul[sel].sum()
        hess[p + c, p + c - 1] += v
        hess[p + c - 1, p + c] += v
    return grad, hess


def _to_theta_space(grad_nat, hess_nat, theta, p, n_cuts):
    """Chain-rule the natural-space derivatives into the reparameterized space."""
    dim = p + n_cuts
    jac = np.zeros((dim, dim))
    jac[:p, :p] = np.eye(p)
    jac[p:, p] = 1.0  # every xi_l moves with xi_1
    for j in range(1, n_cuts):
        e = np.exp(theta[p + j])
        jac[p + j :, p + j] = e  # xi_l for l >= j moves with delta_j
    grad = jac.T @ grad_nat
    hess = jac.T @ hess_nat @ jac
    for j in range(1, n_cuts):
        e = np.exp(theta[p + j])
        hess[p + j, p + j] += grad_nat[p + j :].sum() * e
    return grad, hess


def ordered_logit_fit(
    x: DataMatrix | np.ndarray,
    y: Sequence[float],
    variable_names: Sequence[str] | None = None,
) -> OrderedLogitFit:
    """Fit the proportional-odds model by maximum likelihood.

    Levels are the sorted distinct observed y values. Raises ConvergenceError
    on non-convergence or suspected perfect separation (|eta| > 30).
    """
    if isinstance(x, DataMatrix):
        names = x.column_names
        xmat = x.rows
    else:
        xmat = np.asarray(x, dtype=float)
        names = tuple(variable_names or (f"x{j}" for j in range(xmat.shape[1])))
    yarr = np.asarray(y, dtype=float)
    if yarr.ndim != 1 or yarr.size != xmat.shape[0]:
        raise AnalysisError(f"y length {yarr.size} does not match {xmat.shape[0]} rows")
    if not np.all(np.isfinite(xmat)) or not np.all(np.isfinite(yarr)):
        raise AnalysisError("ordered_logit_fit requires finite inputs")

    levels = np.unique(yarr)
    if levels.size < 2:
        raise AnalysisError("y must have at least 2 distinct levels")
    y_idx = np.searchsorted(levels, yarr)
    n, p = xmat.shape
    n_cuts = levels.size - 1

    # start at eta = 0 with cutpoints from the empirical cumulative distribution
    counts = np.bincount(y_idx, minlength=levels.size)
    cum = np.clip(np.cumsum(counts)[:-1] / n, 1e-6, 1 - 1e-6)
    xi0 = np.log(cum / (1.0 - cum))
    xi0 = np.maximum.accumulate(xi0)
    for j in range(1, n_cuts):  # enforce strict increase for the log-gap map
        if xi0[j] <= xi0[j - 1]:
            xi0[j] = xi0[j - 1] + 1e-3
    theta = np.zeros(p + n_cuts)
    theta[p] = xi0[0]
    if n_cuts > 1:
        theta[p + 1 :] = np.log(np.diff(xi0))

    ll = _loglik(theta, xmat, y_idx, p, n_cuts)
    n_iter = 0
    for n_iter in range(1, MAX_ITERATIONS + 1):
        eta, xi = _unpack(theta, p, n_cuts)
        if np.any(np.abs(eta) > DIVERGENCE_BOUND):
            raise ConvergenceError(
                "perfect separation suspected: coefficient magnitude exceeded "
                f"{DIVERGENCE_BOUND}",
                {"eta": eta.tolist(), "iteration": n_iter, "log_likelihood": ll},
            )
        grad_nat, hess_nat = _grad_hess_natural(eta, xi, xmat, y_idx)
        grad, hess = _to_theta_space(grad_nat, hess_nat, theta, p, n_cuts)
        if np.max(np.abs(grad)) < GRADIENT_TOL:
            break
        neg_hess = -hess
        step = None
        ridge = 0.0
        for _ in range(8):
            try:
                step = np.linalg.solve(neg_hess + ridge * np.eye(neg_hess.shape[0]), grad)
                break
            except np.linalg.LinAlgError:
                ridge = max(ridge * 10.0, 1e-8)
        if step is None:
            raise ConvergenceError(
                "Newton system unsolvable",
                {"iteration": n_iter, "log_likelihood": ll},
            )
        scale = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            candidate = theta + scale * step
            cand_ll = _loglik(candidate, xmat, y_idx, p, n_cuts)
            if cand_ll >= ll - 1e-12:
                theta = candidate
                ll = cand_ll
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            raise ConvergenceError(
                "step halving exhausted without improving the likelihood",
                {"iteration": n_iter, "log_likelihood": ll, "grad_max": float(np.max(np.abs(grad)))},
            )
    else:
        raise ConvergenceError(
            f"no convergence after {MAX_ITERATIONS} iterations",
            {"log_likelihood": ll, "grad_max": float(np.max(np.abs(grad)))},
        )

    eta, xi = _unpack(theta, p, n_cuts)
    _, hess_nat = _grad_hess_natural(eta, xi, xmat, y_idx)
    observed_info = -hess_nat
    try:
        cov = np.linalg.inv(observed_info)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("observed information matrix is singular") from exc
    se = np.sqrt(np.clip(np.diag(cov)[:p], 0.0, None))
    with np.errstate(divide="ignore"):
        t_values = np.where(se > 0, eta / se, np.inf * np.sign(eta))
    p_raw = 2.0 * norm.sf(np.abs(t_values))
    k_params = p + n_cuts
    return OrderedLogitFit(
        variable_names=names,
        coefficients=eta,
        odds_ratios=np.exp(eta),
        std_errors=se,
        t_values=t_values,
        p_values_raw=p_raw,
        p_values_bh=np.asarray(benjamini_hochberg(p_raw.tolist())),
        intercepts=xi,
        levels=tuple(levels.tolist()),
        log_likelihood=ll,
        aic=2.0 * k_params - 2.0 * ll,
        n_obs=n,
        n_iterations=n_iter,
    )

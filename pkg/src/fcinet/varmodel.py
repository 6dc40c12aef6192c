"""Equation-by-equation least squares for VAR models with an optional
instantaneous (lag-0) regressor block.

Each equation regresses one series on: an intercept (optional), its own lags
1..p, the lags 1..p of every other series, and the lag-0 values of every
other series (never the target's own lag-0 term, which would be degenerate).
Residual variance is the maximum-likelihood estimate (sum of squares divided
by the effective sample size), matching the log-likelihood-ratio causal
measure built on top.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import InputError, InsufficientSampleError, RankDeficientError
from .panel import SeriesTable

#: minimum excess of sample length over regressor count
MIN_SAMPLE_MARGIN = 10

LAGGED = "lagged"
INSTANTANEOUS = "instantaneous"


class Regressor(NamedTuple):
    """Column descriptor: ``variable`` index (-1 for the intercept) and
    ``lag`` (0 means contemporaneous)."""

    variable: int
    lag: int


@dataclass(frozen=True)
class VarSpec:
    """Model shape shared by every equation of the system."""

    p: int = 1
    include_instantaneous: bool = True
    include_intercept: bool = True

    def __post_init__(self):
        if self.p < 1:
            raise InputError(f"lag order must be >= 1, got {self.p}")


@dataclass(frozen=True)
class EquationFit:
    target_index: int
    regressors: tuple
    coefficients: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    residual_variance: float
    t_eff: int


def build_design(table: SeriesTable, target: int, spec: VarSpec,
                 exclusions=frozenset(), start_row=None):
    """Design matrix and response for one equation.

    ``exclusions`` holds (variable, kind) pairs with kind ``"lagged"``
    (drop that variable's lags 1..p) or ``"instantaneous"`` (drop its lag-0
    term).  ``start_row`` overrides the first usable row (default ``spec.p``)
    so fits at different lag orders can share a common sample.

    Returns (X, y, regressors) with rows t = start_row .. T-1.
    """
    k, t_len = table.values.shape
    if not 0 <= target < k:
        raise InputError(f"target index {target} out of range")
    p = spec.p
    for var, kind in exclusions:
        if kind not in (LAGGED, INSTANTANEOUS):
            raise InputError(f"unknown exclusion kind {kind!r}")
        if not 0 <= var < k:
            raise InputError(f"exclusion variable {var} out of range")
        if kind == INSTANTANEOUS:
            if var == target:
                raise InputError(
                    "cannot exclude the target's own lag-0 term: it is never "
                    "part of its equation"
                )
            if not spec.include_instantaneous:
                raise InputError(
                    "instantaneous exclusion with the lag-0 block disabled"
                )

    regressors = []
    if spec.include_intercept:
        regressors.append(Regressor(-1, 0))
    others = [v for v in range(k) if v != target]
    for var in (target, *others):
        if (var, LAGGED) not in exclusions:
            regressors.extend(Regressor(var, lag) for lag in range(1, p + 1))
    if spec.include_instantaneous:
        for var in others:
            if (var, INSTANTANEOUS) not in exclusions:
                regressors.append(Regressor(var, 0))

    start = p if start_row is None else start_row
    if start < p:
        raise InputError("start_row cannot be smaller than the lag order")
    t_eff = t_len - start
    if t_eff < len(regressors) + MIN_SAMPLE_MARGIN:
        raise InsufficientSampleError(
            f"usable sample {t_eff} must exceed regressor count "
            f"{len(regressors)} by at least {MIN_SAMPLE_MARGIN}"
        )

    rows = np.arange(start, t_len)
    x = np.empty((t_eff, len(regressors)))
    for col, reg in enumerate(regressors):
        if reg.variable == -1:
            x[:, col] = 1.0
        else:
            x[:, col] = table.values[reg.variable, rows - reg.lag]
    y = table.values[target, rows].copy()
    return x, y, tuple(regressors)


def ols_fit(x, y, regressors=None, target_index=-1) -> EquationFit:
    """Least squares through a rank-revealing pivoted QR factorization.

    Raises RankDeficientError naming the collinear columns when the design
    is not full column rank.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = x.shape
    if m == 0:
        raise InputError("empty design matrix")
    q, r, piv = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    cutoff = max(n, m) * np.finfo(np.float64).eps * (diag[0] if m else 0.0)
    rank = int(np.sum(diag > cutoff))
    if rank < m:
        bad = sorted(piv[rank:])
        names = [str(regressors[c]) if regressors is not None else f"col{c}"
                 for c in bad]
        raise RankDeficientError(
            f"rank-deficient design (rank {rank} of {m}); collinear "
            f"columns: {', '.join(names)}"
        )
    beta_piv = scipy.linalg.solve_triangular(r, q.T @ y)
    beta = np.empty(m)
    beta[piv] = beta_piv
    resid = y - x @ beta
    if regressors is None:
        regressors = tuple(Regressor(c, 0) for c in range(m))
    return EquationFit(
        target_index=target_index,
        regressors=tuple(regressors),
        coefficients=beta,
        residuals=resid,
        residual_variance=float(resid @ resid) / n,
        t_eff=n,
    )


def fit_equation(table, target, spec, exclusions=frozenset()) -> EquationFit:
    """Build and fit one equation of the system."""
    x, y, regs = build_design(table, target, spec, exclusions)
    return ols_fit(x, y, regs, target_index=target)


def select_lag(table: SeriesTable, p_max: int, spec: VarSpec = None) -> int:
    """Smallest-BIC lag order over 1..p_max for the full system.

    All candidate orders are scored on the common sample of length
    T - p_max; BIC is the equation-wise sum of
    T_eff * ln(sigma^2_ML) + n_params * ln(T_eff).
    """
    if p_max < 1:
        raise InputError("p_max must be >= 1")
    if spec is None:
        spec = VarSpec(p=1)
    k = table.n_series
    best_p, best_bic = None, np.inf
    for p in range(1, p_max + 1):
        cand = VarSpec(p=p,
                       include_instantaneous=spec.include_instantaneous,
                       include_intercept=spec.include_intercept)
        bic = 0.0
        for target in range(k):
            x, y, regs = build_design(table, target, cand, start_row=p_max)
            fit = ols_fit(x, y, regs, target_index=target)
            n = fit.t_eff
            bic += n * np.log(max(fit.residual_variance, 1e-300)) \
                + len(regs) * np.log(n)
        if bic < best_bic:
            best_p, best_bic = p, bic
    return best_p

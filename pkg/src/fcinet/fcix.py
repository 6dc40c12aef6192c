"""Financial chaos index from rank-one approximation of the pairwise
comparison tensor.

The tensor is never materialized: slice t is the outer product
r^(t) (r^(t))^{-T} of the day-t gross-return vector, so every contraction
the alternating-least-squares fitter needs reduces to O(N T) work on the
return matrix.  The index at time t is (lambda_max - N) / (N - 1) where
lambda_max is the dominant eigenvalue of the fitted slice z_t x y^T, which
is z_t <x, y> in closed form; the index is therefore an increasing affine
function of the scale series z.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConvergenceError, InputError
from .panel import PricePanel, ReturnPanel, gross_returns

DEFAULT_TOL = 1e-10
DEFAULT_MAX_SWEEPS = 500
POWER_TOL = 1e-12
POWER_MAX_ITERS = 10000


@dataclass(frozen=True)
class ImplicitRpct:
    """Implicit N x N x T reciprocal pairwise comparison tensor.

    Holds only the generating return matrix; ``slice_at`` materializes a
    single N x N slice on demand (A_ij = r_i / r_j, so A_ij A_ji = 1 and the
    diagonal is 1).
    """

    returns: np.ndarray = field(repr=False)
    inv_returns: np.ndarray = field(repr=False)

    @classmethod
    def from_returns(cls, source) -> "ImplicitRpct":
        ret = source.returns if isinstance(source, ReturnPanel) else np.asarray(source, dtype=np.float64)
        if ret.ndim != 2:
            raise InputError("returns must be an N x T matrix")
        if ret.shape[0] < 2:
            raise InputError("need at least 2 assets")
        if ret.shape[1] < 1:
            raise InputError("need at least 1 time slice")
        if not np.all(ret > 0):
            raise InputError("returns must be strictly positive")
        ret = np.ascontiguousarray(ret, dtype=np.float64)
        return cls(returns=ret, inv_returns=np.ascontiguousarray(1.0 / ret))

    @property
    def n_assets(self) -> int:
        return self.returns.shape[0]

    @property
    def n_slices(self) -> int:
        return self.returns.shape[1]

    def slice_at(self, t: int) -> np.ndarray:
        if not 0 <= t < self.n_slices:
            raise InputError(f"slice index {t} out of range [0, {self.n_slices})")
        a = np.outer(self.returns[:, t], self.inv_returns[:, t])
        np.fill_diagonal(a, 1.0)  # r_i * (1/r_i) rounds; the contract is exact
        return a


@dataclass(frozen=True)
class RankOneFactors:
    """Fitted rank-one factors: x, y positive unit vectors, z carries scale."""

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    relative_residual: float
    iterations: int
    converged: bool
    objective_trace: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class FcixSeries:
    """Chaos-index series with the dominant slice eigenvalues behind it."""

    timestamps: tuple
    values: np.ndarray = field(repr=False)
    lambda_max: np.ndarray = field(repr=False)


def rpcm_slice(source, t: int) -> np.ndarray:
    """Materialize the time-t reciprocal pairwise comparison matrix."""
    return ImplicitRpct.from_returns(source).slice_at(t)


def frobenius_norm_sq(source) -> float:
    """Squared Frobenius norm of the implicit tensor in O(N T).

    Per slice, sum_ij (r_i / r_j)^2 factors as (sum_i r_i^2)(sum_j r_j^-2).
    """
    rpct = source if isinstance(source, ImplicitRpct) else ImplicitRpct.from_returns(source)
    row = np.sum(rpct.returns ** 2, axis=0)
    col = np.sum(rpct.inv_returns ** 2, axis=0)
    return float(row @ col)


def fit_rank_one(source, max_sweeps=DEFAULT_MAX_SWEEPS, tol=DEFAULT_TOL,
                 init=None, trace_blocks=False) -> RankOneFactors:
    """Constrained rank-one fit of the comparison tensor by ALS.

    Each block update is the exact conditional least-squares minimizer, so
    the Frobenius objective is non-increasing at every half sweep; positive
    inputs keep every iterate strictly positive without projection.
    Convergence means the relative objective decrease over a full sweep fell
    to ``tol`` within ``max_sweeps``; otherwise factors are returned with
    ``converged=False``.

    Parameters
    ----------
    source : ReturnPanel, ImplicitRpct, or positive N x T array
    init : optional (x0, y0) positive starting vectors; default is the
        normalized mode-wise means of the slice row/column generators.
    trace_blocks : record the objective after every block update instead of
        once per sweep (used by the monotonicity tests).
    """
    rpct = source if isinstance(source, ImplicitRpct) else ImplicitRpct.from_returns(source)
    ret, inv_ret = rpct.returns, rpct.inv_returns
    a2 = frobenius_norm_sq(rpct)

    if init is None:
        x, y, z = _kernels.als_init(ret, inv_ret)
    else:
        x0, y0 = init
        x = np.asarray(x0, dtype=np.float64).copy()
        y = np.asarray(y0, dtype=np.float64).copy()
        if np.any(x <= 0) or np.any(y <= 0):
            raise InputError("init vectors must be strictly positive")
        x /= np.linalg.norm(x)
        y /= np.linalg.norm(y)
        z = (ret.T @ x) * (inv_ret.T @ y)

    f_prev = a2 - float(z @ z)
    trace = [f_prev]
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        f1, f2, f3 = _kernels.als_sweep(ret, inv_ret, x, y, z, a2)
        if trace_blocks:
            trace.extend((f1, f2, f3))
        else:
            trace.append(f3)
        if not (np.all(x > 0) and np.all(y > 0) and np.all(z > 0)
                and np.isfinite(f3)):
            raise ArithmeticError(
                "internal error: ALS produced a non-positive or non-finite "
                "iterate from strictly positive input"
            )
        if f_prev <= 0.0 or (f_prev - f3) <= tol * f_prev:
            converged = True
            f_prev = f3
            break
        f_prev = f3

    if f_prev <= 1e-10 * a2:
        # the factored objective cancels to ~eps * ||A||^2, which cannot
        # certify near-exact fits; re-evaluate by streaming elementwise
        f_prev = _kernels.residual_sq(ret, inv_ret, x, y, z)
    residual = float(np.sqrt(max(f_prev, 0.0) / a2))
    return RankOneFactors(
        x=x, y=y, z=z,
        relative_residual=residual,
        iterations=sweeps,
        converged=converged,
        objective_trace=tuple(trace),
    )


def dominant_eigenvalue(matrix, tol=POWER_TOL, max_iters=POWER_MAX_ITERS):
    """Dominant eigenpair of an elementwise-positive matrix.

    Power iteration with L2 normalization from the positive uniform start;
    in the Perron setting the iteration cannot escape the positive cone.
    Returns (lambda, positive unit eigenvector); raises ConvergenceError
    (carrying the last iterate on the exception) if ``max_iters`` is hit
    before successive eigenvalue estimates agree to ``tol``.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("matrix must be square")
    if not np.all(a > 0):
        raise InputError("matrix must be elementwise positive")
    n = a.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(max_iters):
        w = a @ v
        lam_new = float(v @ w)
        v = w / np.linalg.norm(w)
        if abs(lam_new - lam) <= tol:
            return lam_new, v
        lam = lam_new
    err = ConvergenceError(
        f"power iteration did not converge in {max_iters} iterations"
    )
    err.eigenvalue = lam
    err.vector = v
    raise err


def fcix_series(factors: RankOneFactors, n_assets: int,
                timestamps=None) -> FcixSeries:
    """Index series from fitted factors.

    The t-th fitted slice is z_t x y^T, a positive rank-one matrix whose
    dominant eigenvalue is z_t <x, y>; the index maps it through
    (lambda - N) / (N - 1).  Values below zero are legitimate and kept.
    """
    if n_assets < 2:
        raise InputError("need at least 2 assets")
    lam = factors.z * float(factors.y @ factors.x)
    values = (lam - n_assets) / (n_assets - 1)
    if timestamps is None:
        timestamps = tuple(range(len(lam)))
    if len(timestamps) != len(lam):
        raise InputError("timestamp count does not match slice count")
    return FcixSeries(timestamps=tuple(timestamps), values=values,
                      lambda_max=lam)


def fcix_pipeline(panel: PricePanel, window=None, max_sweeps=DEFAULT_MAX_SWEEPS,
                  tol=DEFAULT_TOL):
    """Prices -> returns -> rank-one fit -> index series.

    With ``window=W`` the factors are refit on each sliding block of W
    return slices and the index is taken at the block's final date, giving
    a series of length T_slices - W + 1.  Returns (series, factors); in
    windowed mode ``factors`` is the fit for the last window.
    """
    rp = gross_returns(panel)
    if window is None:
        factors = fit_rank_one(rp, max_sweeps=max_sweeps, tol=tol)
        return fcix_series(factors, rp.n_assets, rp.timestamps), factors
    if not 1 <= window <= rp.n_slices:
        raise InputError(
            f"window must be in [1, {rp.n_slices}], got {window}"
        )
    vals = np.empty(rp.n_slices - window + 1)
    lams = np.empty_like(vals)
    factors = None
    for end in range(window - 1, rp.n_slices):
        block = rp.returns[:, end - window + 1:end + 1]
        factors = fit_rank_one(block, max_sweeps=max_sweeps, tol=tol)
        series = fcix_series(factors, rp.n_assets)
        vals[end - window + 1] = series.values[-1]
        lams[end - window + 1] = series.lambda_max[-1]
    stamps = rp.timestamps[window - 1:]
    return FcixSeries(timestamps=tuple(stamps), values=vals,
                      lambda_max=lams), factors

"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection happens once at import time via the environment variable
``FCINET_BACKEND``:

* ``auto`` (default) - use numba if it imports, otherwise numpy;
* ``numba``          - require numba, fail loudly if unavailable;
* ``numpy``          - force the pure-numpy implementations.

The numba kernels run serial scalar loops in a fixed order, so their results
are bit-stable regardless of BLAS or OpenMP thread settings.  The numpy
fallback delegates reductions to BLAS and agrees with the numba path to
floating-point rounding, not bit-for-bit.  ``benchmarks/bench_kernels.py``
compares the two paths at production problem sizes.
"""

import os

import numpy as np

_CHOICE = os.environ.get("FCINET_BACKEND", "auto").strip().lower()
if _CHOICE not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"FCINET_BACKEND must be 'auto', 'numba' or 'numpy', got {_CHOICE!r}"
    )


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _als_sweep_numpy(ret, inv_ret, x, y, z, a2):
    """One alternating-least-squares sweep on the implicit comparison tensor.

    ``ret``/``inv_ret`` are the N x T gross-return matrix and its elementwise
    reciprocal; the slice at time t is ret[:, t] * inv_ret[:, t]^T.  Updates
    x, y, z in place (x, y kept at unit Euclidean norm, scale folded into z)
    and returns the Frobenius-squared objective after each of the three block
    updates, so monotonicity is observable at half-sweep resolution.
    """
    # x block: x_i  <-  sum_t z_t s_t ret[i, t],  s_t = y . inv_ret[:, t]
    s = inv_ret.T @ y
    sum_z2 = float(z @ z)
    g = ret @ (z * s)
    g_norm = float(np.sqrt(g @ g))
    x[:] = g / g_norm
    z *= g_norm / sum_z2  # fold the raw-solution scale into z

    u = ret.T @ x
    sum_z2 = float(z @ z)
    f1 = a2 - 2.0 * float(z @ (u * s)) + sum_z2

    # y block: y_j  <-  sum_t z_t u_t inv_ret[j, t]
    h = inv_ret @ (z * u)
    h_norm = float(np.sqrt(h @ h))
    y[:] = h / h_norm
    z *= h_norm / sum_z2

    s = inv_ret.T @ y
    sum_z2 = float(z @ z)
    f2 = a2 - 2.0 * float(z @ (u * s)) + sum_z2

    # z block: closed form for unit-norm x, y
    z[:] = u * s
    f3 = a2 - float(z @ z)
    return f1, f2, f3


def _als_init_numpy(ret, inv_ret):
    """Deterministic positive starting point: normalized means of the
    per-slice unit row/column factors, then the closed-form z update.

    Normalizing each slice's factor before averaging makes the start (and
    hence the whole iteration) invariant to day-wise rescaling of returns,
    which leaves the comparison slices unchanged.
    """
    x = (ret / np.sqrt(np.sum(ret * ret, axis=0))).mean(axis=1)
    x /= np.sqrt(x @ x)
    y = (inv_ret / np.sqrt(np.sum(inv_ret * inv_ret, axis=0))).mean(axis=1)
    y /= np.sqrt(y @ y)
    z = (ret.T @ x) * (inv_ret.T @ y)
    return x, y, z


def _residual_sq_numpy(ret, inv_ret, x, y, z):
    """Elementwise-streamed squared residual, O(N^2 T) flops but O(N^2)
    memory.  Unlike the factored objective this has no cancellation floor,
    so it certifies near-exact fits well below sqrt(machine-eps)."""
    xy = np.outer(x, y)
    total = 0.0
    for k in range(ret.shape[1]):
        e = np.outer(ret[:, k], inv_ret[:, k]) - z[k] * xy
        total += float(np.sum(e * e))
    return total


def _var_recursion_numpy(lagged, lag0, innov, out):
    """Simulate y_t = sum_k B_k y_{t-k} + B0 y_t + e_t with strictly
    lower-triangular B0, components filled in ascending index order."""
    t_total, k = innov.shape
    p = lagged.shape[0]
    for t in range(t_total):
        acc = innov[t].copy()
        for lag in range(1, p + 1):
            if t - lag >= 0:
                acc += lagged[lag - 1] @ out[t - lag]
        for j in range(k):
            out[t, j] = acc[j] + lag0[j, :j] @ out[t, :j]
    return out


# ---------------------------------------------------------------------------
# numba implementations (same math, explicit serial loops)
# ---------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def als_sweep(ret, inv_ret, x, y, z, a2):
        n, t = ret.shape

        s = np.zeros(t)
        for j in range(n):
            yj = y[j]
            for k in range(t):
                s[k] += yj * inv_ret[j, k]
        sum_z2 = 0.0
        for k in range(t):
            sum_z2 += z[k] * z[k]
        w = np.empty(t)
        for k in range(t):
            w[k] = z[k] * s[k]
        g_norm2 = 0.0
        for i in range(n):
            acc = 0.0
            for k in range(t):
                acc += ret[i, k] * w[k]
            x[i] = acc
            g_norm2 += acc * acc
        g_norm = np.sqrt(g_norm2)
        for i in range(n):
            x[i] /= g_norm
        fold = g_norm / sum_z2
        for k in range(t):
            z[k] *= fold

        u = np.zeros(t)
        for i in range(n):
            xi = x[i]
            for k in range(t):
                u[k] += xi * ret[i, k]
        sum_z2 = 0.0
        cross = 0.0
        for k in range(t):
            sum_z2 += z[k] * z[k]
            cross += z[k] * u[k] * s[k]
        f1 = a2 - 2.0 * cross + sum_z2

        h_norm2 = 0.0
        for k in range(t):
            w[k] = z[k] * u[k]
        for j in range(n):
            acc = 0.0
            for k in range(t):
                acc += inv_ret[j, k] * w[k]
            y[j] = acc
            h_norm2 += acc * acc
        h_norm = np.sqrt(h_norm2)
        for j in range(n):
            y[j] /= h_norm
        fold = h_norm / sum_z2
        for k in range(t):
            z[k] *= fold

        for k in range(t):
            s[k] = 0.0
        for j in range(n):
            yj = y[j]
            for k in range(t):
                s[k] += yj * inv_ret[j, k]
        sum_z2 = 0.0
        cross = 0.0
        for k in range(t):
            sum_z2 += z[k] * z[k]
            cross += z[k] * u[k] * s[k]
        f2 = a2 - 2.0 * cross + sum_z2

        f3 = a2
        for k in range(t):
            z[k] = u[k] * s[k]
            f3 -= z[k] * z[k]
        return f1, f2, f3

    @njit(cache=True)
    def als_init(ret, inv_ret):
        n, t = ret.shape
        x = np.zeros(n)
        y = np.zeros(n)
        for k in range(t):
            rn = 0.0
            sn = 0.0
            for i in range(n):
                rn += ret[i, k] * ret[i, k]
                sn += inv_ret[i, k] * inv_ret[i, k]
            rn = np.sqrt(rn)
            sn = np.sqrt(sn)
            for i in range(n):
                x[i] += ret[i, k] / rn
                y[i] += inv_ret[i, k] / sn
        xn = 0.0
        yn = 0.0
        for i in range(n):
            x[i] /= t
            y[i] /= t
            xn += x[i] * x[i]
            yn += y[i] * y[i]
        xn = np.sqrt(xn)
        yn = np.sqrt(yn)
        for i in range(n):
            x[i] /= xn
            y[i] /= yn
        z = np.zeros(t)
        for k in range(t):
            u = 0.0
            s = 0.0
            for i in range(n):
                u += x[i] * ret[i, k]
                s += y[i] * inv_ret[i, k]
            z[k] = u * s
        return x, y, z

    @njit(cache=True)
    def residual_sq(ret, inv_ret, x, y, z):
        n, t = ret.shape
        total = 0.0
        for k in range(t):
            zk = z[k]
            for i in range(n):
                ri = ret[i, k]
                zxi = zk * x[i]
                for j in range(n):
                    e = ri * inv_ret[j, k] - zxi * y[j]
                    total += e * e
        return total

    @njit(cache=True)
    def var_recursion(lagged, lag0, innov, out):
        t_total, k_vars = innov.shape
        p = lagged.shape[0]
        for t in range(t_total):
            for j in range(k_vars):
                acc = innov[t, j]
                for lag in range(1, p + 1):
                    if t - lag >= 0:
                        for m in range(k_vars):
                            acc += lagged[lag - 1, j, m] * out[t - lag, m]
                for m in range(j):
                    acc += lag0[j, m] * out[t, m]
                out[t, j] = acc
        return out

    return als_sweep, als_init, residual_sq, var_recursion


_NUMPY_IMPLS = (_als_sweep_numpy, _als_init_numpy, _residual_sq_numpy,
                _var_recursion_numpy)

if _CHOICE == "numpy":
    BACKEND = "numpy"
    als_sweep, als_init, residual_sq, var_recursion = _NUMPY_IMPLS
else:
    try:
        als_sweep, als_init, residual_sq, var_recursion = _build_numba()
        BACKEND = "numba"
    except ImportError:
        if _CHOICE == "numba":
            raise
        BACKEND = "numpy"
        als_sweep, als_init, residual_sq, var_recursion = _NUMPY_IMPLS


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND

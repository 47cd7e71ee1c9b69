"""Pure-NumPy fallback implementations of the hot kernels.

Semantically identical to the compiled extension in ``_kernels.pyx``;
used when the extension is unavailable or explicitly requested via
``GNSCH_BACKEND=python``.
"""

import numpy as np

NAME = "python"


def csr_matvec(indptr, indices, data, x):
    """y = A @ x for a CSR matrix (indptr, indices, data)."""
    products = data * x[indices]
    row_len = np.diff(indptr)
    if row_len.size and row_len.min() > 0:
        return np.add.reduceat(products, indptr[:-1])
    y = np.zeros(indptr.size - 1, dtype=np.float64)
    rows = np.repeat(np.arange(indptr.size - 1), row_len)
    np.add.at(y, rows, products)
    return y


def shift_combo(f, g, alpha, beta, axis):
    """alpha*(g_{j+1} - g_{j-1}) + beta*(f_{j+1} - 2 f_j + f_{j-1}), periodic.

    Returns the per-cell increment along ``axis``; callers add it to f.
    """
    gp = np.roll(g, -1, axis=axis)
    gm = np.roll(g, 1, axis=axis)
    fp = np.roll(f, -1, axis=axis)
    fm = np.roll(f, 1, axis=axis)
    return alpha * (gp - gm) + beta * (fp - 2.0 * f + fm)


def _neighbor_pair(minus_coef, plus_coef, field, axis):
    return minus_coef * np.roll(field, 1, axis=axis) + plus_coef * np.roll(field, -1, axis=axis)


def coupled_matvec(coefs, x, shape):
    """Structured matrix-vector product of the coupled (vbar, mu) system.

    Per-axis neighbor contributions are formed first and the two axis sums
    are combined pairwise, so the product commutes bit-exactly with the
    x <-> y index swap on swap-symmetric data.
    """
    n = int(np.prod(shape))
    vb = x[:n].reshape(shape)
    mu = x[n:].reshape(shape)
    dim = len(shape)

    adv = _neighbor_pair(coefs["v_minus0"], coefs["v_plus0"], vb, 0)
    mflux = _neighbor_pair(coefs["mu_minus0"], coefs["mu_plus0"], mu, 0)
    lap = _neighbor_pair(coefs["lap_minus0"], coefs["lap_plus0"], vb, 0)
    if dim == 2:
        adv = adv + _neighbor_pair(coefs["v_minus1"], coefs["v_plus1"], vb, 1)
        mflux = mflux + _neighbor_pair(coefs["mu_minus1"], coefs["mu_plus1"], mu, 1)
        lap = lap + _neighbor_pair(coefs["lap_minus1"], coefs["lap_plus1"], vb, 1)
    out1 = (coefs["v_diag"] * vb + adv) + (coefs["mu_diag"] * mu + mflux)
    out2 = mu + (coefs["lap_diag"] * vb + lap)
    return np.concatenate([out1.ravel(), out2.ravel()])

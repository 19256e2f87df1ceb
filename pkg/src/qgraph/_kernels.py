"""Transfer-matrix kernels for piecewise-constant potentials.

On a piece of width ``w`` with constant value ``c`` the equation
``-y'' + c y = lam y`` propagates ``(y, y')`` by

    [[cos(k w),        sin(k w)/k],
     [-k sin(k w),     cos(k w)  ]],     k**2 = lam - c.

Every entry is an even function of ``k`` so no branch of the square root is
ever selected.  The batch kernel is compiled with numba unless the
environment variable ``QGRAPH_PURE_NUMPY`` is set to a true value, in which
case the vectorised numpy path is used.
"""
import os

import numpy as np

_SERIES_CUTOFF = 1e-2


def _flag(name):
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


def piece_entries(k2, w):
    """Return ``(cos(kw), sin(kw)/k, k sin(kw))`` for scalar or array ``k2``."""
    k2 = np.asarray(k2, dtype=complex)
    z2 = k2 * (w * w)
    small = np.abs(z2) < _SERIES_CUTOFF**2
    z = np.sqrt(np.where(small, 1.0, z2))
    co = np.where(small, 1 - z2 / 2 + z2**2 / 24 - z2**3 / 720 + z2**4 / 40320, np.cos(z))
    sinc = np.where(small, 1 - z2 / 6 + z2**2 / 120 - z2**3 / 5040 + z2**4 / 362880, np.sin(z) / z)
    return co, w * sinc, k2 * w * sinc


def transfer_batch_numpy(lams, widths, values):
    lams = np.asarray(lams, dtype=complex).ravel()
    a = np.ones_like(lams)
    b = np.zeros_like(lams)
    c = np.zeros_like(lams)
    d = np.ones_like(lams)
    for w, v in zip(widths, values):
        if w <= 0:
            continue
        co, sw, ksk = piece_entries(lams - v, w)
        a, b, c, d = co * a + sw * c, co * b + sw * d, -ksk * a + co * c, -ksk * b + co * d
    out = np.empty((lams.size, 2, 2), dtype=complex)
    out[:, 0, 0] = a
    out[:, 0, 1] = b
    out[:, 1, 0] = c
    out[:, 1, 1] = d
    return out


try:
    if _flag("QGRAPH_PURE_NUMPY"):
        raise ImportError("numba disabled by QGRAPH_PURE_NUMPY")
    from numba import njit

    @njit(cache=True, nogil=True)
    def _piece_nb(k2, w):
        z2 = k2 * (w * w)
        if abs(z2) < _SERIES_CUTOFF**2:
            co = 1 - z2 / 2 + z2**2 / 24 - z2**3 / 720 + z2**4 / 40320
            sinc = 1 - z2 / 6 + z2**2 / 120 - z2**3 / 5040 + z2**4 / 362880
        else:
            z = np.sqrt(z2)
            co = np.cos(z)
            sinc = np.sin(z) / z
        return co, w * sinc, k2 * w * sinc

    @njit(cache=True, nogil=True)
    def _transfer_batch_nb(lams, widths, values):
        n = lams.shape[0]
        out = np.empty((n, 2, 2), dtype=np.complex128)
        for i in range(n):
            a = 1.0 + 0j
            b = 0j
            c = 0j
            d = 1.0 + 0j
            for p in range(widths.shape[0]):
                w = widths[p]
                if w <= 0.0:
                    continue
                co, sw, ksk = _piece_nb(lams[i] - values[p], w)
                a, b, c, d = co * a + sw * c, co * b + sw * d, -ksk * a + co * c, -ksk * b + co * d
            out[i, 0, 0] = a
            out[i, 0, 1] = b
            out[i, 1, 0] = c
            out[i, 1, 1] = d
        return out

    def transfer_batch_numba(lams, widths, values):
        lams = np.ascontiguousarray(np.asarray(lams, dtype=np.complex128).ravel())
        widths = np.ascontiguousarray(widths, dtype=np.float64)
        values = np.ascontiguousarray(values, dtype=np.float64)
        return _transfer_batch_nb(lams, widths, values)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag in CI
    transfer_batch_numba = None
    HAVE_NUMBA = False


def transfer_batch(lams, widths, values):
    """Transfer matrices over a sequence of constant pieces, one per ``lam``.

    Returns an array of shape ``(len(lams), 2, 2)`` mapping ``(y, y')`` at the
    start of the first piece to ``(y, y')`` at the end of the last.
    """
    if HAVE_NUMBA:
        return transfer_batch_numba(lams, widths, values)
    return transfer_batch_numpy(lams, widths, values)


def backend():
    return "numba" if HAVE_NUMBA else "numpy"

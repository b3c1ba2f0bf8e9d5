"""Hot kernels with a compiled backend and a pure-numpy fallback.

The compiled module ``qamem._ext._wigner`` is used when it imports; setting
``QAMEM_BACKEND=python`` forces the fallback. ``BACKEND`` records which one
is active.
"""
from __future__ import annotations

import os

import numpy as np
from scipy.special import gammaln


def wigner_grid_py(rho, xvec, pvec):
    """Wigner function ``W(x + i p)`` of ``rho`` on a grid, shape ``(len(pvec), len(xvec))``.

    The sum runs over diagonals ``d = n - m`` of ``rho``. Along each diagonal
    the normalized radial functions

        g_m^d(x) = sqrt(m!/(m+d)!) e^{-x/2} x^{d/2} L_m^d(x),   x = 4|alpha|^2,

    obey a forward recurrence in ``m`` that is stable for all ``x``. The
    starting value ``g_0^d`` is formed in the log domain, so nothing
    overflows at large truncations.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    A = np.asarray(xvec, dtype=float)[None, :] + 1j * np.asarray(pvec, dtype=float)[:, None]
    x = 4.0 * np.abs(A) ** 2
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    ph = np.exp(1j * np.angle(A))
    phd = np.ones(A.shape, dtype=complex)
    sign = (-1.0) ** np.arange(dim)
    W = np.zeros(A.shape)
    for d in range(dim):
        if d:
            phd = phd * ph
            g = np.exp(-0.5 * x + 0.5 * d * logx - 0.5 * gammaln(d + 1.0))
        else:
            g = np.exp(-0.5 * x)
        g_prev = np.zeros_like(x)
        S = rho[0, d] * g
        for m in range(1, dim - d):
            g, g_prev = ((2 * m - 1 + d - x) * g - np.sqrt((m - 1) * (m - 1 + d)) * g_prev) / np.sqrt(m * (m + d)), g
            S = S + sign[m] * rho[m, m + d] * g
        W += S.real if d == 0 else 2.0 * (S * phd).real
    return (2.0 / np.pi) * W


try:
    if os.environ.get("QAMEM_BACKEND", "").lower() == "python":
        raise ImportError("compiled backend disabled by QAMEM_BACKEND")
    from ._ext._wigner import wigner_grid as wigner_grid_c
except ImportError:
    wigner_grid_c = None

BACKEND = "compiled" if wigner_grid_c is not None else "python"


def wigner_grid(rho, xvec, pvec):
    if wigner_grid_c is not None:
        return wigner_grid_c(
            np.ascontiguousarray(rho, dtype=complex),
            np.ascontiguousarray(xvec, dtype=float),
            np.ascontiguousarray(pvec, dtype=float),
        )
    return wigner_grid_py(rho, xvec, pvec)

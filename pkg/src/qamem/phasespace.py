"""Wigner functions on uniform phase-space grids.

The grid coordinate is the complex amplitude ``alpha = x + i p``, so a
coherent state ``|b>`` maps to ``(2/pi) exp(-2|alpha - b|^2)`` and
``sum W dx dp`` approximates ``tr(rho)``.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator
from scipy.ndimage import maximum_filter

from . import fockspace as fs
from ._kernels import wigner_grid
from .errors import CoverageWarning

DEFAULT_N = 201
COVERAGE_TOL = 1e-4
_HEADER = struct.Struct("<4dq")


@dataclass(frozen=True)
class WignerField:
    xvec: np.ndarray
    pvec: np.ndarray
    values: np.ndarray = field(repr=False)  # shape (len(pvec), len(xvec))

    @property
    def dx(self):
        return float(self.xvec[1] - self.xvec[0])

    @property
    def dp(self):
        return float(self.pvec[1] - self.pvec[0])

    def integral(self):
        return float(trapezoid(trapezoid(self.values, self.xvec, axis=1), self.pvec))

    def rows(self):
        """Long-format rows ``(x, p, w)``."""
        X, P = np.meshgrid(self.xvec, self.pvec)
        return list(zip(X.ravel().tolist(), P.ravel().tolist(), self.values.ravel().tolist()))

    def to_bytes(self):
        """Header ``(x_min, x_max, p_min, p_max, N)`` then ``N*N`` little-endian doubles."""
        if len(self.xvec) != len(self.pvec):
            raise ValueError("binary dump needs a square grid")
        head = _HEADER.pack(self.xvec[0], self.xvec[-1], self.pvec[0], self.pvec[-1], len(self.xvec))
        return head + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob):
        x0, x1, p0, p1, n = _HEADER.unpack_from(blob)
        vals = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(n, n).copy()
        return cls(np.linspace(x0, x1, n), np.linspace(p0, p1, n), vals)


def make_grid(extent, n=DEFAULT_N):
    v = np.linspace(-extent, extent, n)
    return v, v.copy()


def default_extent(op):
    """``beta + 3`` with ``beta`` the RMS amplitude of ``op`` (treated as a state)."""
    tr = np.trace(op).real
    nbar = fs.expectation(fs.number_op(op.shape[0]), op).real / tr if abs(tr) > 1e-12 else 0.0
    return float(np.sqrt(max(nbar, 0.0))) + 3.0


def wigner(op, xvec=None, pvec=None, n=DEFAULT_N, check_coverage=True):
    """Wigner function of a Fock-basis operator on a grid.

    Without explicit axes the grid is ``n x n`` over ``[-(beta+3), beta+3]^2``.
    Non-Hermitian input is evaluated on its Hermitian part.
    """
    op = np.asarray(op, dtype=complex)
    if xvec is None or pvec is None:
        xvec, pvec = make_grid(default_extent(op), n)
    herm = op if fs.is_hermitian(op, 1e-10) else fs.hermitian_part(op)
    vals = wigner_grid(herm, xvec, pvec)
    fld = WignerField(np.asarray(xvec, float), np.asarray(pvec, float), vals)
    if check_coverage:
        peak = float(np.abs(vals).max())
        edge = max(
            np.abs(vals[0]).max(), np.abs(vals[-1]).max(), np.abs(vals[:, 0]).max(), np.abs(vals[:, -1]).max()
        )
        if peak > 0 and edge > COVERAGE_TOL * peak:
            warnings.warn(
                f"Wigner grid boundary reaches {edge / peak:.2g} of the peak; widen the grid",
                CoverageWarning,
                stacklevel=2,
            )
    return fld


def min_negativity(fld: WignerField):
    """Smallest grid value (negative values flag nonclassicality)."""
    return float(fld.values.min())


def local_maxima(fld: WignerField, rel_height=0.1, size=5):
    """Complex positions of local maxima above ``rel_height`` of the peak."""
    v = fld.values
    mask = (v == maximum_filter(v, size=size, mode="nearest")) & (v > rel_height * v.max())
    ip, ix = np.nonzero(mask)
    return fld.xvec[ix] + 1j * fld.pvec[ip]


def rotate_field(fld: WignerField, angle):
    """Field of the state rotated by ``angle``: ``W'(alpha) = W(alpha e^{-i angle})``."""
    interp = RegularGridInterpolator(
        (fld.pvec, fld.xvec), fld.values, method="cubic", bounds_error=False, fill_value=0.0
    )
    X, P = np.meshgrid(fld.xvec, fld.pvec)
    src = (X + 1j * P) * np.exp(-1j * angle)
    vals = interp(np.stack([src.imag.ravel(), src.real.ravel()], axis=1)).reshape(X.shape)
    return WignerField(fld.xvec, fld.pvec, vals)


def coherent_pattern(xvec, pvec, beta):
    """Closed-form Wigner function of ``|beta>`` on a grid."""
    A = np.asarray(xvec)[None, :] + 1j * np.asarray(pvec)[:, None]
    return (2.0 / np.pi) * np.exp(-2.0 * np.abs(A - beta) ** 2)

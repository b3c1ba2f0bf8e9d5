"""Operators and states on a truncated Fock space.

Everything here is a dense ``complex128`` numpy array of shape ``(D, D)``
(operators, density matrices) or ``(D,)`` (kets). Level ``k`` of the
truncated space is index ``k``; levels run ``0 .. D-1``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import DimensionMismatchError, InvalidDimensionError, TruncationWarning

TAIL_TOL = 1e-9


def _check_dim(dim):
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def annihilation(dim):
    """Lowering operator with ``<k|a|k+1> = sqrt(k+1)``."""
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim):
    return annihilation(dim).conj().T


def number_op(dim):
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def identity(dim):
    return np.eye(_check_dim(dim), dtype=complex)


def fock_ket(dim, k):
    dim = _check_dim(dim)
    if not 0 <= k < dim:
        raise InvalidDimensionError(f"level {k} outside truncated space of size {dim}")
    ket = np.zeros(dim, dtype=complex)
    ket[k] = 1.0
    return ket


def fock_dm(dim, k):
    ket = fock_ket(dim, k)
    return np.outer(ket, ket.conj())


def poisson_tail(mean, dim):
    """Probability mass of Poisson(mean) on levels >= dim."""
    return float(poisson.sf(dim - 1, mean))


def default_dim(beta, tol=TAIL_TOL, margin=0.2):
    """Smallest D whose Poisson(|beta|^2) tail is below ``tol``, plus a margin."""
    mean = abs(beta) ** 2
    dim = 2
    while poisson_tail(mean, dim) >= tol:
        dim += 1
    return max(2, int(math.ceil(dim * (1.0 + margin))))


def coherent_ket(dim, alpha, warn=True):
    """Truncated coherent ket, renormalized after truncation.

    Amplitudes are built in the log domain so large ``|alpha|`` and large
    ``dim`` do not overflow.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    if warn and poisson_tail(abs(alpha) ** 2, dim) > TAIL_TOL:
        warnings.warn(
            f"coherent state |{alpha:.3g}> loses more than {TAIL_TOL:g} "
            f"probability at D={dim}",
            TruncationWarning,
            stacklevel=2,
        )
    k = np.arange(dim)
    if alpha == 0:
        ket = np.zeros(dim, dtype=complex)
        ket[0] = 1.0
        return ket
    r, phi = abs(alpha), np.angle(alpha)
    logmag = -0.5 * r * r + k * np.log(r) - 0.5 * gammaln(k + 1)
    ket = np.exp(logmag - logmag.max()) * np.exp(1j * phi * k)
    return ket / np.linalg.norm(ket)


def coherent_state(dim, alpha, warn=True):
    ket = coherent_ket(dim, alpha, warn=warn)
    return np.outer(ket, ket.conj())


def lobe_phases(n, theta=0.0):
    """Lobe phases ``theta + (2j+1)pi/n`` for ``j = 1..n`` (list index ``j-1``)."""
    j = np.arange(1, n + 1)
    return theta + (2 * j + 1) * np.pi / n


def lobe_amplitudes(beta, n, theta=0.0):
    return beta * np.exp(1j * lobe_phases(n, theta))


def lobe_kets(dim, beta, n, theta=0.0, warn=True):
    if n < 1:
        raise ValueError("need at least one lobe")
    if beta < 0:
        raise ValueError("lobe amplitude must be nonnegative")
    return [coherent_ket(dim, a, warn=warn) for a in lobe_amplitudes(beta, n, theta)]


def lobe_states(dim, beta, n, theta=0.0, warn=True):
    """The ``n`` symmetric coherent lobes as density matrices."""
    return [np.outer(k, k.conj()) for k in lobe_kets(dim, beta, n, theta, warn=warn)]


def rotation_unitary(dim, n):
    """Phase rotation ``exp(i 2pi/n a^dag a)``; maps ``|alpha>`` to ``|alpha e^{i2pi/n}>``."""
    dim = _check_dim(dim)
    return np.diag(np.exp(2j * np.pi * np.arange(dim) / n))


def rotate(rho, n, steps=1):
    """Rotate an operator by ``steps * 2pi/n`` in phase space."""
    ph = np.exp(2j * np.pi * steps * np.arange(rho.shape[0]) / n)
    return ph[:, None] * rho * ph.conj()[None, :]


def _same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def trace_distance(a, b):
    """Half the trace norm of ``a - b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    _same_shape(a, b)
    return 0.5 * float(np.linalg.svd(a - b, compute_uv=False).sum())


def expectation(obs, rho):
    obs = np.asarray(obs)
    rho = np.asarray(rho)
    _same_shape(obs, rho)
    # tr(obs @ rho) without forming the product
    return complex(np.sum(obs * rho.T))


def purity(rho):
    return float(np.real(np.sum(rho * rho.T)))


def hermitian_part(a):
    return 0.5 * (a + a.conj().T)


def is_hermitian(a, tol=1e-12):
    scale = max(1.0, float(np.abs(a).max()))
    return float(np.abs(a - a.conj().T).max()) <= tol * scale


def check_density_matrix(rho, tol=1e-10, pos_tol=1e-8):
    """Raise ``ValueError`` unless ``rho`` is a valid density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatchError(f"density matrix must be square, got {rho.shape}")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise ValueError(f"trace {tr:.3g} differs from 1")
    if float(np.abs(rho - rho.conj().T).max()) > tol:
        raise ValueError("density matrix is not Hermitian")
    wmin = float(np.linalg.eigvalsh(hermitian_part(rho)).min())
    if wmin < -pos_tol:
        raise ValueError(f"density matrix has negative eigenvalue {wmin:.3g}")
    return rho


def clip_to_state(rho):
    """Hermitize, clip negative eigenvalues and renormalize.

    Returns the repaired state and the clipped (negative) eigenvalue mass.
    """
    w, v = np.linalg.eigh(hermitian_part(rho))
    clipped = float(-w[w < 0].sum())
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real, clipped


def random_density_matrix(dim, rng, rank=None):
    """Random full-rank (or rank-limited) density matrix for property tests."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real

"""Metastable phases built from the slow Liouvillian modes.

The slow modes ``R_2 .. R_n`` are only defined up to a rotation inside each
conjugate pair (and a sign for real modes). Before building phases the
hermitized modes are put in a fixed gauge using the lobe coherent states
as a compass: lobe 1 lands on the corner of coefficient space that the
sign patterns for ``n = 3`` and ``n = 4`` expect, and the remaining lobes
follow counter-clockwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import poisson

from . import fockspace as fs
from .errors import ManifoldError
from .lindblad import lobe_offset, unvec, vec
from .spectral import SpectralDecomposition, timescales

MIN_GAP_RATIO = 2.0
SUM_TOL = 1e-6

# sign patterns for (R_2, R_3[, R_4]); 0 means the mode is absent
_PATTERNS = {
    3: [("min", None), ("max", "min"), ("max", "max")],
    4: [("min", "min", "max"), ("max", "min", "min"), ("max", "max", "max"), ("min", "max", "min")],
}
# angle of lobe 1 in the (R_2, R_3) pair plane for the patterns above
_PAIR_ANGLE = {3: np.pi, 4: 1.25 * np.pi}


@dataclass(frozen=True)
class MetastableManifold:
    n: int
    phases: list = field(repr=False)
    coeffs: np.ndarray  # (n, n-1): mu_l = rho_ss + sum_j coeffs[l, j] R_j
    extreme_coeffs: list  # (c_min, c_max) per slow mode
    herm_right: np.ndarray = field(repr=False)  # (D^2, n-1), gauge fixed
    herm_left: np.ndarray = field(repr=False)
    steady_state: np.ndarray = field(repr=False)
    method: str = "pattern"
    recentre: float = 0.0  # size of the shift applied to enforce the sum rule

    @property
    def dim(self):
        return self.steady_state.shape[0]

    def state(self, p):
        """``sum_l p_l mu_l`` for a quasiprobability vector."""
        return np.tensordot(np.asarray(p, dtype=float), np.asarray(self.phases), axes=1)

    def mode_coords(self, rho):
        return np.real(self.herm_left.conj().T @ vec(rho))

    def project(self, rho):
        """``rho_ss + sum_j tr(L_j rho) R_j``."""
        y = self.mode_coords(rho)
        return self.steady_state * np.trace(rho).real + unvec(self.herm_right @ y, self.dim)


def _slow_structure(dec: SpectralDecomposition, n):
    """Group modes ``1 .. n-1`` (0-based) into reals and conjugate pairs."""
    groups = []
    j = 1
    while j < n:
        if dec.mode_kind(j) == "real":
            groups.append((j,))
            j += 1
        else:
            if j + 1 >= n:
                raise ManifoldError(f"conjugate pair straddles the manifold edge at mode {j + 1}")
            groups.append((j, j + 1))
            j += 2
    return groups


def _lobe_reference(dec: SpectralDecomposition, n):
    p = dec.params
    rho = dec.steady_state
    radius = np.sqrt(max(fs.expectation(fs.number_op(p.dim), rho).real, 1e-12))
    return fs.lobe_states(p.dim, radius, n, lobe_offset(p), warn=False)


def gauge_fix(dec: SpectralDecomposition, n=None):
    """Hermitian slow modes ``(R, L)`` as ``(D^2, n-1)`` arrays in the canonical gauge."""
    n = dec.params.n if n is None else n
    if dec.n_retained < n:
        raise ManifoldError(f"decomposition retains {dec.n_retained} modes, need {n}")
    R = dec.herm_right[:, 1:n].copy()
    L = dec.herm_left[:, 1:n].copy()
    lobes = _lobe_reference(dec, n)
    vl = np.array([vec(rho) for rho in lobes]).T
    for grp in _slow_structure(dec, n):
        cols = [g - 1 for g in grp]
        y = np.real(L[:, cols].conj().T @ vl)  # (len(grp), n)
        if len(cols) == 1:
            c = cols[0]
            if y[0, 0] < 0:
                R[:, c] *= -1
                L[:, c] *= -1
            continue
        a, b = cols
        z = y[0] + 1j * y[1]
        if np.imag(z[1] * np.conj(z[0])) < 0:
            R[:, b] *= -1
            L[:, b] *= -1
            z = z.conj()
        target = _PAIR_ANGLE.get(n, 0.0) if grp[0] == 1 else 0.0
        phi = target - np.angle(z[0])
        cs, sn = np.cos(phi), np.sin(phi)
        R[:, a], R[:, b] = cs * R[:, a] - sn * R[:, b], sn * R[:, a] + cs * R[:, b]
        L[:, a], L[:, b] = cs * L[:, a] - sn * L[:, b], sn * L[:, a] + cs * L[:, b]
    return R, L


def _extremes(L, dim):
    out = []
    for j in range(L.shape[1]):
        w = np.linalg.eigvalsh(fs.hermitian_part(unvec(L[:, j], dim)))
        out.append((float(w[0]), float(w[-1])))
    return out


def extreme_coefficients(dec: SpectralDecomposition, n=None):
    """``(c_min, c_max)``: extreme eigenvalues of each gauge-fixed dual ``L_2 .. L_n``."""
    n = dec.params.n if n is None else n
    _, L = gauge_fix(dec, n)
    for j in range(L.shape[1]):
        Lj = unvec(L[:, j], dec.dim)
        if not fs.is_hermitian(Lj, 1e-8):
            raise ManifoldError(f"left mode {j + 2} is not Hermitian after hermitization")
    return _extremes(L, dec.dim)


def _pattern_coeffs(dec, n, extremes):
    groups = _slow_structure(dec, n)
    if n == 3 and [len(g) for g in groups] == [2]:
        order = [0, 1]
    elif n == 4 and sorted(len(g) for g in groups) == [1, 2]:
        pair = next(g for g in groups if len(g) == 2)
        real = next(g for g in groups if len(g) == 1)
        order = [pair[0] - 1, pair[1] - 1, real[0] - 1]
    else:
        return None
    C = np.zeros((n, n - 1))
    for l, row in enumerate(_PATTERNS[n]):
        for slot, which in enumerate(row):
            if which is None:
                continue
            col = order[slot]
            C[l, col] = extremes[col][0 if which == "min" else 1]
    return C


def build_phases(dec: SpectralDecomposition, n=None, method="auto"):
    """Construct the ``n`` metastable phases ``mu_l``.

    ``method`` is ``"pattern"`` (explicit sign patterns, ``n`` in {3, 4}),
    ``"symmetry"`` (extreme state along lobe 1 rotated onto the others) or
    ``"auto"`` (pattern where available).
    """
    n = dec.params.n if n is None else n
    if n < 2:
        raise ManifoldError("a metastable manifold needs n >= 2")
    ts = timescales(dec)
    if ts.gap_ratio(n) < MIN_GAP_RATIO:
        raise ManifoldError(
            f"gap ratio tau_{n}/tau_{n + 1} = {ts.gap_ratio(n):.3g} < {MIN_GAP_RATIO}: no metastability"
        )
    dim = dec.dim
    R, L = gauge_fix(dec, n)
    extremes = _extremes(L, dim)

    C = None
    used = method
    if method in ("auto", "pattern"):
        C = _pattern_coeffs(dec, n, extremes) if n in _PATTERNS else None
        if C is None and method == "pattern":
            raise ManifoldError(f"no explicit sign pattern for n={n} with this eigenvalue layout")
        used = "pattern"
    if C is None:
        used = "symmetry"
        C = _rotated_coeffs(dec, R, L, n)

    shift = C.mean(axis=0)
    C = C - shift
    rho_ss = dec.steady_state
    phases = [rho_ss + unvec(R @ C[l], dim) for l in range(n)]
    phases = [fs.hermitian_part(mu) for mu in phases]

    mean = sum(phases) / n
    err = fs.trace_distance(mean, rho_ss)
    if err > SUM_TOL:
        raise ManifoldError(f"phase average misses the steady state by {err:.3g}")
    for mu in phases:
        if abs(np.trace(mu) - 1) > 1e-8:
            raise ManifoldError("metastable phase is not trace one")
    recentre = float(np.linalg.norm(shift))
    return MetastableManifold(n, phases, C, extremes, R, L, rho_ss, used, recentre)


def _rotated_coeffs(dec, R, L, n):
    dim = dec.dim
    lobe1 = _lobe_reference(dec, n)[0]
    w = np.real(L.conj().T @ vec(lobe1))
    F = fs.hermitian_part(unvec(L @ w, dim))
    _, v = np.linalg.eigh(F)
    psi = v[:, -1]
    top = np.outer(psi, psi.conj())
    C = np.empty((n, n - 1))
    for l in range(n):
        C[l] = np.real(L.conj().T @ vec(fs.rotate(top, n, l)))
    return C


def _dual_matrix(man: MetastableManifold):
    M = np.hstack([np.ones((man.n, 1)), man.coeffs])
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e12:
        raise ManifoldError("metastable phases are degenerate; dual system is singular")
    return M


def quasiprobabilities(man: MetastableManifold, rho):
    """Coefficients ``p_l`` with ``sum_l p_l mu_l`` equal to the projection of ``rho``."""
    y = man.mode_coords(rho)
    rhs = np.concatenate([[np.trace(rho).real], y])
    return np.linalg.solve(_dual_matrix(man).T, rhs)


def dual_functionals(man: MetastableManifold):
    """Hermitian operators ``P_l`` with ``p_l(rho) = tr(P_l rho)``."""
    Minv = np.linalg.inv(_dual_matrix(man).T)  # p = Minv @ [tr rho, y]
    dim = man.dim
    ops = []
    for l in range(man.n):
        P = Minv[l, 0] * np.eye(dim, dtype=complex) + unvec(man.herm_left @ Minv[l, 1:], dim)
        ops.append(fs.hermitian_part(P))
    return ops


def evolve_in_manifold(man: MetastableManifold, dec: SpectralDecomposition, rho0, times):
    """Quasiprobabilities of ``rho_ss + sum_{j<=n} tr(L_j^dag rho0) e^{lambda_j t} R_j``.

    Returns an array of shape ``(len(times), n)``.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    n = man.n
    lam = dec.eigenvalues[1:n]
    c = dec.left[:, 1:n].conj().T @ vec(rho0)
    G = man.herm_left.conj().T @ dec.right[:, 1:n]  # (n-1, n-1)
    amp = c[None, :] * np.exp(np.outer(times, lam))
    y = np.real(amp @ G.T)
    tr = np.trace(rho0).real
    rhs = np.hstack([np.full((len(times), 1), tr), y])
    return np.linalg.solve(_dual_matrix(man).T, rhs.T).T


def manifold_expectation(man: MetastableManifold, obs, p):
    """``tr(obs sum_l p_l mu_l)`` for each row of ``p``."""
    vals = np.array([fs.expectation(obs, mu) for mu in man.phases])
    return np.asarray(p) @ vals


def fit_poisson_mean(populations):
    """Least-squares Poisson mean for a Fock population vector."""
    pops = np.real(np.asarray(populations))
    k = np.arange(len(pops))
    guess = float(np.dot(k, pops) / max(pops.sum(), 1e-300))

    def loss(mu):
        return float(np.sum((poisson.pmf(k, mu) - pops) ** 2))

    res = minimize_scalar(loss, bounds=(max(1e-6, 0.25 * guess), 4 * guess + 1), method="bounded")
    return float(res.x)

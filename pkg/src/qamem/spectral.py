"""Dense eigendecomposition of the Liouvillian.

The generator commutes with the Z_n phase rotation, so it is block
diagonal in the sectors ``(k - l) mod n``. By default each block is
diagonalized on its own; the result is the same full set of ``D^2``
eigenpairs at roughly ``1/n^2`` of the cost. ``use_symmetry=False``
diagonalizes the whole matrix in one call.

Left modes come from the inverse of the right eigenvector matrix, which
makes the pair biorthonormal, ``tr(L_j^dag R_k) = delta_jk``, even inside
degenerate eigenspaces.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import fockspace as fs
from .errors import DegeneracyError, DegeneracyWarning, PositivityError, SolverError
from .lindblad import Liouvillian, ModelParams, symmetry_sectors, unvec, vec

ZERO_TOL = 1e-8
CLIP_BUDGET = 1e-6


def _block_eig(mat, vectors=True):
    try:
        if not vectors:
            return sla.eigvals(mat, overwrite_a=False, check_finite=False), None, None
        w, v = sla.eig(mat, check_finite=False)
        vinv = sla.inv(v, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise SolverError("eigensolver returned non-finite eigenvalues")
    return w, v, vinv


def sort_order(eigenvalues, tol=None):
    """Indices sorting eigenvalues by decreasing real part.

    Real parts within ``tol`` of each other count as ties, broken by
    ascending ``|Im|`` and then positive imaginary part first.
    """
    lam = np.asarray(eigenvalues)
    if tol is None:
        tol = 1e-11 * max(1.0, float(np.abs(lam).max(initial=0.0)))
    order = np.argsort(-lam.real, kind="stable")
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and lam.real[order[i]] - lam.real[order[j]] <= tol:
            j += 1
        cluster = order[i:j]
        key = sorted(cluster, key=lambda c: (round(abs(lam[c].imag) / tol), -np.sign(lam[c].imag)))
        out.extend(key)
        i = j
    return np.asarray(out, dtype=int)


def liouvillian_eigenvalues(L: Liouvillian, use_symmetry=True):
    """All eigenvalues, sorted, without eigenvectors (for sweeps)."""
    if use_symmetry:
        lam = np.concatenate(
            [_block_eig(L.matrix[np.ix_(idx, idx)], vectors=False)[0] for idx in L.sectors() if len(idx)]
        )
    else:
        lam = _block_eig(L.matrix, vectors=False)[0]
    return lam[sort_order(lam)]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Sorted eigenvalues with biorthonormal right/left modes.

    ``right``/``left`` hold vectorized modes as columns, so
    ``unvec(right[:, j])`` is ``R_j``. The first ``n_retained`` modes are
    gauge fixed: real-eigenvalue modes are Hermitian and conjugate pairs
    satisfy ``R_{j+1} = R_j^dag``. ``herm_right``/``herm_left`` hold the
    Hermitian combinations of those modes (real pairs stay as they are,
    conjugate pairs become ``(R + R^dag)/2`` and ``(R - R^dag)/2i``).
    """

    params: ModelParams
    eigenvalues: np.ndarray
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    herm_right: np.ndarray = field(repr=False)
    herm_left: np.ndarray = field(repr=False)
    steady_state: np.ndarray = field(repr=False)
    n_retained: int = 0
    sectors: np.ndarray = field(default=None, repr=False)
    pair_start: np.ndarray = field(default=None, repr=False)
    zero_modes: int = 1
    clipped_mass: float = 0.0

    @property
    def dim(self):
        return self.params.dim

    @property
    def complete(self):
        return self.right.shape[1] == self.dim**2

    def right_mode(self, j):
        return unvec(self.right[:, j], self.dim)

    def left_mode(self, j):
        return unvec(self.left[:, j], self.dim)

    def herm_right_mode(self, j):
        return unvec(self.herm_right[:, j], self.dim)

    def herm_left_mode(self, j):
        return unvec(self.herm_left[:, j], self.dim)

    def coefficients(self, rho):
        """``tr(L_j^dag rho)`` for every stored mode."""
        return self.left.conj().T @ vec(rho)

    def mode_kind(self, j):
        """``"real"``, ``"pair"`` (first of a conjugate pair) or ``"partner"``."""
        if j >= self.n_retained:
            raise IndexError(f"mode {j} is not among the {self.n_retained} retained modes")
        if self.pair_start[j]:
            return "pair"
        if j > 0 and self.pair_start[j - 1]:
            return "partner"
        return "real"


def _hermitian_gauge(r, l):
    """Rephase a real-eigenvalue mode so that ``R`` is Hermitian."""
    R = unvec(r)
    h = R + R.conj().T
    if np.linalg.norm(h) < 1e-6 * np.linalg.norm(R):
        h = 1j * (R - R.conj().T)
    s = vec(h) @ r.conj() / (r.conj() @ r)  # h = s * R in the exact case
    s = s / abs(s)
    r2 = s * r
    l2 = l / np.conj(s)
    return vec(fs.hermitian_part(unvec(r2))), vec(fs.hermitian_part(unvec(l2)))


def _sector_labels(right, dim, n):
    sectors = symmetry_sectors(dim, n)
    weight = np.array([np.linalg.norm(right[idx], axis=0) for idx in sectors])
    return np.argmax(weight, axis=0)


def _dagger_vec(x):
    return vec(unvec(x).conj().T)


def decompose(L: Liouvillian, k=None, use_symmetry=True, reference_state=None):
    """Full eigendecomposition of ``L``.

    ``k`` is the number of low-lying modes to gauge fix and hermitize
    (default ``n + 1``). ``reference_state`` selects the steady state when
    the zero eigenvalue is degenerate (``gamma1 = 0``); it defaults to the
    vacuum.
    """
    p = L.params
    dim = p.dim
    ndim = dim * dim
    k = p.n + 1 if k is None else int(k)
    if not 1 <= k <= ndim:
        raise ValueError(f"cannot retain {k} modes out of {ndim}")

    if use_symmetry:
        lams, rights, lefts = [], [], []
        for idx in L.sectors():
            if not len(idx):
                continue
            w, v, vinv = _block_eig(L.matrix[np.ix_(idx, idx)])
            r = np.zeros((ndim, len(idx)), dtype=complex)
            lf = np.zeros((ndim, len(idx)), dtype=complex)
            r[idx] = v
            lf[idx] = vinv.conj().T
            lams.append(w)
            rights.append(r)
            lefts.append(lf)
        lam = np.concatenate(lams)
        right = np.concatenate(rights, axis=1)
        left = np.concatenate(lefts, axis=1)
    else:
        lam, v, vinv = _block_eig(L.matrix)
        right, left = v, vinv.conj().T

    order = sort_order(lam)
    lam, right, left = lam[order], right[:, order], left[:, order]
    scale = max(1.0, float(np.abs(lam).max()))
    itol = 1e-9 * scale

    sector = _sector_labels(right, dim, p.n)
    nzero = max(1, int(np.sum(np.abs(lam) <= ZERO_TOL)))
    if abs(lam[0]) > ZERO_TOL * scale:
        raise SolverError(f"no zero eigenvalue found (|lambda_1| = {abs(lam[0]):.3g})")
    if nzero > 1 and p.gamma1 > 0:
        warnings.warn(
            f"{nzero} eigenvalues within {ZERO_TOL:g} of zero with gamma1 > 0",
            DegeneracyWarning,
            stacklevel=2,
        )

    def is_real(j):
        return (2 * sector[j]) % p.n == 0 and abs(lam[j].imag) <= itol

    # walk pairs over the whole retained range; never cut a pair in half
    right = right.copy()
    left = left.copy()
    lam = lam.copy()
    j = 0
    while j < k:
        if is_real(j):
            lam[j] = lam[j].real
            right[:, j], left[:, j] = _hermitian_gauge(right[:, j], left[:, j])
            j += 1
        else:
            if j + 1 >= ndim or abs(lam[j + 1] - lam[j].conj()) > 1e-7 * scale:
                raise SolverError(f"eigenvalue {lam[j]:.6g} has no conjugate partner")
            if (sector[j] + sector[j + 1]) % p.n:
                raise SolverError(f"modes {j + 1} and {j + 2} are not in conjugate sectors")
            if j + 1 == k:
                k += 1
            if lam[j].imag < 0:
                # keep +Im first so the partner is always the dagger of mode j
                right[:, [j, j + 1]] = right[:, [j + 1, j]]
                left[:, [j, j + 1]] = left[:, [j + 1, j]]
                sector[[j, j + 1]] = sector[[j + 1, j]]
            lam[j] = complex(lam[j].real, abs(lam[j].imag))
            lam[j + 1] = lam[j].conj()
            right[:, j + 1] = _dagger_vec(right[:, j])
            left[:, j + 1] = _dagger_vec(left[:, j])
            j += 2

    # zero mode: the left partner of a trace-preserving generator is the identity
    if nzero == 1:
        r0 = right[:, 0]
        tr0 = np.trace(unvec(r0))
        right[:, 0] = r0 / tr0
        left[:, 0] = vec(np.eye(dim)).astype(complex)

    herm_right = right[:, :k].copy()
    herm_left = left[:, :k].copy()
    pair_start = np.zeros(k, dtype=bool)
    j = 0
    while j < k:
        if is_real(j):
            j += 1
            continue
        pair_start[j] = True
        ra, rb = right[:, j], right[:, j + 1]
        la, lb = left[:, j], left[:, j + 1]
        herm_right[:, j] = 0.5 * (ra + rb)
        herm_right[:, j + 1] = (ra - rb) / 2j
        herm_left[:, j] = 0.5 * (la + lb)
        herm_left[:, j + 1] = (la - lb) / 2j
        for c in (j, j + 1):
            norm = herm_left[:, c].conj() @ herm_right[:, c]
            herm_left[:, c] /= np.conj(norm)
        j += 2

    if nzero == 1:
        rho_ss, clipped = _steady_from_mode(unvec(right[:, 0], dim))
    else:
        ref = fs.fock_dm(dim, 0) if reference_state is None else np.asarray(reference_state)
        c = left[:, :nzero].conj().T @ vec(ref)
        rho_ss, clipped = _steady_from_mode(unvec(right[:, :nzero] @ c, dim))

    return SpectralDecomposition(
        params=p,
        eigenvalues=lam,
        right=right,
        left=left,
        herm_right=herm_right,
        herm_left=herm_left,
        steady_state=rho_ss,
        n_retained=k,
        sectors=sector,
        pair_start=pair_start,
        zero_modes=nzero,
        clipped_mass=clipped,
    )


def _steady_from_mode(r):
    r = fs.hermitian_part(r)
    tr = np.trace(r).real
    if abs(tr) < 1e-14:
        raise SolverError("zero mode is traceless; cannot normalize steady state")
    rho, clipped = fs.clip_to_state(r / tr)
    if clipped > CLIP_BUDGET:
        raise PositivityError(f"steady state needed {clipped:.3g} of negative mass clipped")
    return rho, clipped


def steady_state(L: Liouvillian, reference_state=None, use_symmetry=True):
    """Steady state of ``L``.

    With ``gamma1 > 0`` the zero eigenvalue must be simple; only the
    invariant sector ``q = 0`` is diagonalized. With ``gamma1 = 0`` the
    long-time limit of ``reference_state`` (default vacuum) is returned.
    """
    p = L.params
    idx = L.sectors()[0] if use_symmetry else np.arange(p.dim**2)
    block = L.matrix[np.ix_(idx, idx)]
    w, v, vinv = _block_eig(block)
    scale = max(1.0, float(np.abs(w).max()))
    near = np.flatnonzero(np.abs(w) <= ZERO_TOL)
    if np.abs(w).min() > ZERO_TOL * scale:
        raise SolverError("no zero eigenvalue found")
    if len(near) == 0:
        near = np.array([int(np.argmin(np.abs(w)))])
    if len(near) > 1 and p.gamma1 > 0:
        raise DegeneracyError(f"{len(near)} zero eigenvalues with gamma1 > 0")
    ndim = p.dim**2
    full_r = np.zeros((ndim, len(near)), dtype=complex)
    full_r[idx] = v[:, near]
    if len(near) == 1:
        r = unvec(full_r[:, 0], p.dim)
    else:
        ref = fs.fock_dm(p.dim, 0) if reference_state is None else np.asarray(reference_state)
        full_l = np.zeros((ndim, len(near)), dtype=complex)
        full_l[idx] = vinv[near].conj().T
        r = unvec(full_r @ (full_l.conj().T @ vec(ref)), p.dim)
    return _steady_from_mode(r)[0]


@dataclass(frozen=True)
class Timescales:
    tau: np.ndarray  # tau[j] for 1-based mode j+1; tau[0] is inf (steady state)

    def __getitem__(self, j):
        """1-based access: ``ts[4]`` is tau_4."""
        return float(self.tau[j - 1])

    def gap_ratio(self, n):
        return float(self.tau[n - 1] / self.tau[n])

    @property
    def infinite(self):
        return bool(np.isinf(self.tau[1:]).any())


def timescales(eigenvalues) -> Timescales:
    """``tau_j = -1/Re(lambda_j)``; the zero mode gets ``inf``."""
    lam = eigenvalues.eigenvalues if isinstance(eigenvalues, SpectralDecomposition) else np.asarray(eigenvalues)
    re = -lam.real
    with np.errstate(divide="ignore"):
        tau = np.where(re > 0, 1.0 / np.where(re > 0, re, 1.0), np.inf)
    tau[0] = np.inf
    return Timescales(tau)


def mode_residuals(L: Liouvillian, dec: SpectralDecomposition, count=None):
    """``||L R_j - lambda_j R_j|| / ||L||`` for the first ``count`` modes."""
    count = dec.n_retained if count is None else count
    r = dec.right[:, :count]
    res = L.matrix @ r - r * dec.eigenvalues[:count]
    return np.linalg.norm(res, axis=0) / np.linalg.norm(L.matrix, 2)


def spectrum_rows(eigenvalues):
    """Rows ``(index, re_lambda, im_lambda, tau)`` with 1-based index."""
    ts = timescales(eigenvalues)
    lam = eigenvalues.eigenvalues if isinstance(eigenvalues, SpectralDecomposition) else np.asarray(eigenvalues)
    return [(j + 1, float(l.real), float(l.imag), float(ts.tau[j])) for j, l in enumerate(lam)]

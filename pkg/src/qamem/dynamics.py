"""Time evolution of density matrices.

``evolve_spectral`` expands the initial state over the eigenmodes and is the
default engine. ``evolve_integrate`` integrates the master equation
directly with an adaptive Runge-Kutta (or implicit) scheme and serves as an
independent check on the mode sum.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import fockspace as fs
from .errors import IncompleteBasisError, StiffnessError
from .lindblad import Liouvillian, unvec, vec
from .spectral import SpectralDecomposition

MODE_CUTOFF = 1e-12


@dataclass
class Trajectory:
    times: np.ndarray
    exp_a: np.ndarray
    purity: np.ndarray
    states: list | None = field(default=None, repr=False)

    @property
    def abs_exp_a(self):
        return np.abs(self.exp_a)

    def rows(self):
        """CSV rows ``(t, re_exp_a, im_exp_a, abs_exp_a, purity)``."""
        return [
            (float(t), float(a.real), float(a.imag), float(abs(a)), float(pu))
            for t, a, pu in zip(self.times, self.exp_a, self.purity)
        ]


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("times must be a nonempty 1-D sequence")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if times[0] < 0:
        raise ValueError("times must be nonnegative")
    return times


def geometric_times(t_min, t_max, num, include_zero=True):
    """Log-spaced grid from ``t_min`` to ``t_max``, optionally led by ``t=0``."""
    t = np.geomspace(t_min, t_max, num)
    return np.concatenate([[0.0], t]) if include_zero else t


def evolve_spectral(dec: SpectralDecomposition, rho0, times, keep_states=False):
    """``rho(t) = sum_j tr(L_j^dag rho0) e^{lambda_j t} R_j``."""
    times = _check_times(times)
    dim = dec.dim
    rho0 = np.asarray(rho0)
    c = dec.coefficients(rho0)
    weight = np.abs(c) * np.linalg.norm(dec.right, axis=0)
    keep = weight > MODE_CUTOFF
    keep[0] = True
    recon = dec.right[:, keep] @ c[keep]
    resid = float(np.linalg.norm(recon - vec(rho0)))
    if resid > 1e-6:
        raise IncompleteBasisError(f"mode sum misses the initial state by {resid:.3g}")
    R = dec.right[:, keep]
    lam = dec.eigenvalues[keep]
    c = c[keep]
    a_vec = vec(fs.annihilation(dim).T)  # tr(a X) = vec(a^T) . vec(X)
    a_modes = a_vec @ R
    exp_a = np.empty(len(times), dtype=complex)
    pur = np.empty(len(times))
    states = [] if keep_states else None
    for i, t in enumerate(times):
        amp = c * np.exp(lam * t)
        v = R @ amp
        exp_a[i] = a_modes @ amp
        pur[i] = float(np.real(np.vdot(v, v)))
        tr = np.trace(unvec(v, dim))
        if abs(tr - 1) > 1e-8:
            raise IncompleteBasisError(f"trace drifted to {tr:.10g} at t={t:g}")
        if keep_states:
            states.append(fs.hermitian_part(unvec(v, dim)))
    return Trajectory(times, exp_a, pur, states)


def evolve_integrate(L: Liouvillian, rho0, times, rtol=1e-8, atol=1e-10, method="Radau", keep_states=False):
    """Direct adaptive integration of ``d rho/dt = L rho``.

    The high-photon modes make the system stiff, so the default is Radau
    with the Liouvillian as exact Jacobian. Explicit methods (``"DOP853"``,
    ``"RK45"``) work for short windows.
    """
    times = _check_times(times)
    dim = L.dim
    M = L.matrix
    y0 = vec(np.asarray(rho0, dtype=complex))
    implicit = method in ("Radau", "BDF", "LSODA")
    kwargs = {}
    if implicit:
        # implicit solvers in scipy want a real state: stack (Re, Im)
        M = np.block([[M.real, -M.imag], [M.imag, M.real]])
        y0 = np.concatenate([y0.real, y0.imag])
        kwargs["jac"] = M
    t0 = 0.0 if times[0] > 0 else times[0]
    sol = solve_ivp(
        lambda t, y: M @ y,
        (t0, times[-1]),
        y0,
        method=method,
        t_eval=times,
        rtol=rtol,
        atol=atol,
        **kwargs,
    )
    if not sol.success:
        raise StiffnessError(
            f"integrator stopped: {sol.message}; the spectral path (evolve_spectral) handles stiff cases"
        )
    a = fs.annihilation(dim)
    exp_a = np.empty(len(times), dtype=complex)
    pur = np.empty(len(times))
    states = [] if keep_states else None
    y = sol.y[: dim * dim] + 1j * sol.y[dim * dim :] if implicit else sol.y
    for i in range(len(times)):
        rho = unvec(y[:, i], dim)
        exp_a[i] = fs.expectation(a, rho)
        pur[i] = fs.purity(rho)
        if keep_states:
            states.append(rho)
    return Trajectory(times, exp_a, pur, states)

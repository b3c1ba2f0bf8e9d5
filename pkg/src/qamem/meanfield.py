"""Mean-field dynamics of the oscillator amplitude and its fixed points.

With ``alpha = <a>`` and all moments factorized,

    d alpha/dt = -(gamma1/2 + i delta) alpha
                 - n eta e^{-i n theta} conj(alpha)^(n-1)
                 - (m/2) gamma_m |alpha|^(2(m-1)) alpha

The large-amplitude balance of drive and nonlinear loss gives the seed
radius ``(2 n eta / (m gamma_m))^(1/(2m-n))`` at phases
``-theta + (2j+1) pi / n``; a damped Newton iteration then solves the full
equations including detuning and linear loss.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, DivergenceError, UnsupportedRegimeError
from .fockspace import lobe_phases
from .lindblad import ModelParams, lobe_offset

BLOWUP_RADIUS = 1e3
APPROX_RADIUS = 2.0


@dataclass(frozen=True)
class MeanFieldState:
    alpha: complex

    @classmethod
    def from_polar(cls, R, phi):
        if R < 0:
            raise ValueError("radius must be nonnegative")
        return cls(complex(R * np.exp(1j * phi)))

    @property
    def R(self):
        return abs(self.alpha)

    @property
    def phi(self):
        return float(np.angle(self.alpha) % (2 * np.pi))


def _alpha(state):
    return state.alpha if isinstance(state, MeanFieldState) else complex(state)


def mf_rhs(state, p: ModelParams):
    """Complex time derivative of the mean-field amplitude."""
    a = _alpha(state)
    n, m = p.n, p.m
    drive = n * p.eta * np.exp(-1j * n * p.theta) * np.conj(a) ** (n - 1) if p.eta else 0.0
    loss = 0.5 * m * p.gamma_m * abs(a) ** (2 * (m - 1)) * a
    return complex(-(0.5 * p.gamma1 + 1j * p.delta) * a - drive - loss)


def mf_polar_rhs(R, phi, p: ModelParams):
    """``(dR/dt, dphi/dt)`` of the polar form."""
    n, m = p.n, p.m
    s = n * (phi + p.theta)
    Rdot = -0.5 * p.gamma1 * R - 0.5 * m * p.gamma_m * R ** (2 * m - 1) - n * p.eta * R ** (n - 1) * np.cos(s)
    phidot = -p.delta + n * p.eta * R ** (n - 2) * np.sin(s)
    return Rdot, phidot


def mf_jacobian(state, p: ModelParams):
    """Real 2x2 Jacobian of ``(Re, Im)`` of ``mf_rhs`` w.r.t. ``(Re alpha, Im alpha)``."""
    a = _alpha(state)
    n, m = p.n, p.m
    r2 = abs(a) ** 2
    d_a = -(0.5 * p.gamma1 + 1j * p.delta) - 0.5 * m * m * p.gamma_m * r2 ** (m - 1)
    d_ac = 0.0
    if n >= 2 and p.eta:
        d_ac -= n * (n - 1) * p.eta * np.exp(-1j * n * p.theta) * np.conj(a) ** (n - 2)
    if m >= 2:
        d_ac -= 0.5 * m * (m - 1) * p.gamma_m * a ** m * np.conj(a) ** (m - 2)
    dx = d_a + d_ac
    dy = 1j * (d_a - d_ac)
    return np.array([[dx.real, dy.real], [dx.imag, dy.imag]])


@dataclass(frozen=True)
class FixedPoint:
    state: MeanFieldState
    stable: bool
    residual: float
    jacobian_eigs: tuple
    approximate_regime: bool = False

    def row(self):
        """CSV row ``(re_alpha, im_alpha, R, phi, stable_flag, residual)``."""
        a = self.state.alpha
        return (a.real, a.imag, self.state.R, self.state.phi, int(self.stable), self.residual)


def seed_radius(p: ModelParams):
    if p.n >= 2 * p.m:
        raise UnsupportedRegimeError(f"n={p.n} >= 2m={2 * p.m} is outside the supported regime")
    if p.gamma_m <= 0:
        raise UnsupportedRegimeError("fixed-point seeds need gamma_m > 0")
    return (2 * p.n * p.eta / (p.m * p.gamma_m)) ** (1.0 / (2 * p.m - p.n))


def _classify(alpha, p, approx=False):
    eigs = np.linalg.eigvals(mf_jacobian(alpha, p))
    return FixedPoint(
        MeanFieldState(complex(alpha)),
        bool(np.all(eigs.real < 0)),
        abs(mf_rhs(alpha, p)),
        tuple(complex(e) for e in eigs),
        approx,
    )


def refine(alpha0, p: ModelParams, max_iter=200, tol=1e-12):
    """Damped Newton iteration on ``mf_rhs = 0`` starting from ``alpha0``."""
    x = np.array([alpha0.real, alpha0.imag], dtype=float)

    def F(v):
        f = mf_rhs(complex(v[0], v[1]), p)
        return np.array([f.real, f.imag])

    f = F(x)
    for _ in range(max_iter):
        norm = np.linalg.norm(f)
        if norm <= tol:
            return complex(x[0], x[1])
        try:
            step = np.linalg.solve(mf_jacobian(complex(x[0], x[1]), p), -f)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular Jacobian during refinement", seed=alpha0) from exc
        lam = 1.0
        while lam > 1e-6:
            trial = x + lam * step
            ft = F(trial)
            if np.linalg.norm(ft) < (1 - 1e-4 * lam) * norm:
                break
            lam *= 0.5
        x, f = trial, ft
    if np.linalg.norm(f) <= 1e-9:
        return complex(x[0], x[1])
    raise ConvergenceError(
        f"fixed point refinement did not converge in {max_iter} iterations "
        f"(residual {np.linalg.norm(f):.3g})",
        seed=alpha0,
    )


def fixed_points(p: ModelParams, max_iter=200):
    """The ``n`` symmetric nontrivial fixed points, refined and classified.

    Returns only the origin when the drive is off, and an empty list when
    the detuning is too large for a phase-locked solution.
    """
    if p.eta == 0:
        return [_classify(0j, p)]
    R0 = seed_radius(p)
    if p.delta > p.n * p.eta * R0 ** (p.n - 2):
        return []
    approx = R0 < APPROX_RADIUS
    if approx:
        warnings.warn(f"seed radius {R0:.3g} is small; large-amplitude seed may be poor", stacklevel=2)
    out = []
    for phi in lobe_phases(p.n, lobe_offset(p)):
        alpha = refine(R0 * np.exp(1j * phi), p, max_iter=max_iter)
        out.append(_classify(alpha, p, approx))
    return out


def mf_integrate(state0, p: ModelParams, times, rtol=1e-10, atol=1e-12):
    """Integrate the mean-field equation; returns one state per time."""
    times = np.asarray(times, dtype=float)
    a0 = _alpha(state0)
    if not np.isfinite(a0):
        raise ValueError("initial amplitude must be finite")

    def rhs(t, v):
        f = mf_rhs(complex(v[0], v[1]), p)
        return [f.real, f.imag]

    def blowup(t, v):
        return BLOWUP_RADIUS - np.hypot(v[0], v[1])

    blowup.terminal = True
    sol = solve_ivp(
        rhs, (times[0], times[-1]), [a0.real, a0.imag], method="DOP853",
        t_eval=times, rtol=rtol, atol=atol, events=blowup,
    )
    if sol.status == 1:
        raise DivergenceError(f"mean-field amplitude exceeded {BLOWUP_RADIUS:g} at t={sol.t_events[0][0]:.3g}")
    if not sol.success:
        raise DivergenceError(f"mean-field integration failed: {sol.message}")
    return [MeanFieldState(complex(x, y)) for x, y in zip(sol.y[0], sol.y[1])]

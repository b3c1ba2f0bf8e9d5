"""Associative-memory layer: readout POVMs, retrieval experiment, capacity.

Three readouts are provided. The theoretical ambiguous POVM integrates
coherent-state projectors over the ``n`` phase sectors centred on the lobes.
The numerical ambiguous POVM uses the dual functionals of the metastable
phases. The unambiguous POVM uses the lobe projectors plus an inconclusive
element.

Retrieval trials draw random coherent initial states from a numpy
``PCG64`` generator. Each trial gets its own child stream (via
``SeedSequence.spawn``), so trial ``i`` is the same whatever the trial count.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from . import fockspace as fs
from .errors import IllConditionedManifoldError, OverlappingLobesError
from .lindblad import unvec, vec
from .metastable import MetastableManifold, dual_functionals
from .spectral import SpectralDecomposition

COMPLETENESS_TOL = 1e-8
NUMERICAL_CLIP_BUDGET = 0.1
OVERLAP_CLIP_BUDGET = 0.05
KINDS = ("ambiguous_theoretical", "ambiguous_numerical", "unambiguous")


@dataclass(frozen=True)
class Povm:
    elements: list = field(repr=False)
    kind: str
    clipped_mass: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown POVM kind {self.kind!r}")

    @property
    def dim(self):
        return self.elements[0].shape[0]

    @property
    def outcomes(self):
        """Number of lobe outcomes (the inconclusive element is not counted)."""
        return len(self.elements) - (self.kind == "unambiguous")

    def completeness_error(self):
        return float(np.abs(sum(self.elements) - np.eye(self.dim)).max())

    def min_eigenvalue(self):
        return float(min(np.linalg.eigvalsh(fs.hermitian_part(e))[0] for e in self.elements))

    def probabilities(self, rho):
        """Outcome probabilities ``tr(E rho)`` for every element."""
        return np.array([fs.expectation(e, rho).real for e in self.elements])


def ambiguous_povm_theoretical(dim, n, offset=0.0):
    """Coherent-state projectors integrated over the ``n`` phase sectors.

    Sector ``j`` (1-based) spans ``phi_j +- pi/n`` with
    ``phi_j = offset + (2j+1) pi/n``, the direction of lobe ``j`` (pass
    ``lindblad.lobe_offset(p)`` for the model's lobes). Its matrix
    elements are ``Gamma((k+l)/2+1) / sqrt(k! l!) * e^{i phi_j d} sin(pi d/n) / (pi d)``
    with ``d = k - l``, and ``1/n`` on the diagonal.
    """
    fs._check_dim(dim)
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(dim)
    K, Lg = np.meshgrid(k, k, indexing="ij")
    d = K - Lg
    logmag = gammaln((K + Lg) / 2.0 + 1.0) - 0.5 * (gammaln(K + 1.0) + gammaln(Lg + 1.0))
    off = d != 0
    base = np.full((dim, dim), 1.0 / n)
    dd = np.where(off, d, 1)
    base = np.where(off, np.exp(logmag) * np.sin(np.pi * dd / n) / (np.pi * dd), base)
    elements = []
    for phi in fs.lobe_phases(n, offset):
        el = base * np.exp(1j * phi * d)
        elements.append(fs.hermitian_part(el))
    return Povm(elements, "ambiguous_theoretical")


def _clip_unit(op):
    w, v = np.linalg.eigh(fs.hermitian_part(op))
    wc = np.clip(w, 0.0, 1.0)
    return (v * wc) @ v.conj().T, float(np.abs(w - wc).sum())


def ambiguous_povm_numerical(man: MetastableManifold, max_rounds=500):
    """POVM from the dual functionals ``p_l(rho) = tr(P_l rho)`` of the phases.

    Each functional is symmetrized and its spectrum clipped to ``[0, 1]``.
    The residual ``1 - sum P_l`` is then shared out in proportion to
    ``tr(P_l)``. Sharing can push a few eigenvalues slightly negative
    again, so clipping and sharing alternate until both hold. The reported
    clipped mass is the spectral weight removed by the first clip, divided
    by the dimension. Above 0.1 the manifold is rejected.
    """
    dim = man.dim
    clipped, mass = [], 0.0
    for P in dual_functionals(man):
        c, m = _clip_unit(P)
        clipped.append(c)
        mass += m
    mass /= dim
    if mass > NUMERICAL_CLIP_BUDGET:
        raise IllConditionedManifoldError(
            f"numerical POVM clipped mass {mass:.3g} exceeds {NUMERICAL_CLIP_BUDGET}"
        )
    eye = np.eye(dim)
    for _ in range(max_rounds):
        resid = eye - sum(clipped)
        tr = np.array([np.trace(c).real for c in clipped])
        share = tr / tr.sum() if tr.sum() > 0 else np.full(len(clipped), 1.0 / len(clipped))
        elements = [fs.hermitian_part(c + s * resid) for c, s in zip(clipped, share)]
        if min(np.linalg.eigvalsh(e)[0] for e in elements) > -1e-12:
            break
        clipped = [_clip_unit(e)[0] for e in elements]
    return Povm(elements, "ambiguous_numerical", mass)


def unambiguous_povm(lobes):
    """Lobe projectors ``Pi_j`` plus ``Pi_? = 1 - sum_j Pi_j``.

    Overlapping lobes make ``sum_j Pi_j`` exceed one on some vector. Its
    largest eigenvalue ``s`` equals that of the lobe Gram matrix. If
    ``s > 1`` the projectors are scaled by ``1/s`` so that ``Pi_?`` stays
    positive. If ``s - 1`` exceeds 0.05 the lobes are rejected.
    """
    lobes = [np.asarray(x, dtype=complex) for x in lobes]
    if not lobes:
        raise ValueError("need at least one lobe")
    dim = lobes[0].shape[0]
    total = sum(lobes)
    s = float(np.linalg.eigvalsh(fs.hermitian_part(total))[-1])
    excess = max(s - 1.0, 0.0)
    if excess > OVERLAP_CLIP_BUDGET:
        raise OverlappingLobesError(f"lobes overlap: inconclusive element would reach {-excess:.3g}")
    scale = 1.0 / s if s > 1.0 else 1.0
    elements = [scale * x for x in lobes]
    elements.append(np.eye(dim) - scale * total)
    return Povm(elements, "unambiguous", excess)


def classify(rho0, lobes):
    """Index of the nearest lobe in trace distance; ties go to the lowest index."""
    if len(lobes) == 0:
        raise ValueError("need at least one lobe")
    dists = [fs.trace_distance(rho0, lb) for lb in lobes]
    best = min(dists)
    for i, d in enumerate(dists):
        if d <= best + 1e-12:
            return i
    return int(np.argmin(dists))  # pragma: no cover


def trial_rngs(seed, trials):
    """One independent ``PCG64`` generator per trial, stable under changes of ``trials``."""
    children = np.random.SeedSequence(seed).spawn(trials)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def draw_initial_amplitude(rng, beta):
    r = rng.uniform(0.0, 2.0 * beta)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    return complex(r * np.exp(1j * phi))


@dataclass
class RetrievalRecord:
    trial: int
    seed: tuple
    alpha0: complex
    k_true: int
    # strategy -> arrays over time
    p_click: dict = field(default_factory=dict)
    k_hat: dict = field(default_factory=dict)


@dataclass
class RetrievalResult:
    times: np.ndarray
    n: int
    success: dict  # strategy -> P_s(t)
    stderr: dict  # strategy -> standard error of P_s(t)
    records: list = field(repr=False)

    def rows(self):
        """CSV rows ``(trial, t, strategy, k_true, k_hat, p_click, success)``."""
        out = []
        for rec in self.records:
            for strat in self.success:
                for it, t in enumerate(self.times):
                    kh = int(rec.k_hat[strat][it])
                    out.append((
                        rec.trial, float(t), strat, rec.k_true, kh,
                        float(rec.p_click[strat][it]), int(kh == rec.k_true),
                    ))
        return out

    def window_min(self, strategy, t0, t1):
        """``(min over window of P_s, SE at that time)``."""
        mask = (self.times >= t0) & (self.times <= t1)
        if not mask.any():
            raise ValueError("no time points inside the window")
        idx = np.flatnonzero(mask)[np.argmin(self.success[strategy][mask])]
        return float(self.success[strategy][idx]), float(self.stderr[strategy][idx])


def _class_average(values, labels, n):
    """Average over trials within each class, then over the classes present."""
    means, variances = [], []
    for k in range(n):
        sel = values[labels == k]
        if len(sel) == 0:
            continue
        means.append(sel.mean(axis=0))
        var = sel.var(axis=0, ddof=1) / len(sel) if len(sel) > 1 else np.zeros(sel.shape[1])
        variances.append(var)
    m = len(means)
    return np.sum(means, axis=0) / m, np.sqrt(np.sum(variances, axis=0)) / m


def retrieval_experiment(dec: SpectralDecomposition, povms, lobes, times, trials=400, seed=0, beta=None):
    """Monte Carlo retrieval of the stored lobe from random coherent states.

    For each trial a coherent state with amplitude uniform in ``[0, 2 beta]``
    and uniform phase is labelled with its nearest lobe ``k``. It is evolved
    with the full mode expansion in ``dec``, and ``P[k | rho(t)]`` is
    recorded for each readout. ``povms`` maps a strategy name to a ``Povm``.
    ``beta`` defaults to the modulus of the lobe amplitude inferred from
    ``lobes``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not dec.complete:
        raise ValueError("retrieval needs the complete mode expansion")
    times = np.asarray(times, dtype=float)
    dim = dec.dim
    n = len(lobes)
    if beta is None:
        beta = float(np.sqrt(max(fs.expectation(fs.number_op(dim), lobes[0]).real, 0.0)))
    lam = dec.eigenvalues
    decay = np.exp(np.outer(lam, times))  # (K, T)
    # M[s][k, j] = tr(E_k R_j): outcome k of strategy s on mode j
    mats = {
        s: np.array([e.T.reshape(-1, order="F") for e in p.elements[: p.outcomes]]) @ dec.right
        for s, p in povms.items()
    }
    left_h = dec.left.conj().T
    rngs = trial_rngs(seed, trials)
    records = []
    labels = np.empty(trials, dtype=int)
    clicks = {s: np.empty((trials, len(times))) for s in povms}
    for i, rng in enumerate(rngs):
        a0 = draw_initial_amplitude(rng, beta)
        rho0 = fs.coherent_state(dim, a0, warn=False)
        k = classify(rho0, lobes)
        c = left_h @ vec(rho0)
        amp = c[:, None] * decay
        rec = RetrievalRecord(i, tuple(rng.bit_generator.seed_seq.spawn_key), a0, k)
        for s, M in mats.items():
            probs = np.real(M @ amp)  # (outcomes, T)
            probs = np.clip(probs, 0.0, 1.0)
            rec.p_click[s] = probs[k]
            rec.k_hat[s] = np.argmax(probs, axis=0)
            clicks[s][i] = probs[k]
        labels[i] = k
        records.append(rec)
    success, stderr = {}, {}
    for s in povms:
        success[s], stderr[s] = _class_average(clicks[s], labels, n)
    return RetrievalResult(times, n, success, stderr, records)


def lobe_fidelity(beta, n):
    """``|<beta_j|beta_{j+1}>|^2 = exp(-4 beta^2 sin^2(pi/n))``."""
    if n < 2:
        raise ValueError("lobe fidelity needs n >= 2 (no neighbouring lobe)")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return float(np.exp(-4.0 * beta**2 * np.sin(np.pi / n) ** 2))


def effective_dimension(beta, epsilon=1e-9, max_level=None):
    """Fock level whose Poisson(|beta|^2) probability is closest to ``epsilon``.

    The pmf is evaluated through ``logpmf``. The scan starts at the mode,
    since for large ``beta`` the pmf also crosses ``epsilon`` below it.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0:
        return 1
    mean = beta**2
    if max_level is None:
        max_level = int(mean + 20 * np.sqrt(mean) + 60 - np.log(epsilon))
    mode = int(np.floor(mean))
    levels = np.arange(mode, max_level + 1)
    pmf = np.exp(poisson.logpmf(levels, mean))
    return int(levels[np.argmin(np.abs(pmf - epsilon))])


@dataclass(frozen=True)
class CapacityPoint:
    n: int
    beta: float
    L_max: int
    F: float
    alpha_c: float
    alpha_tilde: float

    def row(self):
        return (self.n, self.beta, self.L_max, self.F, self.alpha_c, self.alpha_tilde)


def capacity_point(n, beta, epsilon=1e-9):
    L = max(effective_dimension(beta, epsilon), 1)
    F = lobe_fidelity(beta, n)
    return CapacityPoint(n, float(beta), L, F, n / L, n * (1.0 - F) / L)


def capacity_curve(n, beta_grid, epsilon=1e-9):
    betas = np.asarray(beta_grid, dtype=float)
    if np.any(betas <= 0):
        raise ValueError("beta grid must be positive")
    return [capacity_point(n, b, epsilon) for b in betas]


def capacity_maximum(curve):
    """Grid point with the largest ``alpha_tilde`` (first one on ties)."""
    return max(curve, key=lambda c: (c.alpha_tilde, -c.beta))

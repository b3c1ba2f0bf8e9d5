"""Model parameters, Hamiltonian and Liouvillian superoperators.

Vectorization is column stacking throughout the package: the density
matrix element ``rho[k, l]`` sits at index ``k + D*l`` of ``vec(rho)``, so
``vec(A X B) = (B.T kron A) vec(X)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import fockspace as fs
from .errors import UnsupportedFormError, UnsupportedRegimeError


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the driven-dissipative oscillator (units of gamma1)."""

    n: int = 4
    m: int = 4
    delta: float = 0.4
    eta: float = 1.14
    theta: float = 0.0
    gamma1: float = 1.0
    gamma_m: float = 0.1
    dim: int = 30

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"drive order n must be an integer >= 1, got {self.n}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"dissipation order m must be an integer >= 1, got {self.m}")
        if self.gamma1 < 0 or self.gamma_m < 0:
            raise ValueError("damping rates must be nonnegative")
        if self.eta < 0:
            raise ValueError("drive strength must be nonnegative")
        fs._check_dim(self.dim)
        for name in ("delta", "eta", "theta", "gamma1", "gamma_m"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown ModelParams keys: {sorted(unknown)}")
        return cls(**data)


def build_hamiltonian(p: ModelParams):
    """``H = delta a^dag a + i eta (a^n e^{i n theta} - a^dag^n e^{-i n theta})``."""
    a = fs.annihilation(p.dim)
    an = np.linalg.matrix_power(a, p.n)
    ph = np.exp(1j * p.n * p.theta)
    h = p.delta * fs.number_op(p.dim) + 1j * p.eta * (an * ph - an.conj().T * np.conj(ph))
    return fs.hermitian_part(h)


def dissipator_apply(jump, rho):
    """``O rho O^dag - (O^dag O rho + rho O^dag O) / 2``."""
    jump = np.asarray(jump)
    rho = np.asarray(rho)
    fs._same_shape(jump, rho)
    jd = jump.conj().T
    jdj = jd @ jump
    return jump @ rho @ jd - 0.5 * (jdj @ rho + rho @ jdj)


def spre(a):
    """Superoperator of ``X -> a X``."""
    return np.kron(np.eye(a.shape[0]), a)


def spost(b):
    """Superoperator of ``X -> X b``."""
    return np.kron(b.T, np.eye(b.shape[0]))


def sprepost(a, b):
    """Superoperator of ``X -> a X b``."""
    return np.kron(b.T, a)


def dissipator_superop(jump):
    jdj = jump.conj().T @ jump
    return sprepost(jump, jump.conj().T) - 0.5 * (spre(jdj) + spost(jdj))


def hamiltonian_superop(h):
    return -1j * (spre(h) - spost(h))


def vec(x):
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, dim=None):
    dim = int(round(np.sqrt(v.shape[0]))) if dim is None else dim
    return np.asarray(v).reshape((dim, dim), order="F")


@dataclass(frozen=True)
class Liouvillian:
    params: ModelParams
    matrix: np.ndarray = field(repr=False)
    form: str = "general"

    @property
    def dim(self):
        return self.params.dim

    def apply(self, rho):
        return unvec(self.matrix @ vec(rho), self.dim)

    def sectors(self):
        """Index sets of the invariant blocks ``(k - l) mod n = q``."""
        return symmetry_sectors(self.dim, self.params.n)


def symmetry_sectors(dim, n):
    k, l = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    label = vec((k - l) % n).real.astype(int)
    return [np.flatnonzero(label == q) for q in range(n)]


def build_liouvillian_general(p: ModelParams):
    """``-i[H, .] + gamma1 D[a] + gamma_m D[a^m]``."""
    a = fs.annihilation(p.dim)
    mat = hamiltonian_superop(build_hamiltonian(p))
    if p.gamma1:
        mat = mat + p.gamma1 * dissipator_superop(a)
    if p.gamma_m:
        mat = mat + p.gamma_m * dissipator_superop(np.linalg.matrix_power(a, p.m))
    return Liouvillian(p, mat, "general")


def shifted_beta_power(p: ModelParams):
    if p.gamma_m == 0:
        raise ZeroDivisionError("shifted form needs gamma_n > 0")
    return 2.0 * p.eta * np.exp(1j * p.theta * p.n) / p.gamma_m


def build_liouvillian_shifted(p: ModelParams):
    """``-i delta [a^dag a, .] + gamma1 D[a] + gamma_n D[a^n - beta^n]``.

    ``beta^n = 2 eta e^{i n theta} / gamma_n``. Only defined for ``m == n``.
    """
    if p.m != p.n:
        raise UnsupportedFormError(f"shifted form requires m == n (got n={p.n}, m={p.m})")
    bn = shifted_beta_power(p)
    a = fs.annihilation(p.dim)
    jump = np.linalg.matrix_power(a, p.n) - bn * np.eye(p.dim)
    mat = hamiltonian_superop(p.delta * fs.number_op(p.dim))
    if p.gamma1:
        mat = mat + p.gamma1 * dissipator_superop(a)
    mat = mat + p.gamma_m * dissipator_superop(jump)
    return Liouvillian(p, mat, "shifted")


def build_liouvillian(p: ModelParams, form="general"):
    if form == "general":
        return build_liouvillian_general(p)
    if form == "shifted":
        return build_liouvillian_shifted(p)
    raise UnsupportedFormError(f"unknown Liouvillian form {form!r}")


def lobe_amplitude(p: ModelParams):
    """Mean-field lobe radius ``(2 n eta / (m gamma_m))^{1/(2m-n)}``."""
    if p.n >= 2 * p.m:
        raise UnsupportedRegimeError(f"n={p.n} >= 2m={2 * p.m}: lobe amplitude not defined")
    if p.gamma_m <= 0:
        raise UnsupportedRegimeError("lobe amplitude needs gamma_m > 0")
    if p.eta == 0:
        return 0.0
    return float((2.0 * p.n * p.eta / (p.m * p.gamma_m)) ** (1.0 / (2 * p.m - p.n)))


def lobe_offset(p: ModelParams):
    """Phase offset of the model's lobes, which sit at ``lobe_offset + (2j+1) pi/n``.

    The drive term ``i eta a^n e^{i n theta}`` locks the phase where
    ``n (phi + theta)`` is an odd multiple of pi, so the offset is ``-theta``.
    """
    return -p.theta


def rotation_superop(dim, n, steps=1):
    """Diagonal superoperator of ``rho -> U rho U^dag`` for the Z_n rotation."""
    ph = np.exp(2j * np.pi * steps * np.arange(dim) / n)
    return vec(np.outer(ph, ph.conj()))

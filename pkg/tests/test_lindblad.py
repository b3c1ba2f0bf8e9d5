import numpy as np
import pytest

from qamem import fockspace as fs
from qamem.errors import UnsupportedFormError, UnsupportedRegimeError
from qamem.lindblad import (
    ModelParams,
    build_hamiltonian,
    build_liouvillian,
    dissipator_apply,
    lobe_amplitude,
    rotation_superop,
    sprepost,
    symmetry_sectors,
    unvec,
    vec,
)
from qamem.spectral import liouvillian_eigenvalues

from helpers import spectrum_mismatch


def _direct(p, rho):
    """Master-equation right-hand side from matrix products only."""
    a = fs.annihilation(p.dim)
    h = build_hamiltonian(p)
    out = -1j * (h @ rho - rho @ h) + p.gamma1 * dissipator_apply(a, rho)
    return out + p.gamma_m * dissipator_apply(np.linalg.matrix_power(a, p.m), rho)


def test_params_defaults_and_roundtrip():
    p = ModelParams()
    assert (p.n, p.m, p.delta, p.eta, p.gamma1, p.gamma_m) == (4, 4, 0.4, 1.14, 1.0, 0.1)
    assert ModelParams.from_dict(p.to_dict()) == p
    assert p.with_(eta=2.0).eta == 2.0


@pytest.mark.parametrize("bad", [{"n": 0}, {"gamma1": -1}, {"eta": -0.1}, {"dim": 1}, {"delta": np.inf}])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        ModelParams(**bad)


def test_params_unknown_key():
    with pytest.raises(KeyError):
        ModelParams.from_dict({"gamma4": 0.1})


def test_vec_convention():
    rng = np.random.default_rng(0)
    A, X, B = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)) for _ in range(3))
    assert np.allclose(sprepost(A, B) @ vec(X), vec(A @ X @ B))
    assert vec(X)[1 + 4 * 2] == X[1, 2]
    assert np.array_equal(unvec(vec(X)), X)


def test_hamiltonian_hermitian():
    h = build_hamiltonian(ModelParams(n=3, m=2, theta=0.3, dim=12))
    assert np.allclose(h, h.conj().T)


@pytest.mark.parametrize("n,m", [(2, 2), (3, 3), (4, 4), (3, 2), (2, 4)])
def test_superoperator_matches_direct_products(n, m, rng):
    p = ModelParams(n=n, m=m, delta=0.3, eta=0.7, theta=0.4, gamma_m=0.2, dim=10)
    L = build_liouvillian(p)
    rho = fs.random_density_matrix(10, rng)
    assert np.allclose(L.apply(rho), _direct(p, rho), atol=1e-12)


def test_trace_and_hermiticity_preserved(rng):
    L = build_liouvillian(ModelParams(dim=12))
    rho = fs.random_density_matrix(12, rng)
    d = L.apply(rho)
    assert abs(np.trace(d)) < 1e-12
    assert np.allclose(d, d.conj().T, atol=1e-12)


def test_sectors_are_invariant():
    p = ModelParams(n=3, m=3, dim=9)
    M = build_liouvillian(p).matrix
    secs = symmetry_sectors(9, 3)
    assert sum(len(s) for s in secs) == 81
    for i, s in enumerate(secs):
        for j, t in enumerate(secs):
            if i != j:
                assert np.abs(M[np.ix_(s, t)]).max() == 0


def test_rotation_commutes_with_liouvillian():
    p = ModelParams(n=4, m=4, dim=12)
    M = build_liouvillian(p).matrix
    U = np.diag(rotation_superop(12, 4))
    assert np.allclose(U @ M, M @ U, atol=1e-12)


def test_shifted_form_has_the_same_spectrum():
    p = ModelParams(n=2, m=2, gamma_m=0.4, eta=0.6, dim=14)
    a = liouvillian_eigenvalues(build_liouvillian(p, "general"))
    b = liouvillian_eigenvalues(build_liouvillian(p, "shifted"))
    assert spectrum_mismatch(a, b) < 1e-8


def test_shifted_form_rejects_unequal_orders():
    with pytest.raises(UnsupportedFormError):
        build_liouvillian(ModelParams(n=3, m=2, dim=6), "shifted")
    with pytest.raises(UnsupportedFormError):
        build_liouvillian(ModelParams(dim=6), "bogus")


def test_lobe_amplitude_formula():
    p = ModelParams()
    assert np.isclose(lobe_amplitude(p), (2 * 4 * 1.14 / (4 * 0.1)) ** 0.25)
    assert np.isclose(lobe_amplitude(p), 2.185, atol=1e-3)
    assert lobe_amplitude(p.with_(eta=0.0)) == 0.0
    with pytest.raises(UnsupportedRegimeError):
        lobe_amplitude(ModelParams(n=4, m=2))
    with pytest.raises(UnsupportedRegimeError):
        lobe_amplitude(p.with_(gamma_m=0.0))

"""Randomized invariants (hypothesis, at least 100 cases each)."""
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from qamem import fockspace as fs
from qamem import memory as mem
from qamem.lindblad import ModelParams, build_liouvillian, rotation_superop
from qamem.metastable import build_phases, quasiprobabilities
from qamem.spectral import decompose

CASES = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])

params_st = st.builds(
    ModelParams,
    n=st.integers(1, 4),
    m=st.integers(1, 4),
    delta=st.floats(-2, 2),
    eta=st.floats(0, 3),
    theta=st.floats(-np.pi, np.pi),
    gamma1=st.floats(0, 2),
    gamma_m=st.floats(0, 1),
    dim=st.integers(2, 9),
)
seeds = st.integers(0, 2**32 - 1)


def random_operator(dim, seed, hermitian=False):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return fs.hermitian_part(x) if hermitian else x


@CASES
@given(params_st, seeds)
def test_trace_preservation(p, seed):
    L = build_liouvillian(p)
    x = random_operator(p.dim, seed)
    assert abs(np.trace(L.apply(x))) < 1e-9 * (1 + np.abs(L.matrix).max())


@CASES
@given(params_st, seeds)
def test_hermiticity_preservation(p, seed):
    L = build_liouvillian(p)
    x = random_operator(p.dim, seed)
    lhs = L.apply(x).conj().T
    rhs = L.apply(x.conj().T)
    assert np.abs(lhs - rhs).max() < 1e-9 * (1 + np.abs(L.matrix).max())


@CASES
@given(params_st, seeds)
def test_zn_spectral_invariance(p, seed):
    # the rotation commutes with L and maps its eigenvectors into eigenvectors
    L = build_liouvillian(p)
    U = rotation_superop(p.dim, p.n)
    comm = L.matrix * U[None, :] - U[:, None] * L.matrix
    assert np.abs(comm).max() < 1e-9 * (1 + np.abs(L.matrix).max())
    rho = fs.random_density_matrix(p.dim, np.random.default_rng(seed))
    rotated = fs.rotate(L.apply(rho), p.n)
    assert np.allclose(rotated, L.apply(fs.rotate(rho, p.n)), atol=1e-9 * (1 + np.abs(L.matrix).max()))


@CASES
@given(st.integers(2, 40), st.integers(1, 9), st.floats(-np.pi, np.pi))
def test_theoretical_povm_completeness(dim, n, offset):
    povm = mem.ambiguous_povm_theoretical(dim, n, offset)
    assert povm.completeness_error() < 1e-8
    assert povm.min_eigenvalue() > -1e-8


@CASES
@given(st.floats(1.4, 2.0), st.integers(3, 6))
def test_unambiguous_povm_completeness(r, n):
    # r = beta sin(pi/n) keeps neighbouring lobes well separated
    beta = r / np.sin(np.pi / n)
    povm = mem.unambiguous_povm(fs.lobe_states(60, beta, n, warn=False))
    assert povm.completeness_error() < 1e-8
    assert povm.min_eigenvalue() > -1e-8


@pytest.fixture(scope="module")
def manifold():
    dec = decompose(build_liouvillian(ModelParams(dim=20)))
    return build_phases(dec)


@CASES
@given(seeds, st.integers(1, 20))
def test_quasiprobability_normalization(manifold, seed, rank):
    rho = fs.random_density_matrix(manifold.dim, np.random.default_rng(seed), rank=rank)
    p = quasiprobabilities(manifold, rho)
    assert abs(p.sum() - 1) < 1e-10


@CASES
@given(seeds, st.integers(1, 30))
def test_seed_reproducibility(seed, trials):
    a = [mem.draw_initial_amplitude(r, 2.0) for r in mem.trial_rngs(seed, trials)]
    b = [mem.draw_initial_amplitude(r, 2.0) for r in mem.trial_rngs(seed, trials + 3)]
    assert a == b[:trials]

import dataclasses

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammaln
from scipy.stats import poisson

from qamem import fockspace as fs
from qamem import memory as mem
from qamem.errors import OverlappingLobesError
from qamem.lindblad import ModelParams, build_liouvillian, lobe_amplitude, lobe_offset
from qamem.metastable import build_phases
from qamem.spectral import decompose


def sector_element(k, l, lo, hi):
    """(1/pi) int_sector <k|alpha><alpha|l> d^2 alpha by plain quadrature."""
    radial = quad(lambda r: r ** (k + l + 1) * np.exp(-r * r), 0, np.inf)[0]
    radial *= np.exp(-0.5 * (gammaln(k + 1) + gammaln(l + 1)))
    re = quad(lambda f: np.cos((k - l) * f), lo, hi)[0]
    im = quad(lambda f: np.sin((k - l) * f), lo, hi)[0]
    return radial * (re + 1j * im) / np.pi


@pytest.mark.parametrize("n,offset", [(4, 0.0), (3, -0.4)])
def test_theoretical_povm_against_quadrature(n, offset):
    povm = mem.ambiguous_povm_theoretical(12, n, offset)
    phis = fs.lobe_phases(n, offset)
    for j in (0, n - 1):
        lo, hi = phis[j] - np.pi / n, phis[j] + np.pi / n
        for k, l in [(0, 0), (3, 1), (2, 5), (7, 7), (11, 4)]:
            assert abs(povm.elements[j][k, l] - sector_element(k, l, lo, hi)) < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_theoretical_povm_is_a_povm(n):
    povm = mem.ambiguous_povm_theoretical(20, n)
    assert povm.completeness_error() < 1e-12
    assert povm.min_eigenvalue() > -1e-10
    assert povm.outcomes == n
    if n == 1:
        assert np.allclose(povm.elements[0], np.eye(20))


def test_theoretical_povm_reads_lobes():
    beta, n = 2.5, 4
    povm = mem.ambiguous_povm_theoretical(40, n)
    for j, lobe in enumerate(fs.lobe_states(40, beta, n)):
        assert np.argmax(povm.probabilities(lobe)) == j


def test_theoretical_povm_rejects_bad_input():
    with pytest.raises(ValueError):
        mem.ambiguous_povm_theoretical(1, 4)
    with pytest.raises(ValueError):
        mem.ambiguous_povm_theoretical(10, 0)


@pytest.fixture(scope="module")
def manifold():
    p = ModelParams(dim=30)
    dec = decompose(build_liouvillian(p))
    return dec, build_phases(dec)


def test_numerical_povm(manifold):
    _, man = manifold
    povm = mem.ambiguous_povm_numerical(man)
    assert povm.completeness_error() < 1e-10
    assert povm.min_eigenvalue() > -1e-10
    assert 0 <= povm.clipped_mass < mem.NUMERICAL_CLIP_BUDGET
    for j, mu in enumerate(man.phases):
        assert np.argmax(povm.probabilities(mu)) == j


def test_numerical_and_theoretical_povm_close(manifold):
    dec, man = manifold
    num = mem.ambiguous_povm_numerical(man)
    th = mem.ambiguous_povm_theoretical(dec.dim, 4, lobe_offset(dec.params))
    for a, b in zip(num.elements, th.elements):
        assert fs.trace_distance(a / np.trace(a), b / np.trace(b)) < 0.1


def test_unambiguous_povm_well_separated():
    lobes = fs.lobe_states(60, 3.0, 4)
    povm = mem.unambiguous_povm(lobes)
    assert povm.outcomes == 4 and len(povm.elements) == 5
    assert povm.completeness_error() < 1e-12
    assert povm.min_eigenvalue() > -1e-12
    # neighbouring lobes barely overlap: exp(-4 beta^2 sin^2(pi/4))
    cross = fs.expectation(povm.elements[1], lobes[0]).real
    assert np.isclose(cross, np.exp(-18.0), rtol=1e-3)


def test_unambiguous_povm_small_overlap_is_rescaled():
    lobes = fs.lobe_states(40, 2.0, 4)
    povm = mem.unambiguous_povm(lobes)
    assert 0 < povm.clipped_mass <= mem.OVERLAP_CLIP_BUDGET
    assert povm.min_eigenvalue() > -1e-12


def test_unambiguous_povm_rejects_overlapping_lobes():
    with pytest.raises(OverlappingLobesError):
        mem.unambiguous_povm(fs.lobe_states(20, 0.8, 4))


def test_classify():
    lobes = fs.lobe_states(30, 2.0, 4)
    phis = fs.lobe_phases(4)
    for j in range(4):
        assert mem.classify(fs.coherent_state(30, 0.5 * 2.0 * np.exp(1j * phis[j])), lobes) == j
    # the vacuum is equidistant from all lobes: lowest index wins
    assert mem.classify(fs.fock_dm(30, 0), lobes) == 0


def test_lobe_fidelity():
    assert np.isclose(mem.lobe_fidelity(2.185, 4), 7.1e-5, rtol=0.01)
    kets = fs.lobe_kets(40, 2.185, 4)
    assert np.isclose(abs(np.vdot(kets[0], kets[1])) ** 2, mem.lobe_fidelity(2.185, 4), rtol=1e-8)
    assert mem.lobe_fidelity(0.0, 3) == 1.0
    with pytest.raises(ValueError):
        mem.lobe_fidelity(1.0, 1)


@pytest.mark.parametrize("beta", [0.5, 1.7, 3.0, 6.0])
def test_effective_dimension_brute_force(beta):
    eps = 1e-9
    mean = beta**2
    levels = np.arange(int(np.floor(mean)), 201)
    pmf = np.array([poisson.pmf(l, mean) for l in levels])
    assert mem.effective_dimension(beta, eps) == levels[np.argmin(np.abs(pmf - eps))]


def test_effective_dimension_properties():
    dims = [mem.effective_dimension(b) for b in np.linspace(0.1, 6, 30)]
    assert all(np.diff(dims) >= 0)
    assert mem.effective_dimension(0.0) == 1
    assert mem.effective_dimension(3.0, epsilon=1.0) == 9  # closest to the peak
    with pytest.raises(ValueError):
        mem.effective_dimension(-1.0)


def test_capacity_invariants():
    curve = mem.capacity_curve(4, np.linspace(0.1, 5, 50))
    for c in curve:
        assert 0 <= c.F <= 1
        assert 0 <= c.alpha_tilde <= c.alpha_c
        assert np.isclose(c.alpha_c, c.n / c.L_max)
    best = mem.capacity_maximum(curve)
    assert best.alpha_tilde == max(c.alpha_tilde for c in curve)
    with pytest.raises(ValueError):
        mem.capacity_curve(4, [0.0, 1.0])


@pytest.fixture(scope="module")
def small_retrieval():
    p = ModelParams(n=2, m=2, gamma_m=0.5, eta=0.5, dim=12)
    dec = decompose(build_liouvillian(p), k=p.dim**2)
    beta = lobe_amplitude(p)
    lobes = fs.lobe_states(p.dim, beta, p.n, lobe_offset(p), warn=False)
    povms = {"ambiguous_theoretical": mem.ambiguous_povm_theoretical(p.dim, p.n, lobe_offset(p))}
    return dec, povms, lobes, beta


def test_retrieval_reproducible(small_retrieval):
    dec, povms, lobes, beta = small_retrieval
    t = [0.0, 1.0, 10.0]
    a = mem.retrieval_experiment(dec, povms, lobes, t, trials=20, seed=7, beta=beta)
    b = mem.retrieval_experiment(dec, povms, lobes, t, trials=20, seed=7, beta=beta)
    c = mem.retrieval_experiment(dec, povms, lobes, t, trials=20, seed=8, beta=beta)
    assert a.rows() == b.rows()
    assert a.rows() != c.rows()


def test_retrieval_trials_are_independent_of_count(small_retrieval):
    dec, povms, lobes, beta = small_retrieval
    a = mem.retrieval_experiment(dec, povms, lobes, [0.0, 2.0], trials=5, seed=3, beta=beta)
    b = mem.retrieval_experiment(dec, povms, lobes, [0.0, 2.0], trials=12, seed=3, beta=beta)
    for ra, rb in zip(a.records, b.records):
        assert ra.alpha0 == rb.alpha0 and ra.k_true == rb.k_true


def test_retrieval_result_layout(small_retrieval):
    dec, povms, lobes, beta = small_retrieval
    t = np.array([0.0, 1.0, 5.0])
    res = mem.retrieval_experiment(dec, povms, lobes, t, trials=10, seed=1, beta=beta)
    rows = res.rows()
    assert len(rows) == 10 * 3
    for trial, tt, strat, k_true, k_hat, p_click, ok in rows:
        assert 0 <= p_click <= 1 and ok == int(k_hat == k_true)
    s = res.success["ambiguous_theoretical"]
    assert np.all((s >= 0) & (s <= 1))
    m, se = res.window_min("ambiguous_theoretical", 0.5, 5.0)
    assert m == min(s[1:]) and se >= 0
    with pytest.raises(ValueError):
        res.window_min("ambiguous_theoretical", 100, 200)


def test_retrieval_needs_complete_basis(small_retrieval):
    dec, povms, lobes, _ = small_retrieval
    partial = dataclasses.replace(dec, eigenvalues=dec.eigenvalues[:4], right=dec.right[:, :4], left=dec.left[:, :4])
    assert not partial.complete
    with pytest.raises(ValueError):
        mem.retrieval_experiment(partial, povms, lobes, [0.0])


def test_trial_streams_differ():
    r = mem.trial_rngs(0, 3)
    draws = [g.random() for g in r]
    assert len(set(draws)) == 3
    a = mem.draw_initial_amplitude(np.random.default_rng(0), 2.0)
    assert abs(a) <= 4.0

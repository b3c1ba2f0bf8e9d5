import numpy as np
import pytest

from qamem.errors import ConvergenceError, DivergenceError, UnsupportedRegimeError
from qamem.fockspace import lobe_phases
from qamem.lindblad import ModelParams, lobe_amplitude, lobe_offset
from qamem.meanfield import (
    MeanFieldState,
    fixed_points,
    mf_integrate,
    mf_jacobian,
    mf_polar_rhs,
    mf_rhs,
    refine,
    seed_radius,
)


def test_polar_form_consistent_with_complex_form():
    p = ModelParams(n=3, m=2, delta=0.3, eta=0.7, theta=0.2, gamma_m=0.4)
    R, phi = 1.3, 0.9
    a = R * np.exp(1j * phi)
    f = mf_rhs(a, p)
    Rdot, phidot = mf_polar_rhs(R, phi, p)
    assert np.isclose(Rdot, (f * np.exp(-1j * phi)).real)
    assert np.isclose(phidot, (f * np.exp(-1j * phi)).imag / R)


@pytest.mark.parametrize("n,m", [(2, 2), (3, 3), (4, 4), (3, 2), (1, 2)])
def test_jacobian_against_finite_differences(n, m):
    p = ModelParams(n=n, m=m, delta=0.4, eta=0.9, theta=0.3, gamma_m=0.2)
    a = 0.7 - 1.1j
    J = mf_jacobian(a, p)
    h = 1e-6
    for col, da in enumerate((h, 1j * h)):
        d = (mf_rhs(a + da, p) - mf_rhs(a - da, p)) / (2 * h)
        assert np.allclose(J[:, col], [d.real, d.imag], atol=1e-7)


def test_resonant_fixed_points_match_closed_form():
    # delta = 0 and gamma1 = 0: R^{2m-n} = 2 n eta / (m gamma_m) exactly
    p = ModelParams(n=4, m=4, delta=0.0, gamma1=0.0, eta=1.14, gamma_m=0.1)
    fps = fixed_points(p)
    assert len(fps) == 4
    for fp in fps:
        assert np.isclose(fp.state.R, seed_radius(p), rtol=1e-10)
        assert fp.residual < 1e-10


def test_default_fixed_points_are_stable_and_symmetric():
    p = ModelParams()
    fps = fixed_points(p)
    R = [fp.state.R for fp in fps]
    assert np.allclose(R, R[0])
    assert abs(R[0] - lobe_amplitude(p)) / lobe_amplitude(p) < 0.05
    assert all(fp.stable for fp in fps)
    phis = np.sort([fp.state.phi for fp in fps])
    assert np.allclose(np.diff(phis), np.pi / 2, atol=1e-8)


def test_no_drive_gives_origin():
    fps = fixed_points(ModelParams(eta=0.0))
    assert len(fps) == 1 and fps[0].state.alpha == 0 and fps[0].stable


def test_large_detuning_has_no_locked_solution():
    assert fixed_points(ModelParams(delta=50.0)) == []


def test_unsupported_regime():
    with pytest.raises(UnsupportedRegimeError):
        fixed_points(ModelParams(n=4, m=2))


def test_small_seed_warns():
    with pytest.warns(UserWarning):
        fixed_points(ModelParams(eta=0.05, delta=0.0))


def test_refine_reports_seed_on_failure():
    p = ModelParams()
    with pytest.raises(ConvergenceError) as err:
        refine(5.0 + 1j, p, max_iter=1)
    assert err.value.seed == 5.0 + 1j


def test_integration_relaxes_to_fixed_point():
    p = ModelParams()
    fp = fixed_points(p)
    traj = mf_integrate(MeanFieldState.from_polar(1.0, fp[0].state.phi), p, np.linspace(0, 200, 5))
    end = traj[-1].alpha
    assert min(abs(end - f.state.alpha) for f in fp) < 1e-6


def test_blow_up_detected():
    p = ModelParams(gamma_m=0.0, gamma1=0.0, n=3, m=3, eta=1.0)
    with pytest.raises(DivergenceError):
        mf_integrate(2.0 + 0j, p, np.linspace(0, 10, 3))


def test_from_polar_rejects_negative_radius():
    with pytest.raises(ValueError):
        MeanFieldState.from_polar(-1.0, 0.0)


def test_fixed_points_follow_drive_phase():
    # detuning tilts the lobes slightly; the drive phase rotates them rigidly
    p = ModelParams(theta=0.3)
    phis = np.sort([fp.state.phi % (2 * np.pi) for fp in fixed_points(p)])
    ref = np.sort([(fp.state.phi + lobe_offset(p)) % (2 * np.pi) for fp in fixed_points(p.with_(theta=0.0))])
    assert np.allclose(phis, ref, atol=1e-8)
    assert np.allclose(phis, np.sort(lobe_phases(p.n, lobe_offset(p)) % (2 * np.pi)), atol=0.02)

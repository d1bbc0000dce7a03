import numpy as np
import pytest
from scipy.linalg import expm

from ppvgroup import fixtures as fx
from ppvgroup.floquet import (NoUnityMultiplierError, RepeatedUnityMultiplierError,
                              UnstableLockError, adjoint_period_mismatch, analyse,
                              floquet_decompose, lptv_blowup_demo, monodromy)
from ppvgroup.lock import find_lock

TWO_PI = 2 * np.pi


def test_identical_pair_monodromy_is_matrix_exponential(pair):
    K = 0.1
    J = TWO_PI * K * np.array([[-1.0, 1.0], [1.0, -1.0]])
    assert np.max(np.abs(pair.fd.monodromy - expm(J))) < 1e-9
    rho = pair.fd.multipliers
    assert abs(rho[0] - 1.0) < 1e-9 and abs(rho[1] - np.exp(-4 * np.pi * K)) < 1e-9
    assert np.max(np.abs(pair.fd.v1.samples - 0.5)) < 1e-9
    assert np.max(np.abs(pair.fd.u1.samples - 1.0)) < 1e-12
    assert pair.fd.stable and not pair.fd.warnings


def test_detuned_pair_adjoint_closed_form(detuned):
    # J is constant; v1 is its left null vector [f2, f1] scaled so that v1 . u1 = 1
    f1, f2 = 0.98, 1.02
    f_star = detuned.sol.f_star
    expect = np.array([f2, f1]) / (f_star * (f1 + f2))
    assert np.max(np.abs(detuned.fd.v1.samples - expect)) < 1e-9
    assert np.max(np.abs(detuned.fd.u1.samples - f_star)) < 1e-9


@pytest.mark.parametrize("name", ["pair", "detuned", "ring3_mixed"])
def test_biorthogonality(name, request):
    fd = request.getfixturevalue(name).fd
    assert fd.biorthogonality_error() < 1e-7


def test_tangent_is_orbit_derivative(ring3_mixed):
    sol, fd = ring3_mixed.sol, ring3_mixed.fd
    t = fd.u1.theta * sol.T_star
    assert np.max(np.abs(fd.u1.samples - sol.phi_star_dot(t))) < 1e-7


def test_adjoint_is_periodic(ring3_mixed):
    assert adjoint_period_mismatch(ring3_mixed.cps, ring3_mixed.sol, ring3_mixed.fd) < 1e-9


def test_exponents_and_csv(pair):
    mu = pair.fd.exponents
    assert abs(mu[0]) < 1e-9 and abs(mu[1].real + 4 * np.pi * 0.1) < 1e-8
    assert pair.fd.multipliers_csv().splitlines()[0] == "index,rho_re,rho_im,rho_abs,mu_re,mu_im"


def test_multiplier_errors(pair):
    cps, sol = pair.cps, pair.sol
    with pytest.raises(RepeatedUnityMultiplierError):
        floquet_decompose(cps, np.eye(2), sol)
    with pytest.raises(NoUnityMultiplierError):
        floquet_decompose(cps, np.diag([0.5, 0.2]), sol)
    with pytest.raises(UnstableLockError):
        floquet_decompose(cps, np.diag([1.0, 2.0]), sol)


def test_marginal_contraction_is_flagged(pair):
    fd = floquet_decompose(pair.cps, np.diag([1.0, 1.0 - 1e-10]), pair.sol, tol_unity=1e-12)
    assert fd.unity_multiplier_ok and not fd.contraction_ok and not fd.stable
    assert fd.warnings


def test_unstable_lock_rejected():
    cps = fx.adler_pair(K=-0.1)
    sol = find_lock(cps, settle_periods=0)
    with pytest.raises(UnstableLockError):
        analyse(cps, sol)


def test_monodromy_of_mixed_ring_has_unit_determinant_ratio(ring3_mixed):
    # Liouville: det M = exp(int_0^T tr J dt)
    cps, sol = ring3_mixed.cps, ring3_mixed.sol
    M = monodromy(cps, sol)
    ts = np.linspace(0, sol.T_star, 2001)
    tr = [np.trace(cps.g_jacobian(sol.phi_star(t))) for t in ts]
    from scipy.integrate import simpson

    assert abs(np.linalg.det(M) - np.exp(simpson(tr, x=ts))) < 1e-8


@pytest.mark.parametrize("name", ["pair", "ring3_mixed"])
def test_tangent_forcing_grows_linearly(name, request):
    fx_ = request.getfixturevalue(name)
    eps = 1e-3
    res = lptv_blowup_demo(fx_.cps, fx_.sol, fx_.fd, eps, 50 * fx_.sol.T_star)
    assert abs(res.slope - eps) < 0.01 * eps
    # the deviation itself drifts along u1 like eps t
    assert np.max(np.abs(res.deviation[-1] - eps * res.t[-1] * fx_.fd.u1(res.t[-1] * fx_.sol.f_star))) \
        < 0.05 * eps * res.t[-1]


@pytest.mark.parametrize("name", ["pair", "ring3_mixed"])
def test_projected_forcing_stays_bounded(name, request):
    fx_ = request.getfixturevalue(name)
    eps = 1e-3
    T = fx_.sol.T_star
    res = lptv_blowup_demo(fx_.cps, fx_.sol, fx_.fd, eps, 50 * T, forcing="projected")
    assert res.sup_c1 < 10 * eps * T
    assert np.max(np.abs(res.deviation)) < 10 * eps * T


def test_blowup_demo_guards(pair):
    with pytest.raises(ValueError):
        lptv_blowup_demo(pair.cps, pair.sol, pair.fd, 0.1, 50.0)
    with pytest.raises(ValueError):
        lptv_blowup_demo(pair.cps, pair.sol, pair.fd, 1e-3, 5.0)
    with pytest.raises(ValueError):
        lptv_blowup_demo(pair.cps, pair.sol, pair.fd, 1e-3, 50.0, forcing="other")

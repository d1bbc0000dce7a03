import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import adler_offset
from ppvgroup import fixtures as fx
from ppvgroup.lock import LockError, find_lock, shift_lock, verify_lock
from ppvgroup.oscillator import InputSignal


def test_identical_pair_locks_in_phase(pair):
    sol = pair.sol
    assert abs(sol.f_star - 1.0) < 1e-9
    assert np.max(np.abs(sol.delta_phi_star.samples)) < 1e-9
    rho = np.sort(np.abs(sol.multipliers))
    assert abs(rho[0] - np.exp(-4 * np.pi * 0.1)) < 1e-8 and abs(rho[1] - 1.0) < 1e-8
    assert sol.stable


@settings(max_examples=5, deadline=None)
@given(st.floats(0.005, 0.08))
def test_detuned_pair_matches_adler_balance(delta):
    sol = find_lock(fx.detuned_pair(delta, K=0.1))
    # f* = f1 (1 + K sin) with sin = delta / K
    assert abs(sol.f_star - (1 - delta ** 2)) < 1e-9
    offset = sol.delta_phi_star.samples[:, 1] - sol.delta_phi_star.samples[:, 0]
    assert np.max(np.abs(offset - adler_offset(delta, 0.1))) < 1e-9


@settings(max_examples=5, deadline=None)
@given(st.floats(-0.2, 0.2))
def test_lock_independent_of_initial_guess(d0):
    sol = find_lock(fx.detuned_pair(), dphi_guess=[d0])
    assert abs(sol.delta_phi_star(0.0)[1] - adler_offset(0.02, 0.1)) < 1e-9


def test_anchor_and_storage(detuned):
    sol = detuned.sol
    assert sol.delta_phi_star.samples[0, 0] == 0.0
    assert sol.to_csv().splitlines()[0] == "s,dphi_1,dphi_2"
    meta = sol.meta()
    assert meta["N"] == 2 and meta["stable"] is True
    assert np.allclose(sol.phi_star(sol.T_star) - sol.phi_star(0.0), 1.0, atol=1e-12)


def test_ring_lock_is_verified(ring3_mixed):
    cps, sol = ring3_mixed.cps, ring3_mixed.sol
    rep = verify_lock(cps, sol)
    assert rep.ok(1e-8) and not rep.flagged
    assert rep.orbit_error < 1e-8
    # sum-frequency coupling makes the locked deviations move within a period
    assert np.ptp(sol.delta_phi_star.samples[:, 1]) > 1e-4


def test_shift_lock_is_a_time_shift(ring3_mixed):
    cps, sol = ring3_mixed.cps, ring3_mixed.sol
    tau = 0.37 * sol.T_star
    sh = shift_lock(sol, tau)
    t = np.linspace(0, 2, 9)
    diff = sh.phi_star(t) - sol.phi_star(t - tau)
    assert np.max(np.abs(diff - np.round(diff))) < 1e-9
    assert verify_lock(cps, sh).ok(1e-8)
    assert abs(sh.anchor_shift - tau) < 1e-15


def test_sign_flipped_coupling_gives_unstable_lock():
    sol = find_lock(fx.adler_pair(K=-0.1), settle_periods=0)
    assert not sol.stable
    assert np.max(np.abs(sol.multipliers)) == pytest.approx(np.exp(0.4 * np.pi), rel=1e-6)


def test_uncoupled_detuned_pair_has_no_lock():
    with pytest.raises(LockError):
        find_lock(fx.detuned_pair(K=0.0), settle_periods=20)


def test_rejects_inputs_and_bad_guesses():
    cps = fx.adler_pair()
    with pytest.raises(ValueError):
        find_lock(cps.with_inputs({0: InputSignal.constant(2, 0, 0.1)}))
    with pytest.raises(ValueError):
        find_lock(cps, f_guess=-1.0)
    with pytest.raises(ValueError):
        find_lock(cps, dphi_guess=[0.0, 0.1, 0.2])


def test_single_oscillator_lock_is_free_running():
    from ppvgroup.network import single

    sol = find_lock(single(fx.quadrature_oscillator(1.3)))
    assert abs(sol.f_star - 1.3) < 1e-12
    assert np.max(np.abs(sol.delta_phi_star.samples)) < 1e-12

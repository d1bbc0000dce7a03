import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppvgroup import fixtures as fx
from ppvgroup.network import simulate_cps, single
from ppvgroup.oscillator import (InputSignal, OscillatorPhaseModel, ppv_rhs,
                                 reconstruct_waveform, simulate_phase)
from ppvgroup.periodic import PeriodicWaveform

TWO_PI = 2 * np.pi


def rk4(rhs, y0, t0, t1, steps):
    """Plain fixed-step RK4, independent of the package integrator."""
    h = (t1 - t0) / steps
    y = np.array(y0, dtype=float)
    t = t0
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def scalar_model(f, fn):
    return OscillatorPhaseModel(f, PeriodicWaveform.from_function(fn, 64))


def test_ppv_rhs_closed_form():
    m = fx.quadrature_oscillator(1.5)
    phi, b = 0.125, np.array([0.2, -0.1])
    expect = 1.5 + 1.5 * (-np.sin(TWO_PI * phi) * 0.2 + np.cos(TWO_PI * phi) * -0.1)
    assert abs(ppv_rhs(m, phi, b) - expect) < 1e-14
    with pytest.raises(ValueError):
        ppv_rhs(m, phi, [1.0])


def test_free_running_phase_is_linear():
    m = fx.quadrature_oscillator(1.3)
    traj = simulate_phase(m, None, 0.0, 20.0, phi0=0.25, t_eval=np.linspace(0, 20, 11))
    assert np.max(np.abs(traj.y[:, 0] - (0.25 + 1.3 * traj.t))) < 1e-10


def test_constant_ppv_constant_input_closed_form():
    m = OscillatorPhaseModel(2.0, PeriodicWaveform.constant([0.5], 16))
    u = InputSignal.constant(1, 0, 0.1)
    traj = simulate_phase(m, u, 0.0, 5.0, t_eval=[0.0, 5.0])
    assert abs(traj.y[-1, 0] - 2.0 * 1.05 * 5.0) < 1e-9


def test_adler_injection_matches_fixed_step_rk4():
    m = scalar_model(1.0, lambda th: -np.sin(TWO_PI * th))
    u = InputSignal.sinusoid(1, 0, 0.05, 1.003, 0.1)

    def rhs(t, y):
        return np.array([1.0 - np.sin(TWO_PI * y[0]) * 0.05 * np.sin(TWO_PI * (1.003 * t + 0.1))])

    ref = rk4(rhs, [0.0], 0.0, 30.0, 30000)
    traj = simulate_phase(m, u, 0.0, 30.0, 1e-11, atol=1e-12, t_eval=[0.0, 30.0])
    assert abs(traj.y[-1, 0] - ref[0]) < 1e-8


def test_matches_one_oscillator_cps_exactly():
    m = fx.quadrature_oscillator(1.1)
    u = InputSignal.sinusoid(2, 1, 0.01, 0.9)
    a = simulate_phase(m, u, 0.0, 10.0, t_eval=np.linspace(0, 10, 21))
    b = simulate_cps(single(m, u), [0.0], 0.0, 10.0, t_eval=np.linspace(0, 10, 21))
    assert np.array_equal(a.y, b.y) and a.nfev == b.nfev


def test_reconstruct_waveform():
    m = fx.quadrature_oscillator(1.0)
    traj = simulate_phase(m, None, 0.0, 2.0, t_eval=np.linspace(0, 2, 9))
    x = reconstruct_waveform(m, traj)
    assert np.max(np.abs(x.y[:, 0] - np.cos(TWO_PI * traj.t))) < 1e-9
    with pytest.raises(ValueError):
        reconstruct_waveform(OscillatorPhaseModel(1.0, m.p), traj)


def test_model_validation():
    p = fx.quadrature_ppv(16)
    for f in (0.0, -1.0, np.inf, np.nan):
        with pytest.raises(ValueError):
            OscillatorPhaseModel(f, p)
    with pytest.raises(TypeError):
        OscillatorPhaseModel(1.0, np.zeros(16))
    with pytest.raises(ValueError):
        simulate_phase(OscillatorPhaseModel(1.0, p), InputSignal.zero(1), 0.0, 1.0)


def test_input_signal_algebra():
    u = InputSignal.sinusoid(2, 0, 0.5, 2.0, 0.25) + InputSignal.constant(2, 1, -0.2)
    assert np.allclose(u(0.0), [0.5, -0.2])
    assert np.allclose(u(np.array([0.0, 0.25])), [[0.5, -0.2], [-0.5, -0.2]])
    assert u.peak() == 0.5
    assert np.allclose(u.scaled(2.0)(0.0), [1.0, -0.4])
    assert InputSignal.zero(3).is_zero and not u.is_zero
    with pytest.raises(ValueError):
        u + InputSignal.zero(1)
    with pytest.raises(ValueError):
        InputSignal.sinusoid(2, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        InputSignal(1, offset=(np.nan,))


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(0, 3), st.floats(0, 1), st.floats(-5, 5))
def test_peak_bounds_signal(a, f, ph, off):
    u = InputSignal(1, InputSignal.sinusoid(1, 0, a, f, ph).terms, (off,))
    t = np.linspace(0, 10, 501)
    assert np.max(np.abs(u(t))) <= u.peak() + 1e-12

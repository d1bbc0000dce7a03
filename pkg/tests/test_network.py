import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppvgroup import fixtures as fx
from ppvgroup.network import CoupledPhaseSystem, Coupling, simulate_cps
from ppvgroup.oscillator import InputSignal, OscillatorPhaseModel
from ppvgroup.periodic import PeriodicWaveform

TWO_PI = 2 * np.pi
phases = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


def test_adler_pair_rhs_closed_form():
    cps = fx.adler_pair(1.0, 1.2, K=0.1)
    phi = np.array([0.1, 0.35])
    d = TWO_PI * (phi[1] - phi[0])
    expect = [1.0 + 0.1 * np.sin(d), 1.2 - 1.2 * 0.1 * np.sin(d)]
    assert np.max(np.abs(cps.g_phi(phi) - expect)) < 1e-14
    assert np.array_equal(cps.b_phi(phi, 0.3), [0.0, 0.0])


def test_external_input_enters_through_ppv():
    cps = fx.adler_pair().with_inputs({1: InputSignal.constant(2, 1, 0.01)})
    phi = np.array([0.0, 0.2])
    assert np.allclose(cps.b_phi(phi, 5.0), [0.0, 0.01 * np.cos(TWO_PI * 0.2)], atol=1e-15)
    assert np.allclose(cps.assemble_input(1, phi, 0.0),
                       [0.1, 0.01] + np.array([0.0, 0.0]), atol=1e-15)
    assert cps.has_external_inputs and not cps.without_inputs().has_external_inputs


@settings(max_examples=30, deadline=None)
@given(phases)
def test_jacobian_matches_central_differences(phi):
    for cps in (fx.ring(3, K=0.2, detune=0.05, mixed=True), fx.ring(3, K=0.1)):
        h = 1e-6
        num = np.column_stack([(cps.g_phi(phi + h * e) - cps.g_phi(phi - h * e)) / (2 * h)
                               for e in np.eye(3)])
        assert np.max(np.abs(cps.g_jacobian(phi) - num)) < 1e-7


@settings(max_examples=30, deadline=None)
@given(phases, st.integers(-2, 2))
def test_rhs_is_periodic_in_each_phase(phi, k):
    cps = fx.ring(3, K=0.2, mixed=True)
    assert np.allclose(cps.g_phi(phi + k), cps.g_phi(phi), atol=1e-12)


def test_identical_pair_converges_in_phase():
    cps = fx.adler_pair()
    traj = simulate_cps(cps, [0.0, 0.1], 0.0, 200.0, 1e-10, t_eval=[200.0])
    assert abs(traj.y[-1, 1] - traj.y[-1, 0]) < 1e-6


def test_construction_errors():
    osc = fx.quadrature_oscillator()
    b = fx.quadrature_output(0.1)
    with pytest.raises(ValueError):
        Coupling(0, 0, b)
    with pytest.raises(ValueError):
        CoupledPhaseSystem([osc], [Coupling(1, 0, b)])
    with pytest.raises(ValueError):
        CoupledPhaseSystem([osc, osc], [Coupling(1, 0, b), Coupling(1, 0, b)])
    scalar = PeriodicWaveform.constant([1.0], 128)
    with pytest.raises(ValueError):
        CoupledPhaseSystem([osc, osc], [Coupling(1, 0, scalar)])
    with pytest.raises(ValueError):
        CoupledPhaseSystem([osc], external_inputs={0: InputSignal.zero(1)})
    with pytest.raises(ValueError):
        CoupledPhaseSystem([])
    with pytest.raises(ValueError):
        simulate_cps(CoupledPhaseSystem([osc]), [0.0, 0.0], 0.0, 1.0)


def test_mixed_input_dims():
    # scalar-input oscillator driven by a two-input one
    a = fx.quadrature_oscillator(1.0)
    s = OscillatorPhaseModel(1.0, PeriodicWaveform.from_function(lambda th: -np.sin(TWO_PI * th)))
    to_a = fx.quadrature_output(0.1)
    to_s = PeriodicWaveform.from_function(lambda th: 0.1 * np.cos(TWO_PI * th))
    cps = CoupledPhaseSystem([a, s], [Coupling(1, 0, to_a), Coupling(0, 1, to_s)])
    phi = np.array([0.2, 0.7])
    expect1 = 1.0 + 0.1 * np.sin(TWO_PI * (0.7 - 0.2))
    expect2 = 1.0 - np.sin(TWO_PI * 0.7) * 0.1 * np.cos(TWO_PI * 0.2)
    assert np.allclose(cps.g_phi(phi), [expect1, expect2], atol=1e-14)

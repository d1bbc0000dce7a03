import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppvgroup.periodic import PeriodicWaveform, concatenate, format_csv, grid

TWO_PI = 2 * np.pi


def trig(th):
    return np.column_stack([np.sin(TWO_PI * th), 0.3 + np.cos(2 * TWO_PI * th)])


def test_bandlimited_interpolation_is_exact_off_grid():
    w = PeriodicWaveform.from_function(trig, 16)
    th = np.linspace(-1.3, 2.7, 101)
    assert np.max(np.abs(w(th) - trig(th))) < 1e-13


def test_scalar_and_array_shapes():
    w = PeriodicWaveform.from_function(trig, 16)
    assert w(0.1).shape == (2,)
    assert w(np.array([0.1, 0.2])).shape == (2, 2)
    assert w.dim == 2 and w.num_samples == 16


def test_derivative_of_sine():
    w = PeriodicWaveform.from_function(lambda th: np.sin(TWO_PI * th), 32)
    th = np.linspace(0, 1, 17)
    assert np.max(np.abs(w.derivative()(th)[:, 0] - TWO_PI * np.cos(TWO_PI * th))) < 1e-12


def test_nyquist_dropped_in_derivative():
    # alternating samples are the Nyquist mode; its interpolant derivative is ambiguous
    w = PeriodicWaveform((-1.0) ** np.arange(8))
    assert np.max(np.abs(w.derivative().samples)) < 1e-14


def test_mean_and_constant():
    w = PeriodicWaveform.constant([2.0, -1.0], 8)
    assert np.allclose(w.mean(), [2.0, -1.0])
    assert np.allclose(w(0.37), [2.0, -1.0])


@pytest.mark.parametrize("n", [0, 6, 7, 9])
def test_rejects_bad_sample_counts(n):
    with pytest.raises(ValueError):
        PeriodicWaveform(np.zeros(n))


def test_rejects_non_finite():
    s = np.zeros(8)
    s[3] = np.nan
    with pytest.raises(ValueError):
        PeriodicWaveform(s)
    with pytest.raises(ValueError):
        PeriodicWaveform(np.zeros(8))(np.inf)


def test_immutable_samples():
    w = PeriodicWaveform(np.arange(8.0))
    with pytest.raises(ValueError):
        w.samples[0] = 1.0


def test_csv_round_trip_is_exact():
    rng = np.random.default_rng(3)
    w = PeriodicWaveform(rng.standard_normal((12, 3)))
    text = w.to_csv()
    assert text.splitlines()[0] == "theta,v0,v1,v2"
    assert PeriodicWaveform.from_csv(text) == w


def test_concatenate_and_component():
    a = PeriodicWaveform.from_function(trig, 16)
    b = PeriodicWaveform.from_function(lambda th: np.cos(TWO_PI * th), 16)
    c = concatenate([a, b])
    assert c.dim == 3
    assert c.component([2]) == b
    with pytest.raises(ValueError):
        concatenate([a, PeriodicWaveform(np.zeros(8))])


def test_format_csv_uses_17_digits():
    text = format_csv("a", np.array([[1 / 3]]))
    assert float(text.splitlines()[1]) == 1 / 3


def test_grid():
    assert np.array_equal(grid(4), [0, 0.25, 0.5, 0.75])


samples = st.lists(st.floats(-10, 10), min_size=16, max_size=16).map(np.array)


@settings(max_examples=50, deadline=None)
@given(samples, st.integers(-3, 3))
def test_interpolant_reproduces_samples_and_is_periodic(s, k):
    w = PeriodicWaveform(s)
    assert np.allclose(w(grid(16) + k)[:, 0], s, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(samples, st.floats(-2, 2))
def test_shift(s, delta):
    w = PeriodicWaveform(s - _nyquist(s))
    th = np.linspace(0, 1, 7)
    assert np.allclose(w.shifted(delta)(th), w(th + delta), atol=1e-11)


@settings(max_examples=50, deadline=None)
@given(samples)
def test_derivative_has_zero_mean_and_resampling_keeps_samples(s):
    w = PeriodicWaveform(s)
    assert abs(w.derivative().mean()[0]) < 1e-9
    assert np.allclose(w.resampled(32)(grid(16))[:, 0], s, atol=1e-10)


def _nyquist(s):
    alt = (-1.0) ** np.arange(s.size)
    return np.mean(s * alt) * alt

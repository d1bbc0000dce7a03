"""Vector-valued 1-periodic functions stored as uniform samples.

Values between samples come from the trigonometric (Fourier) interpolant of
the samples, which makes evaluation exactly periodic and gives spectrally
accurate derivatives.
"""

from __future__ import annotations

import io

import numpy as np

DEFAULT_NUM_SAMPLES = 128
MIN_SAMPLES = 8


class PeriodicWaveform:
    """Immutable 1-periodic waveform ``R -> R^dim``.

    Parameters
    ----------
    samples : array_like, shape (num_samples,) or (num_samples, dim)
        Values at ``theta = k / num_samples`` for ``k = 0..num_samples-1``.
        ``num_samples`` must be even and at least 8.
    """

    __slots__ = ("_samples", "_coef", "_harmonics")

    def __init__(self, samples):
        arr = np.array(samples, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError(f"samples must be 1-D or 2-D, got shape {arr.shape}")
        n = arr.shape[0]
        if n < MIN_SAMPLES or n % 2:
            raise ValueError(f"num_samples must be even and >= {MIN_SAMPLES}, got {n}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples contain non-finite values")
        arr.flags.writeable = False
        self._samples = arr
        # one-sided spectrum with interpolation weights folded in:
        # x(theta) = Re(sum_k coef_k exp(2 pi i k theta)), k = 0..n/2
        coef = np.fft.rfft(arr, axis=0) / n
        coef[1 : n // 2] *= 2.0
        coef[n // 2] = coef[n // 2].real
        coef.flags.writeable = False
        self._coef = coef
        self._harmonics = np.arange(n // 2 + 1)

    @classmethod
    def from_function(cls, fn, num_samples=DEFAULT_NUM_SAMPLES):
        """Sample a vectorised ``fn(theta_array)`` on the uniform grid."""
        theta = grid(num_samples)
        return cls(np.asarray(fn(theta), dtype=float))

    @classmethod
    def constant(cls, value, num_samples=DEFAULT_NUM_SAMPLES):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(np.tile(value, (num_samples, 1)))

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def num_samples(self) -> int:
        return self._samples.shape[0]

    @property
    def dim(self) -> int:
        return self._samples.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return grid(self.num_samples)

    def __call__(self, theta):
        """Evaluate at phase(s) ``theta`` in cycles.

        A scalar ``theta`` returns shape ``(dim,)``; an array of shape ``(m,)``
        returns ``(m, dim)``.
        """
        th = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(th)):
            raise ValueError("theta must be finite")
        scalar = th.ndim == 0
        th = np.mod(np.atleast_1d(th), 1.0)
        basis = np.exp(2j * np.pi * np.outer(th, self._harmonics))
        out = (basis @ self._coef).real
        return out[0] if scalar else out

    def derivative(self) -> PeriodicWaveform:
        """Spectral derivative with respect to theta (Nyquist mode dropped)."""
        n = self.num_samples
        k = np.arange(n // 2 + 1)
        spec = np.fft.rfft(self._samples, axis=0) * (2j * np.pi * k)[:, None]
        spec[-1] = 0.0
        spec[0] = 0.0
        return PeriodicWaveform(np.fft.irfft(spec, n=n, axis=0))

    def shifted(self, delta: float) -> PeriodicWaveform:
        """Waveform ``theta -> self(theta + delta)`` resampled on the same grid.

        Exact when the samples carry no Nyquist-frequency content; that mode
        cannot represent a fractional-sample shift.
        """
        return PeriodicWaveform(self(self.theta + delta))

    def resampled(self, num_samples: int) -> PeriodicWaveform:
        return PeriodicWaveform(self(grid(num_samples)))

    def mean(self) -> np.ndarray:
        return self._samples.mean(axis=0)

    def component(self, idx) -> PeriodicWaveform:
        return PeriodicWaveform(self._samples[:, np.atleast_1d(idx)])

    def __eq__(self, other):
        if not isinstance(other, PeriodicWaveform):
            return NotImplemented
        return np.array_equal(self._samples, other._samples)

    __hash__ = None

    def __repr__(self):
        return f"PeriodicWaveform(dim={self.dim}, num_samples={self.num_samples})"

    def to_csv(self) -> str:
        header = ",".join(["theta"] + [f"v{j}" for j in range(self.dim)])
        table = np.column_stack([self.theta, self._samples])
        return format_csv(header, table)

    @classmethod
    def from_csv(cls, text: str) -> PeriodicWaveform:
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        header = lines[0].split(",")
        if header[0] != "theta" or header[1:] != [f"v{j}" for j in range(len(header) - 1)]:
            raise ValueError(f"unexpected waveform CSV header: {lines[0]!r}")
        table = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        return cls(table[:, 1:])


def grid(num_samples: int) -> np.ndarray:
    return np.arange(num_samples) / num_samples


def waveform_from_samples(samples) -> PeriodicWaveform:
    return PeriodicWaveform(samples)


def evaluate(w: PeriodicWaveform, theta):
    return w(theta)


def derivative(w: PeriodicWaveform) -> PeriodicWaveform:
    return w.derivative()


def concatenate(waveforms) -> PeriodicWaveform:
    """Stack waveforms with a common sample count into one of summed dim."""
    waveforms = list(waveforms)
    if not waveforms:
        raise ValueError("need at least one waveform")
    n = {w.num_samples for w in waveforms}
    if len(n) != 1:
        raise ValueError(f"waveforms have different sample counts: {sorted(n)}")
    return PeriodicWaveform(np.hstack([w.samples for w in waveforms]))


def format_csv(header: str, table) -> str:
    """CSV text with 17 significant digits so floats round-trip exactly."""
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(table), delimiter=",", fmt="%.17g",
               header=header, comments="")
    return buf.getvalue()

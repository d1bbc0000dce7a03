"""Single-oscillator PPV phase macromodel.

The phase obeys ``dphi/dt = f + f * p(phi) . b(t)`` with ``p`` the 1-periodic
PPV and ``b`` the input; the oscillator waveform is approximated by
``x_p(phi(t))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._ode import RTOL, Trajectory
from .periodic import PeriodicWaveform


@dataclass(frozen=True)
class Sinusoid:
    """``amplitude * sin(2 pi (frequency * t + phase))`` on one input component."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    component: int = 0


@dataclass(frozen=True)
class InputSignal:
    """Finite sum of sinusoids plus a constant offset, per vector component."""

    dim: int
    terms: tuple = ()
    offset: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("input dim must be >= 1")
        object.__setattr__(self, "terms", tuple(self.terms))
        off = tuple(float(v) for v in self.offset) if len(self.offset) else (0.0,) * self.dim
        if len(off) != self.dim:
            raise ValueError(f"offset has length {len(off)}, expected {self.dim}")
        object.__setattr__(self, "offset", off)
        for s in self.terms:
            if not 0 <= s.component < self.dim:
                raise ValueError(f"component {s.component} out of range for dim {self.dim}")
            if not np.all(np.isfinite([s.amplitude, s.frequency, s.phase])):
                raise ValueError("sinusoid parameters must be finite")
        if not np.all(np.isfinite(off)):
            raise ValueError("offset must be finite")

    @classmethod
    def zero(cls, dim):
        return cls(dim)

    @classmethod
    def constant(cls, dim, component, value):
        off = np.zeros(dim)
        off[component] = value
        return cls(dim, offset=tuple(off))

    @classmethod
    def sinusoid(cls, dim, component, amplitude, frequency, phase=0.0):
        return cls(dim, (Sinusoid(amplitude, frequency, phase, component),))

    @property
    def is_zero(self) -> bool:
        return not any(self.offset) and not any(s.amplitude for s in self.terms)

    def scaled(self, factor) -> InputSignal:
        terms = tuple(Sinusoid(s.amplitude * factor, s.frequency, s.phase, s.component)
                      for s in self.terms)
        return InputSignal(self.dim, terms, tuple(factor * v for v in self.offset))

    def __add__(self, other: InputSignal) -> InputSignal:
        if other.dim != self.dim:
            raise ValueError("cannot add inputs of different dims")
        off = tuple(a + b for a, b in zip(self.offset, other.offset))
        return InputSignal(self.dim, self.terms + other.terms, off)

    def __call__(self, t):
        """Value at time ``t``; shape ``(dim,)`` for scalar t, ``(m, dim)`` for arrays."""
        t = np.asarray(t, dtype=float)
        out = np.broadcast_to(np.asarray(self.offset), t.shape + (self.dim,)).copy()
        for s in self.terms:
            out[..., s.component] += s.amplitude * np.sin(2 * np.pi * (s.frequency * t + s.phase))
        return out

    def peak(self) -> float:
        """Upper bound on ``max_t |a(t)|_inf``."""
        bound = np.abs(np.asarray(self.offset))
        for s in self.terms:
            bound[s.component] += abs(s.amplitude)
        return float(bound.max())


@dataclass(frozen=True)
class OscillatorPhaseModel:
    f: float
    p: PeriodicWaveform
    x_p: Optional[PeriodicWaveform] = None
    label: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.f) and self.f > 0):
            raise ValueError(f"frequency must be finite and positive, got {self.f}")
        if not isinstance(self.p, PeriodicWaveform):
            raise TypeError("p must be a PeriodicWaveform")

    @property
    def input_dim(self) -> int:
        return self.p.dim

    @property
    def period(self) -> float:
        return 1.0 / self.f


def ppv_rhs(m: OscillatorPhaseModel, phi: float, b) -> float:
    """Right-hand side of the PPV phase equation at phase ``phi`` with input ``b``."""
    b = np.asarray(b, dtype=float)
    if b.shape != (m.p.dim,):
        raise ValueError(f"input has shape {b.shape}, expected ({m.p.dim},)")
    return m.f + m.f * np.dot(m.p(phi), b)


def simulate_phase(m: OscillatorPhaseModel, u: InputSignal | None, t0: float, t1: float,
                   tol: float = RTOL, *, phi0: float = 0.0, t_eval=None,
                   atol: float | None = None, method: str = "RK45") -> Trajectory:
    """Integrate the scalar phase ODE; the phase is returned unwrapped.

    ``tol`` is the relative tolerance; the absolute tolerance defaults to
    ``tol * ATOL / RTOL``.
    """
    from .network import simulate_cps, single

    if u is not None and u.dim != m.p.dim:
        raise ValueError(f"input dim {u.dim} does not match PPV dim {m.p.dim}")
    # shares the CPS code path so a one-oscillator network matches exactly
    return simulate_cps(single(m, u), [phi0], t0, t1, tol, t_eval=t_eval,
                        atol=atol, method=method)


def reconstruct_waveform(m: OscillatorPhaseModel, phi_traj: Trajectory) -> Trajectory:
    """State waveform ``x_p(phi(t))`` along a phase trajectory."""
    if m.x_p is None:
        raise ValueError(f"oscillator {m.label!r} has no steady-state waveform x_p")
    phi = np.asarray(phi_traj.y).reshape(len(phi_traj.t), -1)[:, 0]
    return Trajectory(t=phi_traj.t, y=m.x_p(phi), width=m.x_p.dim)

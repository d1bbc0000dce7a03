"""Canonical small networks used by the tests, the CLI and the README.

The basic block is a "quadrature" oscillator with PPV ``[-sin 2pi th, cos 2pi th]``
driven through ``b(phi_j) = K [cos 2pi phi_j, sin 2pi phi_j]``, which gives
Adler-form coupling ``K sin(2 pi (phi_j - phi_i))``.
"""

from __future__ import annotations

import numpy as np

from .network import CoupledPhaseSystem, Coupling
from .oscillator import OscillatorPhaseModel
from .periodic import DEFAULT_NUM_SAMPLES, PeriodicWaveform


def quadrature_ppv(num_samples=DEFAULT_NUM_SAMPLES) -> PeriodicWaveform:
    return PeriodicWaveform.from_function(
        lambda th: np.column_stack([-np.sin(2 * np.pi * th), np.cos(2 * np.pi * th)]),
        num_samples)


def quadrature_output(gain, num_samples=DEFAULT_NUM_SAMPLES) -> PeriodicWaveform:
    return PeriodicWaveform.from_function(
        lambda th: gain * np.column_stack([np.cos(2 * np.pi * th), np.sin(2 * np.pi * th)]),
        num_samples)


def quadrature_oscillator(f=1.0, label="", num_samples=DEFAULT_NUM_SAMPLES):
    x_p = PeriodicWaveform.from_function(lambda th: np.cos(2 * np.pi * th), num_samples)
    return OscillatorPhaseModel(f=f, p=quadrature_ppv(num_samples), x_p=x_p, label=label)


def adler_pair(f1=1.0, f2=1.0, K=0.1, num_samples=DEFAULT_NUM_SAMPLES) -> CoupledPhaseSystem:
    """Two quadrature oscillators coupled both ways with gain ``K``."""
    oscs = [quadrature_oscillator(f1, "osc1", num_samples),
            quadrature_oscillator(f2, "osc2", num_samples)]
    b = quadrature_output(K, num_samples)
    return CoupledPhaseSystem(oscs, [Coupling(1, 0, b), Coupling(0, 1, b)])


def detuned_pair(delta=0.02, K=0.1, f=1.0, num_samples=DEFAULT_NUM_SAMPLES):
    return adler_pair(f * (1 - delta), f * (1 + delta), K, num_samples)


def ring(n, K=0.1, detune=0.0, mixed=False, num_samples=DEFAULT_NUM_SAMPLES):
    """Bidirectional nearest-neighbour ring.

    With ``mixed=True`` each oscillator has the scalar PPV ``-sin 2pi th`` and
    emits ``K cos 2pi phi``, so the coupling carries a sum-frequency term and
    the locked phase deviations vary within each period. ``detune`` spreads
    the free-running frequencies as ``1 + detune * ((i % 3) - 1)``.
    """
    freqs = [1.0 + detune * ((i % 3) - 1) for i in range(n)]
    if mixed:
        p = PeriodicWaveform.from_function(lambda th: -np.sin(2 * np.pi * th), num_samples)
        b = PeriodicWaveform.from_function(lambda th: K * np.cos(2 * np.pi * th), num_samples)
        oscs = [OscillatorPhaseModel(f, p, label=f"osc{i + 1}") for i, f in enumerate(freqs)]
    else:
        b = quadrature_output(K, num_samples)
        oscs = [quadrature_oscillator(f, f"osc{i + 1}", num_samples)
                for i, f in enumerate(freqs)]
    pairs = {(i, (i + 1) % n) for i in range(n)} | {((i + 1) % n, i) for i in range(n)}
    couplings = [Coupling(j, i, b) for (j, i) in sorted(pairs) if i != j]
    return CoupledPhaseSystem(oscs, couplings)


def flat_pairs(kappa=0.01, K=0.1, freqs=(1.0, 1.0), num_samples=DEFAULT_NUM_SAMPLES):
    """Two Adler pairs with every member of one pair driving every member of the other.

    Each cross link carries ``kappa / 2``, so when a pair is in phase its two
    members together deliver ``kappa [cos, sin]`` of the pair's phase.
    """
    pairs = [adler_pair(f, f, K, num_samples) for f in freqs]
    oscs = [o for p in pairs for o in p.oscillators]
    couplings = [Coupling(c.src + 2 * k, c.dst + 2 * k, c.b)
                 for k, p in enumerate(pairs) for c in p.couplings]
    cross = quadrature_output(kappa / 2, num_samples)
    for i in range(2):
        for j in range(2):
            couplings += [Coupling(2 + j, i, cross), Coupling(j, 2 + i, cross)]
    return pairs, CoupledPhaseSystem(oscs, couplings)


def top_level(groups, kappa=0.01, num_samples=DEFAULT_NUM_SAMPLES):
    """Two nested group oscillators coupled with ``kappa [cos, sin, cos, sin]``."""
    b = PeriodicWaveform.from_function(
        lambda th: kappa * np.column_stack([np.cos(2 * np.pi * th), np.sin(2 * np.pi * th)] * 2),
        num_samples)
    return CoupledPhaseSystem(groups, [Coupling(1, 0, b), Coupling(0, 1, b)])

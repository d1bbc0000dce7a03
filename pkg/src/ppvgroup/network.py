"""Coupled Phase System (CPS): N PPV phase models with internal couplings.

Oscillator ``i`` sees the input ``b_i(t) = a_i(t) + sum_j b_ij(phi_j(t))`` and
the system phase obeys ``dphi/dt = g_phi(phi) + b_phi(phi, t)`` where ``g_phi``
collects the coupling-driven autonomous part and ``b_phi`` the external part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._ode import ATOL, RTOL, Trajectory, integrate
from .oscillator import InputSignal, OscillatorPhaseModel
from .periodic import PeriodicWaveform


@dataclass(frozen=True)
class Coupling:
    """Influence ``b_ij(phi_j)`` of oscillator ``src`` (j) on oscillator ``dst`` (i)."""

    src: int
    dst: int
    b: PeriodicWaveform

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"self-coupling on oscillator {self.src}")


class _WaveformBank:
    """Evaluate many waveforms, each at its own phase, in one vectorised pass."""

    def __init__(self, waveforms, phase_index):
        self.width = sum(w.dim for w in waveforms)
        if not waveforms:
            self.coef = np.zeros((1, 0), dtype=complex)
            self.src = np.zeros(0, dtype=int)
            self.harmonics = np.zeros(1)
            return
        nh = max(w._coef.shape[0] for w in waveforms)
        coef = np.zeros((nh, self.width), dtype=complex)
        src = np.empty(self.width, dtype=int)
        col = 0
        for w, j in zip(waveforms, phase_index):
            coef[: w._coef.shape[0], col : col + w.dim] = w._coef
            src[col : col + w.dim] = j
            col += w.dim
        self.coef = coef.T.copy()
        self.src = src
        self.harmonics = np.arange(nh)

    def __call__(self, phi):
        if self.width == 0:
            return np.zeros(0)
        basis = np.exp((2j * np.pi) * np.outer(np.mod(phi, 1.0), self.harmonics))
        return np.einsum("ck,ck->c", basis[self.src], self.coef).real


class CoupledPhaseSystem:
    """Immutable network of phase macromodels.

    Parameters
    ----------
    oscillators : sequence of OscillatorPhaseModel
    couplings : sequence of Coupling
        At most one coupling per ordered ``(src, dst)`` pair.
    external_inputs : mapping ``i -> InputSignal``, optional
    """

    def __init__(self, oscillators, couplings=(), external_inputs=None):
        self.oscillators = tuple(oscillators)
        self.couplings = tuple(couplings)
        self.external_inputs = dict(external_inputs or {})
        n = len(self.oscillators)
        if n < 1:
            raise ValueError("need at least one oscillator")
        seen = set()
        for c in self.couplings:
            if not (0 <= c.src < n and 0 <= c.dst < n):
                raise ValueError(f"coupling {c.src}->{c.dst} references a missing oscillator")
            if (c.src, c.dst) in seen:
                raise ValueError(f"duplicate coupling {c.src}->{c.dst}; pre-sum duplicates")
            seen.add((c.src, c.dst))
            if c.b.dim != self.oscillators[c.dst].input_dim:
                raise ValueError(f"coupling {c.src}->{c.dst} has dim {c.b.dim}, oscillator "
                                 f"{c.dst} takes {self.oscillators[c.dst].input_dim}")
        for i, a in self.external_inputs.items():
            if not 0 <= i < n:
                raise ValueError(f"external input for missing oscillator {i}")
            if a.dim != self.oscillators[i].input_dim:
                raise ValueError(f"external input {i} has dim {a.dim}, expected "
                                 f"{self.oscillators[i].input_dim}")
        self._build()

    def _build(self):
        n = self.size
        dims = [o.input_dim for o in self.oscillators]
        self._offsets = np.concatenate([[0], np.cumsum(dims)])
        width = int(self._offsets[-1])
        self.f = np.array([o.f for o in self.oscillators])
        self._seg = np.zeros((n, width))
        for i in range(n):
            self._seg[i, self._offsets[i] : self._offsets[i + 1]] = 1.0
        ps = [o.p for o in self.oscillators]
        self._p = _WaveformBank(ps, range(n))
        self._dp = _WaveformBank([w.derivative() for w in ps], range(n))
        cw = [c.b for c in self.couplings]
        self._c = _WaveformBank(cw, [c.src for c in self.couplings])
        self._dc = _WaveformBank([w.derivative() for w in cw], [c.src for c in self.couplings])
        # scatter coupling columns onto the input channels of their targets
        self._scatter = np.zeros((width, self._c.width))
        self._cdst = np.empty(self._c.width, dtype=int)
        col = 0
        for c in self.couplings:
            for ch in range(c.b.dim):
                self._scatter[self._offsets[c.dst] + ch, col] = 1.0
                self._cdst[col] = c.dst
                col += 1
        self._active_inputs = {i: a for i, a in self.external_inputs.items() if not a.is_zero}

    @property
    def size(self) -> int:
        return len(self.oscillators)

    @property
    def has_external_inputs(self) -> bool:
        return bool(self._active_inputs)

    def with_inputs(self, external_inputs) -> CoupledPhaseSystem:
        return CoupledPhaseSystem(self.oscillators, self.couplings, external_inputs)

    def without_inputs(self) -> CoupledPhaseSystem:
        return CoupledPhaseSystem(self.oscillators, self.couplings)

    def coupling_input(self, phi) -> np.ndarray:
        """Stacked internal coupling inputs ``sum_j b_ij(phi_j)`` for every oscillator."""
        return self._scatter @ self._c(np.asarray(phi, dtype=float))

    def external_input(self, t) -> np.ndarray:
        out = np.zeros(self._seg.shape[1])
        for i, a in self._active_inputs.items():
            out[self._offsets[i] : self._offsets[i + 1]] = a(t)
        return out

    def assemble_input(self, i: int, phi, t: float) -> np.ndarray:
        lo, hi = self._offsets[i], self._offsets[i + 1]
        return self.external_input(t)[lo:hi] + self.coupling_input(phi)[lo:hi]

    def g_phi(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        return self.f + self.f * (self._seg @ (self._p(phi) * self.coupling_input(phi)))

    def g_phi_t(self, t, phi) -> np.ndarray:
        """``g_phi`` with the ``(t, y)`` signature integrators expect."""
        return self.g_phi(phi)

    def b_phi(self, phi, t: float) -> np.ndarray:
        if not self._active_inputs:
            return np.zeros(self.size)
        phi = np.asarray(phi, dtype=float)
        return self.f * (self._seg @ (self._p(phi) * self.external_input(t)))

    def rhs(self, t, phi) -> np.ndarray:
        return self.g_phi(phi) + self.b_phi(phi, t)

    def g_jacobian(self, phi) -> np.ndarray:
        """``d g_phi / d phi`` at ``phi``.

        Diagonal entries are ``f_i p_i'(phi_i) . sum_j b_ij(phi_j)``; entry
        ``(i, j)`` is ``f_i p_i(phi_i) . b_ij'(phi_j)``.
        """
        phi = np.asarray(phi, dtype=float)
        jac = np.diag(self.f * (self._seg @ (self._dp(phi) * self.coupling_input(phi))))
        if self.couplings:
            pvals = self._p(phi)
            dc = self._dc(phi)
            # scatter per coupling column then reduce to (dst, src)
            prod = (self._scatter.T @ pvals) * dc
            np.add.at(jac, (self._cdst, self._c.src), self.f[self._cdst] * prod)
        return jac


def simulate_cps(cps: CoupledPhaseSystem, phi0, t0: float, t1: float, tol: float = RTOL,
                 *, t_eval=None, atol: float | None = None, method: str = "RK45",
                 dense: bool = False) -> Trajectory:
    """Integrate the CPS; ``nfev`` on the result counts vector RHS evaluations."""
    phi0 = np.asarray(phi0, dtype=float)
    if phi0.shape != (cps.size,):
        raise ValueError(f"phi0 has shape {phi0.shape}, expected ({cps.size},)")
    return integrate(cps.rhs, phi0, t0, t1, rtol=tol,
                     atol=tol * ATOL / RTOL if atol is None else atol,
                     t_eval=t_eval, method=method, dense=dense)


def single(m: OscillatorPhaseModel, u: InputSignal | None = None) -> CoupledPhaseSystem:
    """One-oscillator CPS with no couplings."""
    return CoupledPhaseSystem([m], (), {} if u is None else {0: u})

"""PPV extraction from state-space oscillators ``dx/dt = g(x) + B u(t)``.

The limit cycle is found by Newton shooting with the period as an unknown.
The PPV is the periodic solution of the adjoint variational equation,
normalised so that ``v1(t) . dx_s/dt = 1``; a small input ``u`` then advances
the phase as ``dphi/dt = f + f p(phi) . u`` with ``p(theta) = B^T v1(theta T)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._ode import PRECISE_ATOL, PRECISE_RTOL, integrate, integrate_backward
from .oscillator import OscillatorPhaseModel
from .periodic import DEFAULT_NUM_SAMPLES, PeriodicWaveform, grid


class ShootingError(RuntimeError):
    """Newton shooting did not converge."""


class DegenerateOrbitError(ShootingError):
    """The shooting Jacobian is singular: the orbit is not an isolated cycle."""


class MultiplierError(RuntimeError):
    """The monodromy matrix does not have exactly one multiplier at 1."""


@dataclass(frozen=True)
class StateSpaceOscillator:
    """Autonomous oscillator ``dx/dt = rhs(x) + input_matrix @ u``.

    ``jac`` is optional; without it the state Jacobian is approximated by
    central differences.
    """

    dim: int
    rhs: Callable
    input_matrix: np.ndarray
    jac: Optional[Callable] = None
    name: str = ""
    x_guess: Optional[tuple] = None
    T_guess: Optional[float] = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.input_matrix, dtype=float))
        if b.shape[0] != self.dim:
            raise ValueError(f"input_matrix has {b.shape[0]} rows, state dim is {self.dim}")
        if not np.all(np.isfinite(b)):
            raise ValueError("input_matrix must be finite")
        object.__setattr__(self, "input_matrix", b)

    @property
    def num_inputs(self) -> int:
        return self.input_matrix.shape[1]

    def jacobian(self, x) -> np.ndarray:
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float)
        x = np.asarray(x, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(x))
        cols = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h[k]
            cols.append((self.rhs(x + e) - self.rhs(x - e)) / (2 * h[k]))
        return np.column_stack(cols)


def _flow_with_sensitivity(o, x0, T, *, dense=False):
    """Integrate the state and its monodromy over ``[0, T]``."""
    n = o.dim

    def rhs(t, z):
        x = z[:n]
        phi = z[n:].reshape(n, n)
        return np.concatenate([o.rhs(x), (o.jacobian(x) @ phi).ravel()])

    z0 = np.concatenate([x0, np.eye(n).ravel()])
    traj = integrate(rhs, z0, 0.0, T, rtol=PRECISE_RTOL, atol=PRECISE_ATOL,
                     method="DOP853", dense=dense)
    z = traj.y[-1]
    return z[:n], z[n:].reshape(n, n), traj


def find_limit_cycle(o: StateSpaceOscillator, x_guess=None, T_guess=None, tol: float = 1e-10,
                     *, anchor: Optional[int] = None, num_samples: int = DEFAULT_NUM_SAMPLES,
                     max_iters: int = 50, settle_periods: float = 0.0):
    """Locate the periodic orbit through ``x_guess`` by Newton shooting.

    The unknowns are the initial state and the period; the extra equation pins
    state component ``anchor`` at its initial-guess value (a Poincare section).

    Returns
    -------
    T : float
        Period.
    x_p : PeriodicWaveform
        Orbit sampled at ``t = k T / num_samples``, i.e. the 1-periodic
        steady state ``x_p(theta) = x_s(theta T)``.
    """
    x = np.array(o.x_guess if x_guess is None else x_guess, dtype=float)
    T = float(o.T_guess if T_guess is None else T_guess)
    if not T > 0:
        raise ValueError("T_guess must be positive")
    n = o.dim
    if settle_periods > 0:
        x = integrate(lambda t, y: o.rhs(y), x, 0.0, settle_periods * T,
                      rtol=PRECISE_RTOL, atol=PRECISE_ATOL, method="DOP853").y[-1]
    if anchor is None:
        anchor = int(np.argmax(np.abs(o.rhs(x))))
    pin = x[anchor]
    for _ in range(max_iters):
        xT, mono, _ = _flow_with_sensitivity(o, x, T)
        res = np.concatenate([xT - x, [x[anchor] - pin]])
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = mono - np.eye(n)
        jac[:n, n] = o.rhs(xT)
        jac[n, anchor] = 1.0
        if np.linalg.cond(jac) > 1e10:
            raise DegenerateOrbitError(
                f"shooting Jacobian is singular (cond={np.linalg.cond(jac):.3g}); "
                "the orbit is not an isolated limit cycle")
        step = np.linalg.solve(jac, -res)
        x += step[:n]
        T += step[n]
        if not T > 0:
            raise ShootingError(f"period became non-positive ({T})")
        if np.max(np.abs(step)) < tol * max(1.0, T) and np.max(np.abs(res)) < 1e3 * tol:
            break
    else:
        raise ShootingError(f"shooting did not converge in {max_iters} iterations "
                            f"(residual {np.max(np.abs(res)):.3g})")
    ts = grid(num_samples) * T
    orbit = integrate(lambda t, y: o.rhs(y), x, 0.0, T, rtol=PRECISE_RTOL, atol=PRECISE_ATOL,
                      method="DOP853", t_eval=ts)
    return T, PeriodicWaveform(orbit.y)


@dataclass(frozen=True)
class AdjointResult:
    """State-level PPV and Floquet data of a limit cycle."""

    T: float
    v1: PeriodicWaveform  # v1(theta T), state dim
    xdot: PeriodicWaveform  # dx_s/dt at theta T
    multipliers: np.ndarray
    monodromy: np.ndarray


def state_adjoint(o: StateSpaceOscillator, T: float, x_p: PeriodicWaveform,
                  tol_unity: float = 1e-6) -> AdjointResult:
    """Periodic adjoint solution with ``v1 . dx_s/dt = 1``.

    Raises
    ------
    MultiplierError
        If no multiplier, or more than one, lies within ``tol_unity`` of 1.
    """
    n = o.dim
    x0 = x_p.samples[0]
    _, mono, fwd = _flow_with_sensitivity(o, x0, T, dense=True)
    rho, left = np.linalg.eig(mono.T)
    near = np.flatnonzero(np.abs(rho - 1.0) < tol_unity)
    if near.size == 0:
        raise MultiplierError(f"no monodromy eigenvalue within {tol_unity} of 1: {rho}")
    if near.size > 1:
        raise MultiplierError(f"{near.size} monodromy eigenvalues within {tol_unity} of 1")
    w = left[:, near[0]].real

    def adjoint(t, v):
        return -o.jacobian(fwd.dense(t)[:n]).T @ v

    ts = grid(x_p.num_samples) * T
    back = integrate_backward(adjoint, w, T, 0.0, t_eval=ts)
    v = back.y
    xdot = np.array([o.rhs(x) for x in fwd.dense(ts)[:n].T])
    v = v / np.dot(v[0], xdot[0])
    order = np.argsort(np.abs(rho - 1.0))
    return AdjointResult(T=T, v1=PeriodicWaveform(v), xdot=PeriodicWaveform(xdot),
                         multipliers=rho[order], monodromy=mono)


def extract_ppv(o: StateSpaceOscillator, T: float, x_p: PeriodicWaveform, *,
                tol_unity: float = 1e-6, label: str | None = None) -> OscillatorPhaseModel:
    """Phase macromodel with per-input-channel PPV ``p(theta) = B^T v1(theta T)``."""
    adj = state_adjoint(o, T, x_p, tol_unity)
    p = PeriodicWaveform(adj.v1.samples @ o.input_matrix)
    return OscillatorPhaseModel(f=1.0 / T, p=p, x_p=x_p, label=label or o.name)


# built-in example oscillators -------------------------------------------------

def hopf(omega: float = 2 * np.pi, lam: float = 1.0, input_matrix=None) -> StateSpaceOscillator:
    """Hopf normal form ``dr/dt = lam r (1 - r^2)``, ``dtheta/dt = omega``."""

    def rhs(x):
        r2 = x[0] ** 2 + x[1] ** 2
        return np.array([lam * x[0] * (1 - r2) - omega * x[1],
                         lam * x[1] * (1 - r2) + omega * x[0]])

    def jac(x):
        r2 = x[0] ** 2 + x[1] ** 2
        return np.array([[lam * (1 - r2 - 2 * x[0] ** 2), -2 * lam * x[0] * x[1] - omega],
                         [-2 * lam * x[0] * x[1] + omega, lam * (1 - r2 - 2 * x[1] ** 2)]])

    b = np.eye(2) if input_matrix is None else input_matrix
    return StateSpaceOscillator(2, rhs, b, jac, "hopf", (1.0, 0.0), 2 * np.pi / omega,
                                {"omega": omega, "lam": lam})


def vanderpol(mu: float = 1.0, input_matrix=None) -> StateSpaceOscillator:
    """``x' = y``, ``y' = mu (1 - x^2) y - x``; input enters the ``y`` equation."""

    def rhs(x):
        return np.array([x[1], mu * (1 - x[0] ** 2) * x[1] - x[0]])

    def jac(x):
        return np.array([[0.0, 1.0], [-2 * mu * x[0] * x[1] - 1.0, mu * (1 - x[0] ** 2)]])

    b = np.array([[0.0], [1.0]]) if input_matrix is None else input_matrix
    return StateSpaceOscillator(2, rhs, b, jac, "vanderpol", (2.0, 0.0), 6.66, {"mu": mu})


def fhn(a: float = 0.7, b: float = 0.8, eps: float = 0.08, current: float = 0.5,
        input_matrix=None) -> StateSpaceOscillator:
    """FitzHugh-Nagumo ``v' = v - v^3/3 - w + I``, ``w' = eps (v + a - b w)``."""

    def rhs(x):
        v, w = x
        return np.array([v - v ** 3 / 3 - w + current, eps * (v + a - b * w)])

    def jac(x):
        return np.array([[1 - x[0] ** 2, -1.0], [eps, -eps * b]])

    bm = np.array([[1.0], [0.0]]) if input_matrix is None else input_matrix
    return StateSpaceOscillator(2, rhs, bm, jac, "fhn", (-1.0, 1.0), 36.0,
                                {"a": a, "b": b, "eps": eps, "current": current})


def ring3(gain: float = 3.0, tau: float = 1.0, input_matrix=None) -> StateSpaceOscillator:
    """Three-stage ring of inverting tanh stages, ``tau x_i' = -x_i - tanh(gain x_{i-1})``."""

    def rhs(x):
        return (-x - np.tanh(gain * np.roll(x, 1))) / tau

    def jac(x):
        d = gain / np.cosh(gain * np.roll(x, 1)) ** 2
        j = -np.eye(3)
        for i in range(3):
            j[i, (i - 1) % 3] -= d[i]
        return j / tau

    b = np.array([[1.0], [0.0], [0.0]]) if input_matrix is None else input_matrix
    return StateSpaceOscillator(3, rhs, b, jac, "ring3", (1.0, 0.0, -1.0), 5.0 * tau,
                                {"gain": gain, "tau": tau})


BUILTINS = {"hopf": hopf, "vanderpol": vanderpol, "fhn": fhn, "ring3": ring3}


def builtin(name: str, **params) -> StateSpaceOscillator:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown builtin oscillator {name!r}; "
                         f"choose from {sorted(BUILTINS)}") from None
    return factory(**params)


def phase_model_from_builtin(name: str, *, num_samples: int = DEFAULT_NUM_SAMPLES,
                             settle_periods: float = 20.0, **params) -> OscillatorPhaseModel:
    o = builtin(name, **params)
    T, x_p = find_limit_cycle(o, num_samples=num_samples, settle_periods=settle_periods)
    return extract_ppv(o, T, x_p, label=name)

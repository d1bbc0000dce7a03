"""Floquet analysis of the CPS linearised about a locked solution.

The linearisation ``d(dphi)/dt = J*(t) dphi + b_ext(t)`` is T*-periodic. Only
the unity-multiplier mode is materialised: the tangent vector ``u1 = dphi*/dt``
and the adjoint ``v1``, the periodic solution of ``dw/dt = -J*^T w``
normalised so that ``v1 . u1 = 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._ode import PRECISE_ATOL, PRECISE_RTOL, integrate, integrate_backward
from .lock import LockedSolution
from .network import CoupledPhaseSystem
from .periodic import PeriodicWaveform, format_csv, grid

log = logging.getLogger(__name__)

NEAR_MARGINAL = 1e-3


class FloquetError(RuntimeError):
    """The multipliers violate the lock assumptions."""


class NoUnityMultiplierError(FloquetError):
    pass


class RepeatedUnityMultiplierError(FloquetError):
    pass


class UnstableLockError(FloquetError):
    pass


@dataclass(frozen=True)
class FloquetData:
    monodromy: np.ndarray
    multipliers: np.ndarray  # rho_1 first, then by decreasing modulus
    T_star: float
    u1: PeriodicWaveform
    v1: PeriodicWaveform
    unity_multiplier_ok: bool
    contraction_ok: bool
    warnings: tuple = field(default=())

    @property
    def exponents(self) -> np.ndarray:
        return np.log(self.multipliers.astype(complex)) / self.T_star

    @property
    def stable(self) -> bool:
        return self.unity_multiplier_ok and self.contraction_ok

    def biorthogonality_error(self) -> float:
        return float(np.max(np.abs(np.sum(self.v1.samples * self.u1.samples, axis=1) - 1.0)))

    def multipliers_csv(self) -> str:
        rho = self.multipliers
        mu = self.exponents
        table = np.column_stack([np.arange(1, rho.size + 1), rho.real, rho.imag, np.abs(rho),
                                 mu.real, mu.imag])
        return format_csv("index,rho_re,rho_im,rho_abs,mu_re,mu_im", table)


def jacobian_at(cps: CoupledPhaseSystem, sol: LockedSolution, t) -> np.ndarray:
    """``J*(t) = d g_phi / d phi`` evaluated on the locked orbit."""
    return cps.g_jacobian(sol.phi_star(float(t)))


def monodromy(cps: CoupledPhaseSystem, sol: LockedSolution) -> np.ndarray:
    """State-transition matrix of the linearised CPS over one period."""
    n = cps.size

    def rhs(t, m):
        return (jacobian_at(cps, sol, t) @ m.reshape(n, n)).ravel()

    return integrate(rhs, np.eye(n).ravel(), 0.0, sol.T_star, rtol=PRECISE_RTOL,
                     atol=PRECISE_ATOL, method="DOP853").y[-1].reshape(n, n)


def tangent_vector(cps: CoupledPhaseSystem, sol: LockedSolution) -> PeriodicWaveform:
    """``u1(s) = dphi*/dt`` at ``t = s T*``, taken as ``g_phi(phi*(t))``."""
    s = grid(sol.delta_phi_star.num_samples)
    return PeriodicWaveform(np.array([cps.g_phi(p) for p in sol.phi_star(s * sol.T_star)]))


def floquet_decompose(cps: CoupledPhaseSystem, M: np.ndarray, sol: LockedSolution,
                      tol_unity: float = 1e-6, margin: float = 1e-9) -> FloquetData:
    """Multipliers, stability flags, tangent ``u1`` and adjoint ``v1``.

    Raises
    ------
    NoUnityMultiplierError
        No multiplier lies within ``tol_unity`` of 1.
    RepeatedUnityMultiplierError
        More than one does.
    UnstableLockError
        Some other multiplier has modulus above ``1 + tol_unity``.
    """
    rho = np.linalg.eigvals(M)
    dist = np.abs(rho - 1.0)
    near = np.flatnonzero(dist < tol_unity)
    if near.size == 0:
        raise NoUnityMultiplierError(
            f"no Floquet multiplier within {tol_unity} of 1 (closest {rho[np.argmin(dist)]})")
    if near.size > 1:
        raise RepeatedUnityMultiplierError(
            f"{near.size} Floquet multipliers within {tol_unity} of 1: {rho[near]}")
    i1 = int(near[0])
    others = np.delete(rho, i1)
    others = others[np.argsort(-np.abs(others), kind="stable")]
    if np.any(np.abs(others) > 1.0 + tol_unity):
        raise UnstableLockError(f"unstable lock: multipliers {others[np.abs(others) > 1]}")
    multipliers = np.concatenate([[rho[i1]], others])
    unity_ok = bool(abs(rho[i1] - 1.0) < tol_unity)
    contraction_ok = bool(np.all(np.abs(others) <= 1.0 - margin))
    notes = []
    if others.size and 1.0 - np.abs(others[0]) < NEAR_MARGINAL:
        notes.append(f"near-marginal multiplier |rho_2| = {abs(others[0]):.6g}")
        log.warning(notes[-1])

    u1 = tangent_vector(cps, sol)
    lam, left = np.linalg.eig(M.T)
    w_T = left[:, np.argmin(np.abs(lam - 1.0))].real
    T = sol.T_star
    ts = grid(u1.num_samples) * T

    def adjoint(t, w):
        return -jacobian_at(cps, sol, t).T @ w

    v = integrate_backward(adjoint, w_T, T, 0.0, t_eval=ts).y
    v = v / np.dot(v[0], u1.samples[0])
    return FloquetData(monodromy=M, multipliers=multipliers, T_star=T, u1=u1,
                       v1=PeriodicWaveform(v), unity_multiplier_ok=unity_ok,
                       contraction_ok=contraction_ok, warnings=tuple(notes))


def analyse(cps: CoupledPhaseSystem, sol: LockedSolution, **kw) -> FloquetData:
    """``monodromy`` followed by ``floquet_decompose``."""
    return floquet_decompose(cps, monodromy(cps, sol), sol, **kw)


def adjoint_period_mismatch(cps: CoupledPhaseSystem, sol: LockedSolution,
                            fd: FloquetData) -> float:
    """Relative gap ``|v(0) - v(T*)|`` after integrating the adjoint back from ``v1(0)``."""
    back = integrate_backward(lambda t, w: -jacobian_at(cps, sol, t).T @ w,
                              fd.v1.samples[0], sol.T_star, 0.0)
    v0 = back.y[0]
    return float(np.max(np.abs(v0 - fd.v1.samples[0])) / np.max(np.abs(fd.v1.samples[0])))


@dataclass(frozen=True)
class BlowupResult:
    t: np.ndarray
    c1: np.ndarray
    deviation: np.ndarray  # dphi(t) of the linearised system, shape (m, N)
    slope: float

    @property
    def sup_c1(self) -> float:
        return float(np.max(np.abs(self.c1)))

    def to_csv(self) -> str:
        n = self.deviation.shape[1]
        header = ",".join(["t", "c1"] + [f"dphi_{i + 1}" for i in range(n)])
        return format_csv(header, np.column_stack([self.t, self.c1, self.deviation]))


def lptv_blowup_demo(cps: CoupledPhaseSystem, sol: LockedSolution, fd: FloquetData,
                     eps: float, horizon: float, *, forcing: str = "tangent",
                     direction=None, points_per_period: int = 20) -> BlowupResult:
    """Drive the linearised CPS and track ``c1(t) = int v1 . b_ext``.

    ``forcing="tangent"`` uses ``b_ext = eps u1(t)``, for which ``c1`` grows
    like ``eps t``. ``forcing="projected"`` uses ``eps (w - u1 (v1 . w))`` for a
    fixed ``direction`` w, which the adjoint annihilates, so ``c1`` stays
    bounded while the remaining modes decay.
    """
    if abs(eps) > 1e-2:
        raise ValueError("eps must be small (|eps| <= 1e-2)")
    T = sol.T_star
    if horizon < 10 * T:
        raise ValueError("horizon must cover at least 10 periods")
    n = cps.size
    if forcing not in ("tangent", "projected"):
        raise ValueError(f"unknown forcing {forcing!r}")
    if direction is None:
        direction = (-1.0) ** np.arange(n) / np.sqrt(n)
    w = np.asarray(direction, dtype=float)
    f = sol.f_star

    def b_ext(t):
        u = fd.u1(f * t)
        if forcing == "tangent":
            return eps * u
        return eps * (w - u * np.dot(fd.v1(f * t), w))

    def rhs(t, z):
        b = b_ext(t)
        return np.concatenate([jacobian_at(cps, sol, t) @ z[:n] + b, [np.dot(fd.v1(f * t), b)]])

    ts = np.linspace(0.0, horizon, int(np.ceil(horizon / T * points_per_period)) + 1)
    traj = integrate(rhs, np.zeros(n + 1), 0.0, horizon, rtol=1e-10, atol=1e-14,
                     method="DOP853", t_eval=ts)
    c1 = traj.y[:, n]
    slope = float(np.polyfit(ts, c1, 1)[0]) if eps else 0.0
    return BlowupResult(t=ts, c1=c1, deviation=traj.y[:, :n], slope=slope)

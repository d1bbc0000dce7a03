"""Mutually injection-locked solution of an unforced CPS.

A locked solution has the D-periodic form ``phi*(t) = f* t + dphi*(t)`` with
``dphi*`` periodic in ``T* = 1/f*``. It is stored as the 1-periodic waveform
``dphi*(s T*)`` of scaled time ``s`` and is unique only up to a time shift;
the shift is fixed by anchoring ``dphi*_1(0) = 0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from ._ode import PRECISE_ATOL, PRECISE_RTOL, IntegrationError, integrate
from .network import CoupledPhaseSystem
from .periodic import DEFAULT_NUM_SAMPLES, PeriodicWaveform, format_csv, grid

log = logging.getLogger(__name__)


class LockError(RuntimeError):
    """No locked solution was found."""


@dataclass(frozen=True)
class LockedSolution:
    f_star: float
    delta_phi_star: PeriodicWaveform
    residual_norm: float = 0.0
    anchor_shift: float = 0.0
    stable: bool | None = None
    multipliers: np.ndarray = field(default=None, compare=False, repr=False)
    iterations: int = 0

    @property
    def T_star(self) -> float:
        return 1.0 / self.f_star

    @property
    def size(self) -> int:
        return self.delta_phi_star.dim

    def phi_star(self, t):
        """``f* t + dphi*(t)``; shape ``(N,)`` for scalar t or ``(m, N)`` for arrays."""
        t = np.asarray(t, dtype=float)
        s = self.f_star * t
        return (s[..., None] if t.ndim else s) + self.delta_phi_star(s)

    def phi_star_dot(self, t):
        """Time derivative of ``phi*`` from the spectral derivative of ``dphi*``."""
        t = np.asarray(t, dtype=float)
        return self.f_star + self.f_star * self._ddelta()(self.f_star * t)

    def _ddelta(self):
        # memoised on the instance; the dataclass is frozen
        try:
            return self.__dict__["_ddelta_cache"]
        except KeyError:
            d = self.delta_phi_star.derivative()
            object.__setattr__(self, "_ddelta_cache", d)
            return d

    def meta(self) -> dict:
        return {"f_star": self.f_star, "T_star": self.T_star,
                "residual_norm": self.residual_norm, "anchor_shift": self.anchor_shift,
                "stable": self.stable, "iterations": self.iterations,
                "num_samples": self.delta_phi_star.num_samples, "N": self.size}

    def to_csv(self) -> str:
        header = ",".join(["s"] + [f"dphi_{i + 1}" for i in range(self.size)])
        w = self.delta_phi_star
        return format_csv(header, np.column_stack([w.theta, w.samples]))


def _period_map(cps, phi0, T, with_monodromy=True):
    n = cps.size
    if not with_monodromy:
        traj = integrate(cps.g_phi_t, phi0, 0.0, T, rtol=PRECISE_RTOL,
                         atol=PRECISE_ATOL, method="DOP853")
        return traj.y[-1], None

    def rhs(t, z):
        phi = z[:n]
        m = z[n:].reshape(n, n)
        return np.concatenate([cps.g_phi(phi), (cps.g_jacobian(phi) @ m).ravel()])

    z0 = np.concatenate([phi0, np.eye(n).ravel()])
    z = integrate(rhs, z0, 0.0, T, rtol=PRECISE_RTOL, atol=PRECISE_ATOL, method="DOP853").y[-1]
    return z[:n], z[n:].reshape(n, n)


def _newton_step(cps, f, phiT, mono, res):
    n = cps.size
    jac = np.empty((n, n))
    jac[:, 0] = -cps.g_phi(phiT) / f ** 2
    jac[:, 1:] = (mono - np.eye(n))[:, 1:]
    return np.linalg.lstsq(jac, -res, rcond=None)[0]


def _polish(cps, f, d, res, res_norm, mono, it):
    """One extra Newton step once converged, kept only if it lowers the residual."""
    phiT = np.concatenate([[0.0], d]) + 1.0 + res
    step = _newton_step(cps, f, phiT, mono, res)
    f2, d2 = f + step[0], d + step[1:]
    p0 = np.concatenate([[0.0], d2])
    phiT2, mono2 = _period_map(cps, p0, 1.0 / f2)
    r2 = float(np.max(np.abs(phiT2 - p0 - 1.0)))
    if r2 < res_norm:
        return f2, d2, r2, mono2, it + 1
    return f, d, res_norm, mono, it


def _newton(cps, f, d, tol, max_iters):
    """Newton iteration on ``(f*, dphi_2(0), ..., dphi_N(0))``."""
    res_norm = np.inf
    for it in range(max_iters + 1):
        if not f > 0:
            raise LockError(f"lock frequency drifted non-positive ({f})")
        phi0 = np.concatenate([[0.0], d])
        phiT, mono = _period_map(cps, phi0, 1.0 / f)
        res = phiT - phi0 - 1.0
        res_norm = float(np.max(np.abs(res)))
        if res_norm < tol:
            return _polish(cps, f, d, res, res_norm, mono, it)
        if it == max_iters:
            break
        step = _newton_step(cps, f, phiT, mono, res)
        # damp until the residual decreases
        lam = 1.0
        for _ in range(8):
            f_try, d_try = f + lam * step[0], d + lam * step[1:]
            if f_try > 0:
                p0 = np.concatenate([[0.0], d_try])
                r_try = _period_map(cps, p0, 1.0 / f_try, with_monodromy=False)[0] - p0 - 1.0
                if np.max(np.abs(r_try)) < res_norm:
                    break
            lam *= 0.5
        f, d = f_try, d_try
    raise LockError(f"Newton did not converge in {max_iters} iterations "
                    f"(residual {res_norm:.3g})")


def _settle(cps, f_guess, dphi_guess, periods):
    """Transient run to refresh ``(f*, dphi(0))`` guesses from a settled state."""
    phi0 = np.concatenate([[0.0], dphi_guess])
    t_settle = periods / f_guess
    settled = integrate(cps.g_phi_t, phi0, 0.0, t_settle, rtol=1e-10, atol=1e-12,
                        method="DOP853").y[-1]
    tail = integrate(cps.g_phi_t, settled, 0.0, 5.0 / f_guess, rtol=1e-10, atol=1e-12,
                     method="DOP853", dense=True)
    f_est = float(np.mean(tail.y[-1] - tail.y[0]) / tail.t[-1])
    # first crossing of phi_1 through an integer gives the anchored state
    target = np.ceil(settled[0])
    g = lambda t: tail.dense(t)[0] - target  # noqa: E731
    t_cross = brentq(g, 0.0, tail.t[-1], xtol=1e-14)
    state = tail.dense(t_cross) - target
    return f_est, state[1:]


def find_lock(cps: CoupledPhaseSystem, f_guess: float | None = None, dphi_guess=None, *,
              tol: float = 1e-9, max_iters: int = 25, num_samples: int = DEFAULT_NUM_SAMPLES,
              settle_periods: float = 200.0) -> LockedSolution:
    """Shoot for ``phi(T*) = phi(0) + 1`` with ``phi_1(0) = 0``.

    Falls back once to a transient-settled initial guess when Newton fails.
    The returned solution is flagged ``stable=False`` when any non-unity
    multiplier of the one-period map has modulus >= 1.
    """
    if cps.has_external_inputs:
        raise ValueError("find_lock needs a CPS without external inputs")
    n = cps.size
    f = float(np.mean(cps.f) if f_guess is None else f_guess)
    if not f > 0:
        raise ValueError("f_guess must be positive")
    d = np.zeros(n - 1) if dphi_guess is None else np.asarray(dphi_guess, dtype=float)
    if d.size == n:
        d = d[1:] - d[0]
    if d.shape != (n - 1,):
        raise ValueError(f"dphi_guess must have length {n} or {n - 1}")
    try:
        f, d, res, mono, its = _newton(cps, f, d, tol, max_iters)
    except (LockError, IntegrationError) as exc:
        if settle_periods <= 0:
            raise
        log.info("Newton failed (%s); retrying from a settled transient", exc)
        f, d = _settle(cps, f, d, settle_periods)
        f, d, res, mono, its = _newton(cps, f, d, tol, max_iters)
    phi0 = np.concatenate([[0.0], d])
    s = grid(num_samples)
    T = 1.0 / f
    orbit = integrate(cps.g_phi_t, phi0, 0.0, T, rtol=PRECISE_RTOL, atol=PRECISE_ATOL,
                      method="DOP853", t_eval=s * T)
    dphi = orbit.y - s[:, None]
    dphi[0] = phi0
    rho = np.linalg.eigvals(mono)
    others = np.delete(rho, np.argmin(np.abs(rho - 1.0)))
    stable = bool(np.all(np.abs(others) < 1.0))
    if not stable:
        log.warning("locked solution is not stable: multipliers %s", rho)
    return LockedSolution(f_star=f, delta_phi_star=PeriodicWaveform(dphi), residual_norm=res,
                          stable=stable, multipliers=rho, iterations=its)


def phi_star(sol: LockedSolution, t):
    return sol.phi_star(t)


def shift_lock(sol: LockedSolution, tau: float) -> LockedSolution:
    """Time-shifted solution ``phi*(t - tau)`` in the same storage.

    Whole-cycle offsets common to every component are dropped, which is an
    exact symmetry of the CPS.
    """
    c = sol.f_star * tau
    frac = c - np.floor(c)
    w = sol.delta_phi_star
    if frac == 0.0:
        shifted = w
    else:
        shifted = PeriodicWaveform(w(w.theta - c) - frac)
    return replace(sol, delta_phi_star=shifted,
                   anchor_shift=float(np.mod(sol.anchor_shift + tau, sol.T_star)))


@dataclass(frozen=True)
class LockReport:
    period_residual: float
    max_defect: float
    max_drift: float
    orbit_error: float
    defect_tol: float

    @property
    def flagged(self) -> bool:
        return self.max_defect > self.defect_tol

    def ok(self, tol: float = 1e-8) -> bool:
        return max(self.period_residual, self.max_defect, self.max_drift) < tol


def verify_lock(cps: CoupledPhaseSystem, sol: LockedSolution, *, periods: int = 20,
                defect_tol: float = 1e-6, oversample: int = 4) -> LockReport:
    """Re-integrate from ``phi*(0)`` and measure how well ``sol`` solves the CPS."""
    T = sol.T_star
    phi0 = sol.phi_star(0.0)
    ts = np.arange(periods + 1) * T
    long = integrate(cps.g_phi_t, phi0, 0.0, periods * T, rtol=PRECISE_RTOL,
                     atol=PRECISE_ATOL, method="DOP853", t_eval=ts)
    gains = np.diff(long.y, axis=0)
    period_residual = float(np.max(np.abs(gains[0] - 1.0)))
    drift = float(np.max(np.abs(gains - 1.0)))
    orbit = float(np.max(np.abs(long.y - sol.phi_star(ts))))
    tt = np.arange(oversample * sol.delta_phi_star.num_samples) * T / (
        oversample * sol.delta_phi_star.num_samples)
    lhs = sol.phi_star_dot(tt)
    rhs = np.array([cps.g_phi(p) for p in sol.phi_star(tt)])
    defect = float(np.max(np.abs(lhs - rhs)))
    return LockReport(period_residual, defect, drift, orbit, defect_tol)

"""Thin wrapper over scipy's adaptive explicit Runge-Kutta integrators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

RTOL = 1e-8
ATOL = 1e-10
# lock, Floquet and PPV extraction need residuals well below 1e-9
PRECISE_RTOL = 1e-12
PRECISE_ATOL = 1e-13


class IntegrationError(RuntimeError):
    """The integrator stopped before reaching the final time."""

    def __init__(self, message, t_fail):
        super().__init__(f"{message} (at t={t_fail!r})")
        self.t_fail = t_fail


@dataclass(frozen=True)
class Trajectory:
    """Samples ``y[k]`` of a solution at times ``t[k]``.

    ``nfev`` counts vector right-hand-side evaluations and ``width`` is the
    number of scalar components produced per evaluation.
    """

    t: np.ndarray
    y: np.ndarray
    nfev: int = 0
    width: int = 1
    dense: object = field(default=None, repr=False, compare=False)

    @property
    def component_evals(self) -> int:
        return self.nfev * self.width

    def to_csv(self, names) -> str:
        from .periodic import format_csv

        return format_csv(",".join(["t", *names]), np.column_stack([self.t, self.y]))


def output_times(t0, t1, t_eval=None, points_per_unit=None):
    if t_eval is not None:
        return np.asarray(t_eval, dtype=float)
    if points_per_unit is None:
        return None
    n = max(2, int(np.ceil((t1 - t0) * points_per_unit)) + 1)
    return np.linspace(t0, t1, n)


def integrate(rhs, y0, t0, t1, *, rtol=RTOL, atol=ATOL, t_eval=None,
              method="RK45", dense=False, max_step=np.inf) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y)`` from ``t0`` to ``t1``.

    Raises
    ------
    IntegrationError
        If the step size underflows or the right-hand side goes non-finite.
    """
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got t0={t0}, t1={t1}")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    y0 = np.asarray(y0, dtype=float)

    def checked(t, y):
        dy = rhs(t, y)
        if not np.all(np.isfinite(dy)):
            raise IntegrationError("right-hand side became non-finite", float(t))
        return dy

    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(checked, (t0, t1), y0, method=method, t_eval=t_eval, rtol=rtol,
                        atol=atol, dense_output=dense, max_step=max_step)
    if sol.status != 0:
        ts = np.atleast_1d(np.asarray(sol.t, dtype=float))
        t_fail = float(ts[-1]) if ts.size else t0
        raise IntegrationError(f"integration failed: {sol.message}", t_fail)
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError("solution became non-finite", float(sol.t[-1]))
    return Trajectory(t=sol.t, y=sol.y.T, nfev=int(sol.nfev), width=y0.size,
                      dense=sol.sol)


def integrate_backward(rhs, y_end, t_end, t_start, *, rtol=PRECISE_RTOL,
                       atol=PRECISE_ATOL, t_eval=None, method="DOP853"):
    """Integrate from ``t_end`` down to ``t_start``; samples returned in increasing time."""
    sol = solve_ivp(rhs, (t_end, t_start), np.asarray(y_end, dtype=float),
                    method=method, rtol=rtol, atol=atol,
                    t_eval=None if t_eval is None else np.asarray(t_eval)[::-1])
    if sol.status != 0:
        raise IntegrationError(f"backward integration failed: {sol.message}",
                               float(sol.t[-1]))
    return Trajectory(t=sol.t[::-1], y=sol.y.T[::-1], nfev=int(sol.nfev),
                      width=len(y_end))

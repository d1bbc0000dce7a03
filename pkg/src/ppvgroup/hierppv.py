"""Group PPV macromodel of a synchronised oscillator group.

Under small external inputs ``a_i(t)`` the group follows its locked orbit with
a time shift ``alpha(t)`` obeying the scalar equation

    dalpha/dt = v1(t + alpha) . b_phi(phi*(t + alpha), t)

Writing ``Phi_g = f* (t + alpha)`` this is ``dPhi_g/dt = f* + f* sum_i
q_i(Phi_g) . a_i(t)`` with channel PPVs ``q_i(th) = v1_i(th) f_i p_i(phi*_i(th T*))``,
the same form as a single oscillator's PPV equation, so a group can be
re-used as one oscillator one level up.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from ._ode import ATOL, RTOL, integrate
from .floquet import FloquetData
from .lock import LockedSolution
from .network import CoupledPhaseSystem, simulate_cps
from .oscillator import InputSignal, OscillatorPhaseModel, Sinusoid
from .periodic import PeriodicWaveform, concatenate, format_csv, grid

log = logging.getLogger(__name__)

VALIDATION_RTOL = 1e-11
VALIDATION_ATOL = 1e-12
SLIP_DEVIATION = 0.25  # cycles


class GroupModelError(RuntimeError):
    """The group cannot be abstracted (lock assumptions violated)."""


class InputAmplitudeWarning(UserWarning):
    """External input is not small compared with the internal coupling."""


@dataclass(frozen=True)
class GroupPPVModel:
    f_star: float
    lock: LockedSolution
    v1: PeriodicWaveform
    channels: tuple  # q_i, one PeriodicWaveform per member oscillator
    frequencies: np.ndarray
    ppvs: tuple  # member PPVs p_i, for the direct form of the group equation
    coupling_scale: float = 0.0
    label: str = ""

    @property
    def size(self) -> int:
        return len(self.channels)

    @property
    def T_star(self) -> float:
        return 1.0 / self.f_star

    @property
    def input_dims(self) -> list:
        return [q.dim for q in self.channels]

    @property
    def stacked(self) -> PeriodicWaveform:
        return concatenate(self.channels)

    def channels_csv(self) -> str:
        q = self.stacked
        names = [f"q{i + 1}_{c}" for i, w in enumerate(self.channels) for c in range(w.dim)]
        return format_csv(",".join(["theta", *names]), np.column_stack([q.theta, q.samples]))


def _channel_samples(cps, sol, v1):
    s = grid(v1.num_samples)
    phis = sol.phi_star(s * sol.T_star)
    out = []
    for i, osc in enumerate(cps.oscillators):
        out.append(PeriodicWaveform(v1.samples[:, i : i + 1] * osc.f * osc.p(phis[:, i])))
    return out


def _coupling_scale(cps):
    if not cps.couplings:
        return 0.0
    return float(max(np.max(np.abs(c.b.samples)) for c in cps.couplings))


def build_group_model(cps: CoupledPhaseSystem, sol: LockedSolution, fd: FloquetData, *,
                      exact_trivial: bool = True, label: str = "") -> GroupPPVModel:
    """Channel PPVs of the group from the adjoint ``v1`` and the locked orbit.

    A single uncoupled oscillator is returned with ``q_1 = p_1`` exactly when
    ``exact_trivial`` is set; otherwise it goes through the general formula.
    """
    if not fd.stable:
        raise GroupModelError(
            f"lock is not stable enough to abstract (unity_multiplier_ok="
            f"{fd.unity_multiplier_ok}, contraction_ok={fd.contraction_ok}, "
            f"multipliers={fd.multipliers})")
    ppvs = tuple(o.p for o in cps.oscillators)
    freqs = np.array([o.f for o in cps.oscillators])
    if exact_trivial and cps.size == 1 and not cps.couplings:
        osc = cps.oscillators[0]
        v1 = PeriodicWaveform.constant([1.0 / osc.f], osc.p.num_samples)
        return GroupPPVModel(osc.f, sol, v1, (osc.p,), freqs, ppvs, 0.0, label or osc.label)
    channels = _channel_samples(cps, sol, fd.v1)
    return GroupPPVModel(sol.f_star, sol, fd.v1, tuple(channels), freqs, ppvs,
                         _coupling_scale(cps), label)


def stack_inputs(signals, dims) -> InputSignal:
    """Concatenate per-member inputs into one input of dim ``sum(dims)``."""
    terms, offset, base = [], [], 0
    for sig, d in zip(signals, dims):
        if sig is None:
            offset.extend([0.0] * d)
        else:
            if sig.dim != d:
                raise ValueError(f"input dim {sig.dim} does not match port dim {d}")
            terms.extend(Sinusoid(s.amplitude, s.frequency, s.phase, s.component + base)
                         for s in sig.terms)
            offset.extend(sig.offset)
        base += d
    return InputSignal(base, tuple(terms), tuple(offset))


def _stacked_input(gm, inputs):
    inputs = inputs or {}
    for i in inputs:
        if not 0 <= i < gm.size:
            raise ValueError(f"input for missing member {i}")
    return stack_inputs([inputs.get(i) for i in range(gm.size)], gm.input_dims)


def _check_amplitude(gm, u, guard):
    peak = u.peak()
    if gm.coupling_scale and peak > guard * gm.coupling_scale:
        warnings.warn(f"input peak {peak:.3g} exceeds {guard} x coupling scale "
                      f"{gm.coupling_scale:.3g}; the group model assumes small inputs",
                      InputAmplitudeWarning, stacklevel=3)


def channel_rhs(gm: GroupPPVModel, inputs, t, alpha) -> float:
    """``dalpha/dt`` via the channel form ``sum_i q_i(Phi_g) . a_i(t)``."""
    u = _stacked_input(gm, inputs)
    return float(np.dot(gm.stacked(gm.f_star * (t + alpha)), u(t)))


def boxed_rhs(gm: GroupPPVModel, cps: CoupledPhaseSystem, t, alpha) -> float:
    """``dalpha/dt`` via ``v1(t + alpha) . b_phi(phi*(t + alpha), t)`` on ``cps``'s inputs."""
    tau = t + alpha
    return float(np.dot(gm.v1(gm.f_star * tau), cps.b_phi(gm.lock.phi_star(tau), t)))


@dataclass(frozen=True)
class GroupTrajectory:
    t: np.ndarray
    alpha: np.ndarray
    f_star: float
    nfev: int
    max_alpha_rate: float

    @property
    def group_phase(self) -> np.ndarray:
        return self.f_star * (self.t + self.alpha)

    @property
    def shift_invertible(self) -> bool:
        """Whether ``t -> t + alpha(t)`` stayed monotone (``dalpha/dt > -1``)."""
        return self.max_alpha_rate < 1.0

    def to_csv(self) -> str:
        return format_csv("t,alpha,Phi_g",
                          np.column_stack([self.t, self.alpha, self.group_phase]))


def simulate_group(gm: GroupPPVModel, inputs, t0: float, t1: float, tol: float = 1e-8, *,
                   t_eval=None, atol: float | None = None, method: str = "RK45",
                   amplitude_guard: float = 0.1) -> GroupTrajectory:
    """Integrate the scalar group equation with ``alpha(t0) = 0``.

    ``inputs`` maps member index to its external ``InputSignal``. ``nfev``
    counts scalar right-hand-side evaluations.
    """
    u = _stacked_input(gm, inputs)
    _check_amplitude(gm, u, amplitude_guard)
    q = gm.stacked
    f = gm.f_star

    # integrate the group phase Phi_g = f* (t + alpha), which has the same
    # scale as the member phases, so tolerances mean the same thing as in
    # the full CPS; alpha(t0) = 0 means Phi_g(t0) = f* t0
    def rhs(t, y):
        return np.array([f + f * np.dot(q(y[0]), u(t))])

    traj = integrate(rhs, [f * t0], t0, t1, rtol=tol,
                     atol=tol * ATOL / RTOL if atol is None else atol,
                     t_eval=t_eval, method=method)
    big_phi = traj.y[:, 0]
    alpha = big_phi / f - traj.t
    rates = np.abs([np.dot(q(p), u(t)) for t, p in zip(traj.t, big_phi)])
    return GroupTrajectory(traj.t, alpha, f, traj.nfev, float(rates.max()) if rates.size else 0.0)


def reconstruct_phases(gm: GroupPPVModel, traj: GroupTrajectory) -> np.ndarray:
    """Member phases ``phi*(t + alpha(t))``, shape ``(m, N)``."""
    return gm.lock.phi_star(traj.t + traj.alpha)


def project_onto_orbit(sol: LockedSolution, t, phi, alpha0=0.0, *, method="orbit",
                       v1: PeriodicWaveform | None = None, max_iters=50) -> float:
    """Time shift ``alpha`` placing ``phi*(t + alpha)`` closest to ``phi``.

    ``method="orbit"`` minimises the Euclidean distance (Gauss-Newton);
    ``method="adjoint"`` instead zeroes ``v1(t + alpha) . (phi - phi*(t + alpha))``.
    """
    a = float(alpha0)
    for _ in range(max_iters):
        tau = t + a
        r = phi - sol.phi_star(tau)
        u = sol.phi_star_dot(tau)
        if method == "orbit":
            step = np.dot(r, u) / np.dot(u, u)
        elif method == "adjoint":
            w = v1(sol.f_star * tau)
            step = np.dot(w, r) / np.dot(w, u)
        else:
            raise ValueError(f"unknown projection {method!r}")
        a += step
        if abs(step) < 1e-15 * max(1.0, abs(tau)):
            break
    return a


@dataclass(frozen=True)
class ValidationReport:
    t: np.ndarray
    alpha_h: np.ndarray
    alpha_hat: np.ndarray
    deviation: np.ndarray  # phi_full - phi*(t + alpha_hat), cycles
    sup_dphi: float
    alpha_mismatch: float  # cycles
    nfev_full: int
    nfev_reduced: int
    full_component_evals: int
    reduced_scalar_evals: int
    periods: float
    lock_slip: bool
    shift_invertible: bool
    deviation_rate_ratio: float

    @property
    def full_evals_per_period(self) -> float:
        return self.full_component_evals / self.periods

    @property
    def reduced_evals_per_period(self) -> float:
        return self.reduced_scalar_evals / self.periods

    @property
    def cost_ratio(self) -> float:
        return self.reduced_evals_per_period / self.full_evals_per_period

    FIELDS = ("sup_dphi", "alpha_mismatch", "nfev_full", "nfev_reduced",
              "full_component_evals", "reduced_scalar_evals", "full_evals_per_period",
              "reduced_evals_per_period", "cost_ratio", "periods", "lock_slip",
              "shift_invertible", "deviation_rate_ratio")

    def row(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}

    def to_csv(self) -> str:
        vals = []
        for v in self.row().values():
            vals.append(str(int(v)) if isinstance(v, (bool, np.bool_)) else f"{v:.17g}")
        return ",".join(self.FIELDS) + "\n" + ",".join(vals) + "\n"

    def trajectory_csv(self) -> str:
        n = self.deviation.shape[1]
        header = ",".join(["t", "alpha_h", "alpha_hat"] + [f"dphi_{i + 1}" for i in range(n)])
        return format_csv(header, np.column_stack([self.t, self.alpha_h, self.alpha_hat,
                                                   self.deviation]))

    def summary(self) -> str:
        lines = [
            f"sup |dphi|_inf      = {self.sup_dphi:.3e} cycles",
            f"sup |alpha_h - alpha_hat| = {self.alpha_mismatch:.3e} cycles",
            f"RHS evals: full {self.nfev_full} x {self.full_component_evals // max(1, self.nfev_full)}"
            f" components, reduced {self.nfev_reduced} scalar",
            f"cost ratio (reduced/full per period) = {self.cost_ratio:.4f}",
        ]
        if self.lock_slip:
            lines.append("WARNING: lock slip detected")
        if not self.shift_invertible:
            lines.append("WARNING: shifted time t + alpha(t) was not monotone")
        return "\n".join(lines)


def validate_reduction(cps: CoupledPhaseSystem, gm: GroupPPVModel, inputs, t0: float,
                       t1: float, *, reference: LockedSolution | None = None,
                       reduced_inputs=None, points_per_period: int = 20,
                       rtol: float = VALIDATION_RTOL, atol: float = VALIDATION_ATOL,
                       method: str = "DOP853", projection: str = "orbit") -> ValidationReport:
    """Compare the full CPS under ``inputs`` against the group model.

    ``reference`` is the locked orbit the full solution is projected onto
    (default ``gm.lock``); ``reduced_inputs`` are the group model's inputs
    (default ``inputs``). Both are needed when ``gm`` abstracts a hierarchy
    whose flat network is ``cps``.
    """
    ref = gm.lock if reference is None else reference
    if ref.size != cps.size:
        raise ValueError(f"reference orbit has {ref.size} phases, CPS has {cps.size}")
    inputs = dict(inputs or {})
    red_in = inputs if reduced_inputs is None else dict(reduced_inputs)
    T = ref.T_star
    ts = np.linspace(t0, t1, int(np.ceil((t1 - t0) / T * points_per_period)) + 1)
    full = simulate_cps(cps.with_inputs(inputs), ref.phi_star(t0), t0, t1, rtol,
                        atol=atol, t_eval=ts, method=method)
    red = simulate_group(gm, red_in, t0, t1, rtol, atol=atol, t_eval=ts, method=method)
    v1 = gm.v1 if reference is None else None
    if projection == "adjoint" and v1 is None:
        raise ValueError("adjoint projection needs the group's own lock as reference")
    alpha_hat = np.empty(ts.size)
    a = 0.0
    slip = False
    for k, (t, phi) in enumerate(zip(full.t, full.y)):
        a_new = project_onto_orbit(ref, t, phi, a, method=projection, v1=v1)
        if k and abs(a_new - a) * ref.f_star > 0.5:
            slip = True
        alpha_hat[k] = a = a_new
    dev = full.y - ref.phi_star(ts + alpha_hat)
    dnorm = np.max(np.abs(dev), axis=1)
    # a slipping member drifts off the orbit even when alpha_hat stays smooth
    slip = slip or bool(dnorm.max() > SLIP_DEVIATION)
    rate = np.max(np.abs(np.gradient(dev, ts, axis=0)), axis=1)
    mask = dnorm > 1e-3 * max(dnorm.max(), 1e-300)
    ratio = float(np.max(rate[mask] / dnorm[mask])) if mask.any() else 0.0
    periods = (t1 - t0) / T
    if slip:
        log.warning("lock slip detected during validation")
    return ValidationReport(
        t=ts, alpha_h=red.alpha, alpha_hat=alpha_hat, deviation=dev,
        sup_dphi=float(dnorm.max()),
        alpha_mismatch=float(np.max(np.abs(red.alpha - alpha_hat)) * ref.f_star),
        nfev_full=full.nfev, nfev_reduced=red.nfev,
        full_component_evals=full.component_evals, reduced_scalar_evals=red.nfev,
        periods=periods, lock_slip=slip, shift_invertible=red.shift_invertible,
        deviation_rate_ratio=ratio)


def nest_as_oscillator(gm: GroupPPVModel, port_selection=None, *, label: str | None = None,
                       x_p: PeriodicWaveform | None = None) -> OscillatorPhaseModel:
    """The group as a single phase model with ``f = f*`` and PPV from selected channels.

    ``port_selection`` is a list of ``(member index, channel indices)``;
    ``None`` selects every channel of every member in order.
    """
    if port_selection is None:
        port_selection = [(i, list(range(q.dim))) for i, q in enumerate(gm.channels)]
    port_selection = list(port_selection)
    if not port_selection:
        raise ValueError("empty port selection")
    parts = []
    for i, chans in port_selection:
        if not 0 <= i < gm.size:
            raise ValueError(f"no member {i} in group of {gm.size}")
        chans = list(chans)
        if not chans or any(not 0 <= c < gm.channels[i].dim for c in chans):
            raise ValueError(f"invalid channels {chans} for member {i}")
        q = gm.channels[i]
        parts.append(q if chans == list(range(q.dim)) else q.component(chans))
    p = parts[0] if len(parts) == 1 else concatenate(parts)
    return OscillatorPhaseModel(f=gm.f_star, p=p, x_p=x_p, label=label or gm.label)


def flatten_lock(top: LockedSolution, groups) -> LockedSolution:
    """Locked orbit of the flat network implied by a two-level hierarchy.

    Member ``i`` of group ``g`` sits at ``phi*_g,i(Phi_g / f*_g)`` where
    ``Phi_g = phi*_top,g(t)`` is the group phase.
    """
    groups = list(groups)
    if len(groups) != top.size:
        raise ValueError(f"{len(groups)} groups for a top level of {top.size}")
    s = grid(top.delta_phi_star.num_samples)
    big_phi = top.phi_star(s * top.T_star)
    cols = [g.lock.phi_star(big_phi[:, k] / g.f_star) for k, g in enumerate(groups)]
    flat = np.hstack(cols) - s[:, None]
    return LockedSolution(f_star=top.f_star, delta_phi_star=PeriodicWaveform(flat),
                          residual_norm=float("nan"), stable=top.stable)

"""Command-line front end: ``hierppv <command> --config net.yaml --out DIR``.

Exit codes
----------
0  success
1  configuration could not be read or validated (no files are written)
2  lock solver or oscillator extraction failed, or the lock is unstable
3  Floquet stability flags failed (no unique unity multiplier, no contraction)
4  numerical integration failed

Every command computes all of its outputs in memory first and writes them
only on success. Flags override ``HIERPPV_*`` environment variables, which
override the config's ``solver`` section.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ._ode import IntegrationError
from .floquet import FloquetError, analyse, lptv_blowup_demo
from .hierppv import (GroupModelError, build_group_model, reconstruct_phases, simulate_group,
                      validate_reduction)
from .lock import LockError, find_lock, shift_lock
from .network import CoupledPhaseSystem, Coupling, simulate_cps
from .oscillator import InputSignal, OscillatorPhaseModel, Sinusoid
from .periodic import DEFAULT_NUM_SAMPLES, PeriodicWaveform, format_csv
from .prc import BUILTINS, MultiplierError, ShootingError, phase_model_from_builtin

log = logging.getLogger("ppvgroup.cli")

ENV_PREFIX = "HIERPPV_"
EXIT_OK, EXIT_CONFIG, EXIT_LOCK, EXIT_STABILITY, EXIT_INTEGRATION = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


# --- configuration ----------------------------------------------------------

_TOP_KEYS = {"num_samples", "oscillators", "couplings", "inputs", "solver", "blowup"}
_OSC_KEYS = {"label", "f", "ppv", "builtin", "params"}
_COUPLING_KEYS = {"src", "dst", "waveform", "gain"}
_INPUT_KEYS = {"dst", "channel", "amplitude", "frequency", "phase", "offset"}
_SOLVER_KEYS = {"tol", "lock_tol", "horizon", "f_guess", "dphi_guess", "seed_shift",
                "settle_periods", "points_per_period", "projection", "method",
                "amplitude_guard"}
_BLOWUP_KEYS = {"eps", "forcing", "horizon", "direction"}


def _two_pi(th):
    return 2 * np.pi * th


_NAMED_WAVEFORMS = {
    "quadrature": lambda th: np.column_stack([np.cos(_two_pi(th)), np.sin(_two_pi(th))]),
    "quadrature_ppv": lambda th: np.column_stack([-np.sin(_two_pi(th)), np.cos(_two_pi(th))]),
    "sin": lambda th: np.sin(_two_pi(th)),
    "cos": lambda th: np.cos(_two_pi(th)),
    "-sin": lambda th: -np.sin(_two_pi(th)),
    "-cos": lambda th: -np.cos(_two_pi(th)),
}


@dataclass
class SolverSettings:
    tol: float = 1e-8
    lock_tol: float = 1e-9
    horizon: float = 50.0
    f_guess: float | None = None
    dphi_guess: list | None = None
    seed_shift: float = 0.0
    settle_periods: float = 200.0
    points_per_period: int = 20
    projection: str = "orbit"
    method: str = "RK45"
    amplitude_guard: float = 0.1


@dataclass
class BlowupSettings:
    eps: float = 1e-3
    forcing: str = "tangent"
    horizon: float = 50.0
    direction: list | None = None


@dataclass
class NetworkConfig:
    oscillators: list
    couplings: list
    inputs: dict
    builtin_labels: list = field(default_factory=list)
    solver: SolverSettings = field(default_factory=SolverSettings)
    blowup: BlowupSettings = field(default_factory=BlowupSettings)
    num_samples: int = DEFAULT_NUM_SAMPLES

    def cps(self, with_inputs=False) -> CoupledPhaseSystem:
        return CoupledPhaseSystem(self.oscillators, self.couplings,
                                  self.inputs if with_inputs else None)


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {extra}")


def _number(v, where, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    v = float(v)
    if not np.isfinite(v) or (positive and v <= 0):
        raise ConfigError(f"{where}: invalid value {v!r}")
    return v


def _index(v, n, where):
    if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < n:
        raise ConfigError(f"{where}: index {v!r} out of range 0..{n - 1}")
    return v


def _waveform(spec, n, where) -> PeriodicWaveform:
    """Named waveform, ``{table: rows}``, or ``{fourier: [[comp, k, a, b], ...], dim: d}``."""
    if isinstance(spec, str):
        if spec not in _NAMED_WAVEFORMS:
            raise ConfigError(f"{where}: unknown waveform {spec!r}; "
                              f"choose from {sorted(_NAMED_WAVEFORMS)} or a table/fourier map")
        return PeriodicWaveform.from_function(_NAMED_WAVEFORMS[spec], n)
    if isinstance(spec, dict) and set(spec) == {"table"}:
        try:
            return PeriodicWaveform(np.asarray(spec["table"], dtype=float))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: bad sample table ({exc})") from None
    if isinstance(spec, dict) and set(spec) <= {"fourier", "dim"} and "fourier" in spec:
        dim = spec.get("dim", 1)
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            raise ConfigError(f"{where}: dim must be a positive integer")
        th = np.arange(n) / n
        out = np.zeros((n, dim))
        for term in spec["fourier"]:
            if not isinstance(term, (list, tuple)) or len(term) != 4:
                raise ConfigError(f"{where}: fourier terms are [component, harmonic, a, b]")
            comp = _index(term[0], dim, where)
            k = term[1]
            if isinstance(k, bool) or not isinstance(k, int) or not 0 <= k < n // 2:
                raise ConfigError(f"{where}: harmonic {k!r} not representable with {n} samples")
            a, b = _number(term[2], where), _number(term[3], where)
            out[:, comp] += a * np.cos(_two_pi(k * th)) + b * np.sin(_two_pi(k * th))
        return PeriodicWaveform(out)
    raise ConfigError(f"{where}: unrecognised waveform spec {spec!r}")


def parse_config(doc) -> NetworkConfig:
    """Validate a loaded config mapping and build the network objects."""
    _check_keys(doc, _TOP_KEYS, "config")
    n = doc.get("num_samples", DEFAULT_NUM_SAMPLES)
    if isinstance(n, bool) or not isinstance(n, int) or n < 8 or n % 2:
        raise ConfigError("num_samples must be an even integer >= 8")
    raw_oscs = doc.get("oscillators")
    if not isinstance(raw_oscs, list) or not raw_oscs:
        raise ConfigError("config: 'oscillators' must be a non-empty list")
    oscs, builtin_labels = [], []
    for k, o in enumerate(raw_oscs):
        where = f"oscillators[{k}]"
        _check_keys(o, _OSC_KEYS, where)
        label = str(o.get("label", f"osc{k + 1}"))
        if "builtin" in o:
            if "ppv" in o or "f" in o:
                raise ConfigError(f"{where}: builtin oscillators take no 'f' or 'ppv'")
            if o["builtin"] not in BUILTINS:
                raise ConfigError(f"{where}: unknown builtin {o['builtin']!r}; "
                                  f"choose from {sorted(BUILTINS)}")
            params = o.get("params", {}) or {}
            if not isinstance(params, dict):
                raise ConfigError(f"{where}.params: expected a mapping")
            oscs.append(("builtin", o["builtin"], dict(params), label))
            builtin_labels.append(label)
        else:
            if "params" in o:
                raise ConfigError(f"{where}: 'params' only applies to builtin oscillators")
            f = _number(o.get("f"), f"{where}.f", positive=True)
            p = _waveform(o.get("ppv", "quadrature_ppv"), n, f"{where}.ppv")
            oscs.append(OscillatorPhaseModel(f=f, p=p, label=label))
    labels = [o[3] if isinstance(o, tuple) else o.label for o in oscs]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"oscillator labels must be unique, got {labels}")

    size = len(oscs)
    couplings = []
    for k, c in enumerate(doc.get("couplings", []) or []):
        where = f"couplings[{k}]"
        _check_keys(c, _COUPLING_KEYS, where)
        src, dst = _index(c.get("src"), size, where), _index(c.get("dst"), size, where)
        gain = _number(c.get("gain", 1.0), f"{where}.gain")
        w = _waveform(c.get("waveform", "quadrature"), n, f"{where}.waveform")
        couplings.append((src, dst, PeriodicWaveform(gain * w.samples)))
    raw_inputs = []
    for k, u in enumerate(doc.get("inputs", []) or []):
        where = f"inputs[{k}]"
        _check_keys(u, _INPUT_KEYS, where)
        raw_inputs.append((_index(u.get("dst"), size, where), u.get("channel", 0),
                           _number(u.get("amplitude", 0.0), where),
                           _number(u.get("frequency", 0.0), where),
                           _number(u.get("phase", 0.0), where),
                           _number(u.get("offset", 0.0), where), where))

    solver = SolverSettings()
    s = doc.get("solver", {}) or {}
    _check_keys(s, _SOLVER_KEYS, "solver")
    for key, val in s.items():
        setattr(solver, key, val)
    _validate_solver(solver)
    blowup = BlowupSettings()
    b = doc.get("blowup", {}) or {}
    _check_keys(b, _BLOWUP_KEYS, "blowup")
    for key, val in b.items():
        setattr(blowup, key, val)
    blowup.eps = _number(blowup.eps, "blowup.eps")
    blowup.horizon = _number(blowup.horizon, "blowup.horizon", positive=True)
    if blowup.forcing not in ("tangent", "projected"):
        raise ConfigError("blowup.forcing must be 'tangent' or 'projected'")
    return NetworkConfig(oscs, couplings, raw_inputs, builtin_labels, solver, blowup, n)


def _validate_solver(s: SolverSettings):
    for key in ("tol", "lock_tol", "horizon", "settle_periods"):
        setattr(s, key, _number(getattr(s, key), f"solver.{key}", positive=key != "settle_periods"))
    s.seed_shift = _number(s.seed_shift, "solver.seed_shift")
    s.amplitude_guard = _number(s.amplitude_guard, "solver.amplitude_guard", positive=True)
    if s.f_guess is not None:
        s.f_guess = _number(s.f_guess, "solver.f_guess", positive=True)
    if isinstance(s.points_per_period, bool) or not isinstance(s.points_per_period, int) \
            or s.points_per_period < 2:
        raise ConfigError("solver.points_per_period must be an integer >= 2")
    if s.projection not in ("orbit", "adjoint"):
        raise ConfigError("solver.projection must be 'orbit' or 'adjoint'")
    if s.method not in ("RK45", "DOP853", "RK23"):
        raise ConfigError("solver.method must be RK45, DOP853 or RK23")


def resolve(cfg: NetworkConfig) -> NetworkConfig:
    """Extract builtin PPVs and assemble couplings and inputs (may raise solver errors)."""
    oscs = []
    for o in cfg.oscillators:
        if isinstance(o, tuple):
            _, name, params, label = o
            try:
                m = phase_model_from_builtin(name, num_samples=cfg.num_samples, **params)
            except TypeError as exc:
                raise ConfigError(f"builtin {name!r}: {exc}") from None
            o = OscillatorPhaseModel(f=m.f, p=m.p, x_p=m.x_p, label=label)
        oscs.append(o)
    try:
        couplings = [Coupling(src, dst, b) for src, dst, b in cfg.couplings]
        inputs = {}
        for dst, ch, amp, freq, phase, offset, where in cfg.inputs:
            dim = oscs[dst].input_dim
            ch = _index(ch, dim, f"{where}.channel")
            u = InputSignal(dim, (Sinusoid(amp, freq, phase, ch),),
                            tuple(offset if c == ch else 0.0 for c in range(dim)))
            inputs[dst] = inputs[dst] + u if dst in inputs else u
        CoupledPhaseSystem(oscs, couplings, inputs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return NetworkConfig(oscs, couplings, inputs, cfg.builtin_labels, cfg.solver, cfg.blowup,
                         cfg.num_samples)


def load_config(path) -> NetworkConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return parse_config(doc)


# --- commands ---------------------------------------------------------------

def _meta(d) -> str:
    lines = []
    for k, v in d.items():
        if isinstance(v, float):
            v = f"{v:.17g}"
        lines.append(f"{k}={v}")
    return "\n".join(lines) + "\n"


def _lock(cfg: NetworkConfig):
    s = cfg.solver
    cps = cfg.cps()
    sol = find_lock(cps, s.f_guess, s.dphi_guess, tol=s.lock_tol,
                    num_samples=cfg.num_samples, settle_periods=s.settle_periods)
    if not sol.stable:
        raise LockError(f"locked solution is unstable (multipliers {sol.multipliers})")
    if s.seed_shift:
        sol = shift_lock(sol, s.seed_shift)
    return cps, sol


def _floquet(cfg):
    cps, sol = _lock(cfg)
    fd = analyse(cps, sol)
    if not fd.stable:
        raise FloquetError(f"stability flags failed: unity_multiplier_ok="
                           f"{fd.unity_multiplier_ok}, contraction_ok={fd.contraction_ok}")
    return cps, sol, fd


def cmd_lock(cfg):
    _, sol = _lock(cfg)
    return {"lock.csv": sol.to_csv(), "lock.meta": _meta(sol.meta())}


def cmd_floquet(cfg):
    cps, sol, fd = _floquet(cfg)
    names = [o.label for o in cps.oscillators]
    return {
        "floquet.csv": fd.multipliers_csv(),
        "u1.csv": format_csv(",".join(["s", *names]), np.column_stack([fd.u1.theta, fd.u1.samples])),
        "v1.csv": format_csv(",".join(["s", *names]), np.column_stack([fd.v1.theta, fd.v1.samples])),
    }


def cmd_extract(cfg):
    out = {}
    for o in cfg.oscillators:
        if o.label in cfg.builtin_labels:
            out[f"ppv_{o.label}.csv"] = o.p.to_csv()
    cps, sol, fd = _floquet(cfg)
    gm = build_group_model(cps, sol, fd)
    out["group_ppv.csv"] = gm.channels_csv()
    out["group_ppv.meta"] = _meta({"f_star": gm.f_star, "T_star": gm.T_star,
                                   "channels": ",".join(str(d) for d in gm.input_dims)})
    return out


def _times(cfg, sol):
    s = cfg.solver
    T = sol.T_star
    return np.linspace(0.0, s.horizon * T, int(round(s.horizon * s.points_per_period)) + 1)


def cmd_simulate(cfg, which):
    s = cfg.solver
    if which == "full":
        cps, sol = _lock(cfg)
        ts = _times(cfg, sol)
        traj = simulate_cps(cfg.cps(with_inputs=True), sol.phi_star(0.0), 0.0, ts[-1], s.tol,
                            t_eval=ts, method=s.method)
        return {"traj_full.csv": traj.to_csv([o.label for o in cps.oscillators])}
    cps, sol, fd = _floquet(cfg)
    gm = build_group_model(cps, sol, fd)
    ts = _times(cfg, sol)
    traj = simulate_group(gm, cfg.inputs, 0.0, ts[-1], s.tol, t_eval=ts, method=s.method,
                          amplitude_guard=s.amplitude_guard)
    phis = reconstruct_phases(gm, traj)
    header = ",".join(["t", "alpha", "Phi_g", *(o.label for o in cps.oscillators)])
    table = np.column_stack([traj.t, traj.alpha, traj.group_phase, phis])
    return {"traj_reduced.csv": format_csv(header, table)}


def cmd_compare(cfg):
    s = cfg.solver
    cps, sol, fd = _floquet(cfg)
    gm = build_group_model(cps, sol, fd)
    rep = validate_reduction(cps, gm, cfg.inputs, 0.0, s.horizon * sol.T_star,
                             points_per_period=s.points_per_period, rtol=s.tol,
                             atol=s.tol * 1e-2, method=s.method, projection=s.projection)
    print(rep.summary())
    return {"compare.csv": rep.to_csv(), "compare_traj.csv": rep.trajectory_csv()}


def cmd_demo_blowup(cfg):
    b = cfg.blowup
    cps, sol, fd = _floquet(cfg)
    res = lptv_blowup_demo(cps, sol, fd, b.eps, b.horizon * sol.T_star, forcing=b.forcing,
                           direction=b.direction)
    meta = {"eps": b.eps, "forcing": b.forcing, "slope": res.slope, "sup_c1": res.sup_c1,
            "T_star": sol.T_star}
    return {"blowup.csv": res.to_csv(), "blowup.meta": _meta(meta)}


COMMANDS = {
    "lock": cmd_lock,
    "floquet": cmd_floquet,
    "extract": cmd_extract,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "demo-blowup": cmd_demo_blowup,
}


# --- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hierppv", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help=f"YAML network description (env {ENV_PREFIX}CONFIG)")
        p.add_argument("--out", help=f"output directory (env {ENV_PREFIX}OUT, default .)")
        p.add_argument("--tol", type=float, help="integration relative tolerance")
        p.add_argument("--horizon", type=float, help="simulated horizon in lock periods")
        p.add_argument("--seed-shift", type=float, dest="seed_shift",
                       help="time shift applied to the anchored lock")
        if name == "simulate":
            p.add_argument("--which", choices=("full", "reduced"), default="full")
    return ap


def _override(args, cfg):
    s = cfg.solver
    for key in ("tol", "horizon", "seed_shift"):
        val = getattr(args, key)
        if val is None:
            env = os.environ.get(ENV_PREFIX + key.upper())
            if env is not None:
                try:
                    val = float(env)
                except ValueError:
                    raise ConfigError(f"{ENV_PREFIX}{key.upper()}={env!r} is not a number") \
                        from None
        if val is not None:
            setattr(s, key, val)
    _validate_solver(s)


def _write(out_dir: Path, files: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        (out_dir / name).write_text(files[name])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = args.config or os.environ.get(ENV_PREFIX + "CONFIG")
    out_dir = Path(args.out or os.environ.get(ENV_PREFIX + "OUT", "."))
    try:
        if not config:
            raise ConfigError("no config given (--config or HIERPPV_CONFIG)")
        cfg = load_config(config)
        _override(args, cfg)
        cfg = resolve(cfg)
        if args.command == "simulate":
            files = cmd_simulate(cfg, args.which)
        else:
            files = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (LockError, ShootingError) as exc:
        print(f"lock failed: {exc}", file=sys.stderr)
        return EXIT_LOCK
    except (FloquetError, GroupModelError, MultiplierError) as exc:
        print(f"stability check failed: {exc}", file=sys.stderr)
        return EXIT_STABILITY
    _write(out_dir, files)
    for name in sorted(files):
        print(out_dir / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

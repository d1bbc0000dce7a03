import numpy as np
import pytest

from ppvgroup import fixtures as fx
from ppvgroup.floquet import analyse
from ppvgroup.hierppv import build_group_model
from ppvgroup.lock import find_lock


class Locked:
    """A fixture network with its lock, Floquet data and group model."""

    def __init__(self, cps):
        self.cps = cps
        self.sol = find_lock(cps)
        self.fd = analyse(cps, self.sol)
        self.gm = build_group_model(cps, self.sol, self.fd)


@pytest.fixture(scope="session")
def pair():
    return Locked(fx.adler_pair())


@pytest.fixture(scope="session")
def detuned():
    return Locked(fx.detuned_pair())


@pytest.fixture(scope="session")
def ring3_mixed():
    return Locked(fx.ring(3, detune=0.01, mixed=True))


@pytest.fixture(scope="session")
def vdp():
    from ppvgroup.prc import builtin, find_limit_cycle, state_adjoint

    o = builtin("vanderpol", mu=1.0)
    T, x_p = find_limit_cycle(o, settle_periods=20)
    return o, T, x_p, state_adjoint(o, T, x_p)


def adler_offset(delta, K):
    """Locked phase offset of the detuned Adler pair, in cycles."""
    return np.arcsin(delta / K) / (2 * np.pi)


class Nested:
    """Two identical pairs abstracted into group oscillators and coupled at the top."""

    def __init__(self, kappa=0.01, freqs=(1.0, 1.0)):
        from ppvgroup.hierppv import flatten_lock, nest_as_oscillator

        pairs, self.flat = fx.flat_pairs(kappa, freqs=freqs)
        self.inner = [Locked(p) for p in pairs]
        tops = [nest_as_oscillator(g.gm, label=f"group{k + 1}") for k, g in enumerate(self.inner)]
        self.top = Locked(fx.top_level(tops, kappa))
        self.flat_ref = flatten_lock(self.top.sol, [g.gm for g in self.inner])


@pytest.fixture(scope="session")
def nested():
    return Nested()


ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

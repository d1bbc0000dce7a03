"""Group PPV macromodels for locked networks of coupled phase oscillators.

Pipeline: ``find_lock`` -> ``analyse`` (Floquet data) -> ``build_group_model``
-> ``simulate_group`` / ``validate_reduction`` -> ``nest_as_oscillator``.
"""

from .floquet import (FloquetData, FloquetError, NoUnityMultiplierError,
                      RepeatedUnityMultiplierError, UnstableLockError, analyse,
                      floquet_decompose, lptv_blowup_demo, monodromy)
from .hierppv import (GroupModelError, GroupPPVModel, InputAmplitudeWarning, ValidationReport,
                      boxed_rhs, build_group_model, channel_rhs, flatten_lock,
                      nest_as_oscillator, reconstruct_phases, simulate_group, stack_inputs,
                      validate_reduction)
from .lock import LockedSolution, LockError, find_lock, shift_lock, verify_lock
from .network import CoupledPhaseSystem, Coupling, simulate_cps, single
from .oscillator import InputSignal, OscillatorPhaseModel, Sinusoid, ppv_rhs, simulate_phase
from .periodic import PeriodicWaveform
from .prc import (StateSpaceOscillator, extract_ppv, find_limit_cycle,
                  phase_model_from_builtin, state_adjoint)
from ._ode import IntegrationError

__version__ = "0.1.0"

__all__ = [
    "CoupledPhaseSystem", "Coupling", "FloquetData", "FloquetError", "GroupModelError",
    "GroupPPVModel", "InputAmplitudeWarning", "InputSignal", "IntegrationError", "LockError",
    "LockedSolution", "NoUnityMultiplierError", "OscillatorPhaseModel", "PeriodicWaveform",
    "RepeatedUnityMultiplierError", "Sinusoid", "StateSpaceOscillator", "UnstableLockError",
    "ValidationReport", "analyse", "boxed_rhs", "build_group_model", "channel_rhs",
    "extract_ppv", "find_limit_cycle", "find_lock", "flatten_lock", "floquet_decompose",
    "lptv_blowup_demo", "monodromy", "nest_as_oscillator", "phase_model_from_builtin",
    "ppv_rhs", "reconstruct_phases", "shift_lock", "simulate_cps", "simulate_group",
    "simulate_phase", "single", "stack_inputs", "state_adjoint", "validate_reduction",
    "verify_lock",
]

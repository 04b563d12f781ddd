"""Mean-field steady states of the driven three-mode system.

Below the instability threshold the pump amplitude grows linearly with
the drive while signal and idler stay at zero.  Above it the pump clamps
at its critical value and the signal/idler amplitudes grow like
``sqrt(mu - 1)``, with the phase sum locked to the drive phase.

Phase conventions: complex amplitudes are written ``a = 1j*|a|*e^{1j*phi}``;
the free signal-idler phase difference is gauge-fixed to zero so the
solver output is deterministic (its stochastic wandering is treated by
the fluctuation modules).
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DetunedAboveThresholdError, InvalidParameterError
from .model import DriveConfig, SystemConfig, kappa, susceptibility


class Regime(enum.Enum):
    BELOW = "below"
    AT_THRESHOLD = "at_threshold"
    ABOVE = "above"


@dataclass(frozen=True)
class SteadyState:
    """Mean complex amplitudes (m) of signal, idler and pump."""

    a_i: complex
    a_j: complex
    a_s: complex
    regime: Regime
    mu: float

    @property
    def magnitudes(self) -> tuple[float, float, float]:
        return (abs(self.a_i), abs(self.a_j), abs(self.a_s))


def critical_pump_amplitude(sys: SystemConfig) -> float:
    """Pump displacement at which parametric gain balances loss, m.

    Algebraically ``2/(g*sqrt(chi_i*chi_j))``; identical to
    ``sqrt(gamma_i*gamma_j/(kappa_i*kappa_j))``.
    """
    chi_i = susceptibility(sys.mode_i)
    chi_j = susceptibility(sys.mode_j)
    return 2.0 / (sys.g * math.sqrt(chi_i * chi_j))


def critical_pump_force(sys: SystemConfig) -> float:
    """Drive force amplitude that puts the pump at its critical value, N."""
    return critical_pump_amplitude(sys) / susceptibility(sys.mode_s)


def detuned_threshold(gamma: float, delta: float) -> float:
    """Instability drive for a detuned pump on matched modes.

    Returns ``sqrt(1 + (delta/gamma)^2)``; reduces to 1 on resonance.
    """
    if not (gamma > 0.0):
        raise InvalidParameterError("gamma must be > 0")
    return math.sqrt(1.0 + (delta / gamma) ** 2)


def solve_steady_state(sys: SystemConfig, drive: DriveConfig) -> SteadyState:
    """Solve the noise-free slow-flow fixed point for the given drive.

    Only the resonant drive is supported above threshold; a detuned
    drive combined with ``mu > 1`` raises
    :class:`~ndpa.errors.DetunedAboveThresholdError`.

    Above threshold the signal/idler magnitude split is fixed by the
    fixed-point equations themselves: ``|a_i|/|a_j| = sqrt(chi_i/chi_j)``,
    i.e. ``|a_i| = 2*sqrt(mu-1)/(g*sqrt(chi_j*chi_s))``.  This is the
    unique split that zeroes the slow-flow right-hand sides (and keeps
    the free-phase direction exactly marginal); for matched modes it is
    the familiar ``2*sqrt(mu-1)/(g*sqrt(chi*chi_s))``.
    """
    if drive.delta != 0.0 and drive.mu > 1.0:
        raise DetunedAboveThresholdError(
            "steady state with nonzero detuning above threshold is not modeled")

    a_cr = critical_pump_amplitude(sys)
    mu = drive.mu
    pump_phase = 1j * cmath.exp(1j * drive.phi_s)

    if mu < 1.0:
        return SteadyState(a_i=0j, a_j=0j, a_s=mu * a_cr * pump_phase,
                           regime=Regime.BELOW, mu=mu)
    if mu == 1.0:
        return SteadyState(a_i=0j, a_j=0j, a_s=a_cr * pump_phase,
                           regime=Regime.AT_THRESHOLD, mu=mu)

    chi_i = susceptibility(sys.mode_i)
    chi_j = susceptibility(sys.mode_j)
    chi_s = susceptibility(sys.mode_s)
    root = math.sqrt(mu - 1.0)
    mag_i = 2.0 * root / (sys.g * math.sqrt(chi_j * chi_s))
    mag_j = 2.0 * root / (sys.g * math.sqrt(chi_i * chi_s))
    # phi_i + phi_j = phi_s with the gauge phi_i = phi_j.
    half_phase = 1j * cmath.exp(0.5j * drive.phi_s)
    return SteadyState(a_i=mag_i * half_phase, a_j=mag_j * half_phase,
                       a_s=a_cr * pump_phase, regime=Regime.ABOVE, mu=mu)


def slow_flow_residual(sys: SystemConfig, drive: DriveConfig,
                       state: SteadyState) -> np.ndarray:
    """Normalized magnitudes of the noise-free slow-flow right-hand sides.

    Zero (to rounding) at a true fixed point.  Residuals are divided by
    the largest amplitude scale in play so they are dimensionless.
    """
    chi_i = susceptibility(sys.mode_i)
    chi_j = susceptibility(sys.mode_j)
    chi_s = susceptibility(sys.mode_s)
    g = sys.g
    force = drive.mu * critical_pump_force(sys) * cmath.exp(1j * drive.phi_s)

    f_i = -state.a_i + 0.5j * g * chi_i * state.a_j.conjugate() * state.a_s
    f_j = -state.a_j + 0.5j * g * chi_j * state.a_i.conjugate() * state.a_s
    f_s = (-state.a_s + 0.5j * g * chi_s * state.a_i * state.a_j
           + 1j * chi_s * force)

    scale = max(critical_pump_amplitude(sys), *state.magnitudes)
    return np.array([abs(f_i), abs(f_j), abs(f_s)]) / scale

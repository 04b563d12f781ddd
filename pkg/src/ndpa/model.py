"""Domain types and parameter derivations for the three-mode system.

The system is a pair of low-loss mechanical modes (signal ``i`` and idler
``j``) coupled through a lossy pump mode (``s``) driven at the sum
frequency ``omega_s = omega_i + omega_j``.  All quantities are SI:
angular frequencies and linewidths in rad/s, masses in kg, temperature
in K.  Variances reported by the higher-level modules are dimensionless,
normalized per mode to the thermal variance ``k_B T / (m omega^2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigFileError, InvalidParameterError

# Exact SI value; tests and natural-unit configs may override per system.
BOLTZMANN = 1.380649e-23

#: Default pump-to-mode damping ratio required for adiabatic elimination.
ELIMINATION_RATIO = 100.0

TWO_PI = 2.0 * math.pi


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidParameterError(message)


@dataclass(frozen=True)
class ModeParams:
    """One mechanical mode: eigenfrequency, energy decay rate, effective mass."""

    omega: float  # rad/s
    gamma: float  # rad/s
    mass: float   # kg

    def __post_init__(self) -> None:
        for name in ("omega", "gamma", "mass"):
            value = getattr(self, name)
            _require(math.isfinite(value) and value > 0.0,
                     f"ModeParams.{name} must be finite and > 0, got {value!r}")
        _require(self.quality_factor > 1.0,
                 f"mode quality factor omega/gamma must exceed 1, got {self.quality_factor!r}")

    @property
    def quality_factor(self) -> float:
        return self.omega / self.gamma


@dataclass(frozen=True)
class AsymmetryParams:
    """Normalized loss and frequency differences of the signal/idler pair."""

    delta_gamma: float
    delta_omega: float

    def __post_init__(self) -> None:
        for name in ("delta_gamma", "delta_omega"):
            value = getattr(self, name)
            _require(math.isfinite(value) and abs(value) < 1.0,
                     f"AsymmetryParams.{name} must lie in (-1, 1), got {value!r}")


@dataclass(frozen=True)
class SystemConfig:
    """Three modes plus coupling strength and bath temperature.

    The stored pump frequency must equal ``omega_i + omega_j``; any drive
    offset belongs to :class:`DriveConfig`, not here.  ``k_b`` is kept as
    a configurable constant so natural-unit setups can use ``k_b = 1``.
    """

    mode_i: ModeParams
    mode_j: ModeParams
    mode_s: ModeParams
    g: float             # two-mode coupling, N/m^2
    temperature: float   # K
    k_b: float = BOLTZMANN

    def __post_init__(self) -> None:
        _require(math.isfinite(self.g) and self.g > 0.0,
                 f"coupling g must be finite and > 0, got {self.g!r}")
        _require(math.isfinite(self.temperature) and self.temperature >= 0.0,
                 f"temperature must be >= 0, got {self.temperature!r}")
        _require(math.isfinite(self.k_b) and self.k_b > 0.0,
                 f"k_b must be finite and > 0, got {self.k_b!r}")
        target = self.mode_i.omega + self.mode_j.omega
        _require(abs(self.mode_s.omega - target) <= 1e-9 * target,
                 "pump frequency must satisfy omega_s = omega_i + omega_j "
                 f"(got {self.mode_s.omega!r}, expected {target!r})")

    @property
    def pump_damping_ratio(self) -> float:
        """gamma_s over the larger of the two signal/idler linewidths."""
        return self.mode_s.gamma / max(self.mode_i.gamma, self.mode_j.gamma)

    def require_fast_pump(self, ratio: float = ELIMINATION_RATIO) -> None:
        """Raise unless the pump decays at least ``ratio`` times faster
        than the signal/idler modes (adiabatic-elimination guard)."""
        from .errors import EliminationGuardError

        if self.pump_damping_ratio < ratio:
            raise EliminationGuardError(
                f"pump damping ratio {self.pump_damping_ratio:.3g} below the "
                f"adiabatic-elimination guard {ratio:.3g}")


@dataclass(frozen=True)
class DriveConfig:
    """Normalized pump drive: strength mu, force phase, detuning."""

    mu: float             # drive force / critical force, dimensionless
    phi_s: float = 0.0    # pump force phase, rad
    delta: float = 0.0    # drive detuning from omega_s, rad/s

    def __post_init__(self) -> None:
        _require(math.isfinite(self.mu) and self.mu >= 0.0,
                 f"drive mu must be finite and >= 0, got {self.mu!r}")
        _require(math.isfinite(self.phi_s), "phi_s must be finite")
        _require(math.isfinite(self.delta), "delta must be finite")


# ---------------------------------------------------------------------------
# Parameter derivations
# ---------------------------------------------------------------------------

def susceptibility(mode: ModeParams) -> float:
    """On-resonance displacement response 1/(m omega gamma), m/N."""
    return 1.0 / (mode.mass * mode.omega * mode.gamma)


def kappa(mode: ModeParams, g: float) -> float:
    """Coupling rate per unit partner displacement, g/(2 m omega).

    Equivalent to ``g * gamma * susceptibility / 2``.
    """
    return g / (2.0 * mode.mass * mode.omega)


def asymmetry(mode_i: ModeParams, mode_j: ModeParams) -> AsymmetryParams:
    """Loss asymmetry and frequency mismatch of a mode pair."""
    dg = (mode_i.gamma - mode_j.gamma) / (mode_i.gamma + mode_j.gamma)
    dw = (mode_i.omega - mode_j.omega) / (mode_i.omega + mode_j.omega)
    return AsymmetryParams(delta_gamma=dg, delta_omega=dw)


def thermal_variance(mode: ModeParams, temperature: float,
                     k_b: float = BOLTZMANN) -> float:
    """Equipartition displacement variance k_B T / (m omega^2), m^2.

    This is the unit in which all normalized variances are reported.
    """
    _require(temperature >= 0.0, "temperature must be >= 0")
    return k_b * temperature / (mode.mass * mode.omega ** 2)


def modes_from_asymmetry(mean_omega: float, mean_gamma: float,
                         asym: AsymmetryParams,
                         mass_i: float = 1.0,
                         mass_j: float = 1.0) -> tuple[ModeParams, ModeParams]:
    """Build a signal/idler pair with given mean parameters and asymmetry.

    Round trip: ``asymmetry(*modes_from_asymmetry(w, g, a)) == a`` up to
    rounding.
    """
    omega_i = mean_omega * (1.0 + asym.delta_omega)
    omega_j = mean_omega * (1.0 - asym.delta_omega)
    gamma_i = mean_gamma * (1.0 + asym.delta_gamma)
    gamma_j = mean_gamma * (1.0 - asym.delta_gamma)
    return (ModeParams(omega=omega_i, gamma=gamma_i, mass=mass_i),
            ModeParams(omega=omega_j, gamma=gamma_j, mass=mass_j))


def build_system(mean_omega: float, mean_gamma: float, *,
                 delta_gamma: float = 0.0, delta_omega: float = 0.0,
                 g: float, temperature: float,
                 pump_gamma: float, pump_mass: float = 1.0,
                 mass_i: float = 1.0, mass_j: float = 1.0,
                 k_b: float = BOLTZMANN) -> SystemConfig:
    """Convenience constructor from mean mode parameters and asymmetries.

    The pump frequency is always the sum of the two mode frequencies.
    """
    asym = AsymmetryParams(delta_gamma=delta_gamma, delta_omega=delta_omega)
    mode_i, mode_j = modes_from_asymmetry(mean_omega, mean_gamma, asym,
                                          mass_i=mass_i, mass_j=mass_j)
    mode_s = ModeParams(omega=mode_i.omega + mode_j.omega,
                        gamma=pump_gamma, mass=pump_mass)
    return SystemConfig(mode_i=mode_i, mode_j=mode_j, mode_s=mode_s,
                        g=g, temperature=temperature, k_b=k_b)


def with_asymmetry(sys: SystemConfig, delta_gamma: float,
                   delta_omega: float) -> SystemConfig:
    """Return a copy of ``sys`` with the signal/idler pair rebuilt around
    the same mean frequency and linewidth but new asymmetries."""
    mean_omega = 0.5 * (sys.mode_i.omega + sys.mode_j.omega)
    mean_gamma = 0.5 * (sys.mode_i.gamma + sys.mode_j.gamma)
    asym = AsymmetryParams(delta_gamma=delta_gamma, delta_omega=delta_omega)
    mode_i, mode_j = modes_from_asymmetry(mean_omega, mean_gamma, asym,
                                          mass_i=sys.mode_i.mass,
                                          mass_j=sys.mode_j.mass)
    return replace(sys, mode_i=mode_i, mode_j=mode_j)


# ---------------------------------------------------------------------------
# Configuration file loading
# ---------------------------------------------------------------------------

def _mode_from_section(section: dict, label: str) -> ModeParams:
    try:
        omega = TWO_PI * float(section["omega_hz"])
        mass = float(section["mass_kg"])
    except KeyError as exc:
        raise ConfigFileError(f"modes.{label}: missing key {exc}") from None
    if "gamma_hz" in section:
        gamma = TWO_PI * float(section["gamma_hz"])
    elif "q_factor" in section:
        q = float(section["q_factor"])
        if q <= 1.0:
            raise ConfigFileError(f"modes.{label}.q_factor must exceed 1")
        gamma = omega / q
    else:
        raise ConfigFileError(
            f"modes.{label}: need either gamma_hz or q_factor")
    try:
        return ModeParams(omega=omega, gamma=gamma, mass=mass)
    except InvalidParameterError as exc:
        raise ConfigFileError(f"modes.{label}: {exc}") from None


def load_system_config(path: str | Path) -> SystemConfig:
    """Load a :class:`SystemConfig` from a JSON file.

    Layout::

        {
          "modes": {
            "i": {"omega_hz": ..., "q_factor" | "gamma_hz": ..., "mass_kg": ...},
            "j": {...}, "s": {...}
          },
          "coupling": {"g": ...},
          "bath": {"temperature_k": ..., "boltzmann": optional}
        }

    Frequencies in the file are ordinary frequencies in Hz and are
    converted to angular frequencies here.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigFileError(f"cannot read config {path}: {exc}") from None
    try:
        modes = raw["modes"]
        mode_i = _mode_from_section(modes["i"], "i")
        mode_j = _mode_from_section(modes["j"], "j")
        mode_s = _mode_from_section(modes["s"], "s")
        g = float(raw["coupling"]["g"])
        temperature = float(raw["bath"]["temperature_k"])
    except (KeyError, TypeError) as exc:
        raise ConfigFileError(f"config {path}: missing section/key {exc}") from None
    k_b = float(raw.get("bath", {}).get("boltzmann", BOLTZMANN))
    try:
        return SystemConfig(mode_i=mode_i, mode_j=mode_j, mode_s=mode_s,
                            g=g, temperature=temperature, k_b=k_b)
    except InvalidParameterError as exc:
        raise ConfigFileError(f"config {path}: {exc}") from None

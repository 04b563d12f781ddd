"""Closed-form variances and spectra of the collective quadratures.

Every analytic result the fluctuation engine is supposed to reproduce
lives here, in the same normalized units (per-mode thermal variance,
spectral densities per rad/s).  These functions are the reference layer:
the matrix engine and the stochastic oracle are tested against them.

Below threshold on resonance the x+/y- quadratures are squeezed and
x-/y+ amplified; a detuned drive couples amplified and squeezed
quadratures pairwise and weakens the squeezing; above threshold the
amplitude difference (y-) is pinned at half the thermal variance while
the phase difference (x-) diffuses freely.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import AtOrAboveThresholdError, BelowThresholdError, InvalidParameterError
from .model import AsymmetryParams

TWO_PI = 2.0 * math.pi


def _require_below(mu: float) -> None:
    if not 0.0 <= mu:
        raise InvalidParameterError(f"mu must be >= 0, got {mu}")
    if mu >= 1.0:
        raise AtOrAboveThresholdError(
            f"closed form valid for mu < 1, got {mu}")


# ---------------------------------------------------------------------------
# Below threshold, resonant drive
# ---------------------------------------------------------------------------

def below_matched_variances(mu: float) -> tuple[float, float, float, float]:
    """Variances (x+, x-, y+, y-) for matched modes, full bandwidth.

    ``1/(1 +- mu)``: the squeezed pair (x+, y-) approaches half the
    thermal variance at threshold, the amplified pair (x-, y+) diverges.
    """
    _require_below(mu)
    squeezed = 1.0 / (1.0 + mu)
    amplified = 1.0 / (1.0 - mu)
    return (squeezed, amplified, amplified, squeezed)


def below_matched_spectra(mu: float, gamma: float,
                          omega) -> tuple[np.ndarray, ...]:
    """Spectral densities (x+, x-, y+, y-) of matched modes at offset
    frequency omega, normalized variance per (rad/s)."""
    if mu < 0.0 or mu > 1.0:
        raise InvalidParameterError("mu must lie in [0, 1]")
    omega = np.asarray(omega, dtype=float)
    squeezed = (2.0 / math.pi) * gamma / (gamma ** 2 * (1.0 + mu) ** 2
                                          + 4.0 * omega ** 2)
    amplified = (2.0 / math.pi) * gamma / (gamma ** 2 * (1.0 - mu) ** 2
                                           + 4.0 * omega ** 2)
    return (squeezed, amplified, amplified, squeezed)


def zero_frequency_squeezing_ratio(mu: float) -> float:
    """On-resonance noise suppression S(0, mu)/S(0, 0) = 1/(1+mu)^2.

    Narrow-band detection squeezes twice as many dB as the full-band
    variance; the ratio approaches 1/4 at threshold.
    """
    if mu < 0.0:
        raise InvalidParameterError("mu must be >= 0")
    return 1.0 / (1.0 + mu) ** 2


def below_mismatched_variances(
        mu: float, asym: AsymmetryParams) -> tuple[float, float, float]:
    """Variances (y+, y-) and their cross-correlation for unequal modes.

    The x sector follows by symmetry: x-+ variances equal the y+-
    ones and the cross term is identical.  On the matched-asymmetry
    line (delta_gamma == delta_omega) the cross term vanishes and the
    matched result is recovered exactly.

    Note: the quoted cross-correlation is the full Lyapunov solution
    ``mu^2 (dw - dg) / ((1 - mu^2)(1 - dw^2))``; see the package docs
    for the factor-of-two convention pinned by the engine equivalence
    tests.
    """
    _require_below(mu)
    dg = asym.delta_gamma
    dw = asym.delta_omega
    denom = 1.0 - mu ** 2
    base = 1.0 + mu ** 2 * dw * (dw - dg) / (1.0 - dw ** 2)
    swing = mu * math.sqrt((1.0 - dg ** 2) / (1.0 - dw ** 2))
    var_plus = (base + swing) / denom
    var_minus = (base - swing) / denom
    cross = mu ** 2 * (dw - dg) / (denom * (1.0 - dw ** 2))
    return (var_plus, var_minus, cross)


def peak_squeezing(asym: AsymmetryParams, *,
                   mu_cap: float = 1.0 - 1e-6,
                   tol: float = 1e-8) -> tuple[float, float]:
    """Minimize the squeezed variance over drive strength.

    Golden-section search on mu in [0, mu_cap]; returns (mu*, sigma*).
    For matched asymmetries the optimum sits at the cap (threshold) with
    sigma* -> 1/2; otherwise it lies strictly below threshold.
    """

    def objective(mu: float) -> float:
        return below_mismatched_variances(mu, asym)[1]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, mu_cap
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while hi - lo > tol:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = objective(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = objective(x2)
    mu_star = 0.5 * (lo + hi)
    # Stationarity check: interior optima must have a flat derivative;
    # at the cap the derivative may still point downhill (matched case).
    step = 1e-6
    if mu_star < mu_cap - step:
        slope = (objective(mu_star + step) - objective(max(mu_star - step, 0.0))) \
            / (2.0 * step)
        curvature_scale = abs(objective(mu_star)) / max(mu_star, step)
        if abs(slope) > 1e-2 * max(curvature_scale, 1.0):
            raise InvalidParameterError(
                f"golden-section did not converge: slope {slope:.3g}")
    return mu_star, objective(mu_star)


def squeezing_curve(mu_grid, asym: AsymmetryParams):
    """Amplified/squeezed variances over a drive grid plus the optimum.

    Returns ``(amplified, squeezed, (mu_star, sigma_star))`` as arrays
    over ``mu_grid``.
    """
    mu_grid = np.asarray(mu_grid, dtype=float)
    amplified = np.empty_like(mu_grid)
    squeezed = np.empty_like(mu_grid)
    for idx, mu in enumerate(mu_grid):
        var_plus, var_minus, _cross = below_mismatched_variances(float(mu), asym)
        amplified[idx] = var_plus
        squeezed[idx] = var_minus
    return amplified, squeezed, peak_squeezing(asym)


# ---------------------------------------------------------------------------
# Below threshold, detuned drive (matched modes)
# ---------------------------------------------------------------------------

def _lambda_pair(mu: float, delta: float, gamma: float) -> tuple[complex, complex]:
    """Mode rates lambda_-+ = gamma -+ sqrt(gamma^2 mu^2 - delta^2).

    For |delta| > gamma*mu the pair is complex conjugate; all reported
    variances stay real and the evaluation is done in complex arithmetic
    on purpose.
    """
    root = cmath.sqrt(gamma ** 2 * mu ** 2 - delta ** 2)
    return gamma + root, gamma - root


def detuned_variances(mu: float, delta: float, gamma: float) -> dict[str, float]:
    """Steady-state variances and cross-correlations for a detuned drive.

    Matched modes only.  Keys: ``x+ x- y+ y-`` for the variances and
    ``x+y+ x-y-`` for the amplified/squeezed cross-correlations (equal).
    Valid below the detuned threshold ``sqrt(1 + (delta/gamma)^2)``.
    """
    if gamma <= 0.0:
        raise InvalidParameterError("gamma must be > 0")
    if mu < 0.0:
        raise InvalidParameterError("mu must be >= 0")
    threshold = math.sqrt(1.0 + (delta / gamma) ** 2)
    if mu >= threshold:
        raise AtOrAboveThresholdError(
            f"mu = {mu} at or above the detuned threshold {threshold:.6g}")

    lam_p, lam_m = _lambda_pair(mu, delta, gamma)
    lam_sum = lam_p + lam_m
    lam_prod = lam_p * lam_m

    def variance(sign: float) -> float:
        numerator = (delta ** 2 + gamma ** 2 * (1.0 - sign * mu) ** 2
                     - lam_m ** 2)
        value = gamma * (numerator / (lam_prod * lam_sum) + 1.0 / lam_p)
        if abs(value.imag) > 1e-10 * max(abs(value.real), 1.0):
            raise InvalidParameterError(
                f"nonreal variance from complex rates: {value!r}")
        return value.real

    cross_value = 2.0 * delta * gamma ** 2 * mu / (lam_prod * lam_sum)
    if abs(cross_value.imag) > 1e-10 * max(abs(cross_value.real), 1.0):
        raise InvalidParameterError(
            f"nonreal cross-correlation: {cross_value!r}")

    var_plus = variance(+1.0)   # x+ (squeezed on resonance)
    var_minus = variance(-1.0)  # x- (amplified on resonance)
    # The squeezed pair (x+, y+) correlates with the opposite sign to the
    # amplified pair (x-, y-); both magnitudes are the same lambda form.
    return {
        "x+": var_plus, "x-": var_minus,
        "y+": var_minus, "y-": var_plus,
        "x+y+": -cross_value.real, "x-y-": cross_value.real,
    }


def detuned_spectra(mu: float, delta: float, gamma: float,
                    omega) -> dict[str, np.ndarray]:
    """Spectral densities for the detuned drive (matched modes).

    Diagonal entries are real; the amplified-squeezed cross entries are
    complex with an odd imaginary part.  Per (rad/s).
    """
    if gamma <= 0.0:
        raise InvalidParameterError("gamma must be > 0")
    omega = np.asarray(omega, dtype=complex)
    lam_p, lam_m = _lambda_pair(mu, delta, gamma)
    denom = math.pi * (4.0 * omega ** 2 + lam_p ** 2) \
        * (4.0 * omega ** 2 + lam_m ** 2)

    def diag(sign: float) -> np.ndarray:
        value = gamma * 2.0 * (delta ** 2 + gamma ** 2 * (1.0 - sign * mu) ** 2
                               + 4.0 * omega ** 2) / denom
        return value.real

    cross = gamma * 4.0 * delta * (gamma * mu + 2.0j * omega) / denom
    return {
        "x+": diag(+1.0), "x-": diag(-1.0),
        "y+": diag(-1.0), "y-": diag(+1.0),
        "x+y+": -cross, "x-y-": np.conj(cross),
    }


def peak_squeezing_detuned(delta: float, gamma: float, *,
                           tol: float = 1e-8) -> tuple[float, float]:
    """Optimal squeezed variance over drive for a detuned pump.

    Returns (mu*, sigma*); the squeezed quadrature is x+ (equal y-).
    """
    threshold = math.sqrt(1.0 + (delta / gamma) ** 2)
    cap = threshold - 1e-6

    def objective(mu: float) -> float:
        return detuned_variances(mu, delta, gamma)["x+"]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, cap
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while hi - lo > tol:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = objective(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = objective(x2)
    mu_star = 0.5 * (lo + hi)
    return mu_star, objective(mu_star)


# ---------------------------------------------------------------------------
# Above threshold (matched modes, pump eliminated)
# ---------------------------------------------------------------------------

def above_matched_variances(mu: float) -> tuple[float, float]:
    """Amplitude-sum and amplitude-difference variances (y+, y-).

    The difference stays at exactly 1/2 for any drive; the sum diverges
    at threshold and approaches 1/2 from above as the drive grows.
    """
    if mu <= 1.0:
        raise BelowThresholdError(f"above-threshold form needs mu > 1, got {mu}")
    return (mu / (2.0 * (mu - 1.0)), 0.5)


def above_matched_spectra(mu: float, gamma: float,
                          omega) -> dict[str, np.ndarray]:
    """Spectral densities above threshold: amplitude (y) and phase (x).

    The phase-difference entry is the free-phase ``gamma/omega^2`` law
    whose full-band integral diverges (phase diffusion).  Per (rad/s).
    """
    if mu <= 1.0:
        raise BelowThresholdError(f"above-threshold form needs mu > 1, got {mu}")
    if gamma <= 0.0:
        raise InvalidParameterError("gamma must be > 0")
    omega = np.asarray(omega, dtype=float)
    y_plus = gamma * mu / (TWO_PI * (gamma ** 2 * (mu - 1.0) ** 2 + omega ** 2))
    y_minus = gamma / (TWO_PI * (gamma ** 2 + omega ** 2))
    x_plus = gamma * mu / (TWO_PI * (gamma ** 2 * mu ** 2 + omega ** 2))
    with np.errstate(divide="ignore"):
        x_minus = gamma / (TWO_PI * omega ** 2)
    return {"y+": y_plus, "y-": y_minus, "x+": x_plus, "x-": x_minus}


def phase_diffusion_variance(amplitude_ratio: float, gamma: float,
                             tau: float) -> float:
    """Accumulated phase-difference variance over a measurement of
    duration tau, rad^2.

    ``amplitude_ratio`` is the oscillation amplitude over the thermal
    amplitude; the variance is the band-limited integral of the
    free-phase spectrum, ``(x_th/A)^2 * gamma * tau / (2 pi^2)``.
    """
    if amplitude_ratio <= 0.0:
        raise InvalidParameterError("amplitude_ratio must be > 0")
    if gamma <= 0.0:
        raise InvalidParameterError("gamma must be > 0")
    if tau < 0.0:
        raise InvalidParameterError("tau must be >= 0")
    return gamma * tau / (2.0 * math.pi ** 2 * amplitude_ratio ** 2)


def phase_diffusion_msd_rate(amplitude_ratio: float, gamma: float) -> float:
    """Growth rate of the mean-square phase difference, rad^2/s.

    This is twice the diffusion coefficient implied by the free-phase
    spectral density: d<dphi^2>/dt = gamma * (x_th/A)^2.
    """
    if amplitude_ratio <= 0.0:
        raise InvalidParameterError("amplitude_ratio must be > 0")
    return gamma / amplitude_ratio ** 2


# ---------------------------------------------------------------------------
# Finite measurement time
# ---------------------------------------------------------------------------

def truncated_lorentzian(weight: float, half_width: float,
                         omega_min: float) -> float:
    """Band-limited variance of a single Lorentzian line.

    ``weight`` is the full-band variance, ``half_width`` the line's
    half-width at half-maximum; integration runs over |omega| >=
    omega_min.  With ``half_width == 0`` the line is the marginal
    ``1/omega^2`` law and the result is the finite value
    ``weight_density * 2/omega_min`` — callers pass the density through
    ``weight`` as ``lim omega^2 S(omega)`` in that case.
    """
    if omega_min < 0.0:
        raise InvalidParameterError("omega_min must be >= 0")
    if half_width < 0.0:
        raise InvalidParameterError("half_width must be >= 0")
    if half_width == 0.0:
        if omega_min == 0.0:
            return math.inf
        return 2.0 * weight / omega_min
    return weight * (1.0 - (2.0 / math.pi) * math.atan(omega_min / half_width))


def marginal_finite_time_variance(gamma: float, tau_m: float) -> float:
    """Finite-time variance of the amplified quadrature exactly at
    threshold (matched modes): gamma * tau_m / (2 pi^2)."""
    if gamma <= 0.0 or tau_m <= 0.0:
        raise InvalidParameterError("gamma and tau_m must be > 0")
    return gamma * tau_m / (2.0 * math.pi ** 2)

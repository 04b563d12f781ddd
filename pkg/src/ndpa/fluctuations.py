"""Linearized fluctuation analysis about the mean-field steady states.

Quadrature fluctuations of the three modes obey linear Langevin equations
``du/dt = M u + v`` with white thermal noise of diffusion matrix D.  The
real (``x``/alpha) and imaginary (``y``/beta) quadrature sectors decouple
for a resonant drive; a detuned drive couples them into a joint
four-dimensional system for the signal/idler pair.

This module builds the drift/diffusion matrices for every regime,
evaluates matrix noise spectral densities, and integrates them to
steady-state or finite-measurement-time covariances.  Two independent
routes to the stationary covariance are provided on purpose: a frequency
integral of the spectral density, and a Lyapunov solve; they must agree
and are tested against each other.

Conventions
-----------
* Quadrature order is (i, j, s); collective order is (+, -, s).
* Collective quadratures are formed from per-mode *normalized*
  fluctuations (each mode scaled by its own thermal amplitude), so every
  reported variance is dimensionless and equals 1 for an undriven mode.
* The collective rotation is orthogonal; the pump quadrature passes
  through unchanged.
* Detection phases are fixed to zero (drive phase enters the steady
  state only).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import solve_continuous_lyapunov

from .errors import (
    AboveThresholdError,
    BelowThresholdError,
    InvalidParameterError,
    MarginallyStableError,
    PumpDetuningTooLargeError,
    SingularAtFrequencyError,
)
from .model import (
    DriveConfig,
    ELIMINATION_RATIO,
    SystemConfig,
    kappa,
    thermal_variance,
)
from .output import format_float, write_csv
from .steady_state import critical_pump_amplitude, solve_steady_state

TWO_PI = 2.0 * math.pi

#: Relative eigenvalue tolerance below which a mode counts as marginal.
MARGINAL_RTOL = 1e-9

#: Default guard: |delta| must not exceed this fraction of gamma_s.
DETUNING_GUARD = 0.1

#: Frequency-integral upper cutoff, in units of the largest drift scale.
CUTOFF_FACTOR = 1e3


def _rotation(n: int) -> np.ndarray:
    """Orthogonal map to collective (+, -) quadratures; pump untouched."""
    r2 = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    if n == 2:
        return r2
    if n == 3:
        out = np.eye(3)
        out[:2, :2] = r2
        return out
    if n == 4:
        out = np.zeros((4, 4))
        out[:2, :2] = r2
        out[2:, 2:] = r2
        return out
    raise ValueError(f"unsupported dimension {n}")


@dataclass(frozen=True)
class Sector:
    """One independent real linear block ``du/dt = drift @ u + noise``.

    ``drift`` and ``diffusion`` are in SI units; ``norm`` holds the
    inverse thermal amplitudes used for reporting, and ``rotation`` the
    orthogonal collective map.  ``labels`` name the rotated coordinates.
    """

    name: str
    drift: np.ndarray
    diffusion: np.ndarray
    norm: np.ndarray
    rotation: np.ndarray
    labels: tuple[str, ...]

    @property
    def collective_map(self) -> np.ndarray:
        """Rows map SI quadratures to normalized collective ones."""
        return self.rotation @ np.diag(self.norm)

    def collective_drift(self) -> np.ndarray:
        """Drift expressed on the normalized collective coordinates.

        All spectral numerics run in this frame: collective modes that
        decouple physically then decouple entrywise, which keeps nearly
        marginal sectors from contaminating well-conditioned entries.
        """
        t = self.collective_map
        t_inv = np.diag(1.0 / self.norm) @ self.rotation.T
        return t @ self.drift @ t_inv

    def collective_diffusion(self) -> np.ndarray:
        t = self.collective_map
        return t @ self.diffusion @ t.T

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.drift)


@dataclass(frozen=True)
class FluctuationModel:
    """Drift/diffusion description of fluctuations about a steady state."""

    sectors: tuple[Sector, ...]
    regime: str  # "below" | "above_full" | "above_eliminated" | "detuned"

    @property
    def labels(self) -> tuple[str, ...]:
        out: tuple[str, ...] = ()
        for sector in self.sectors:
            out = out + sector.labels
        return out

    @property
    def m_alpha(self) -> np.ndarray | None:
        for sector in self.sectors:
            if sector.name == "x":
                return sector.drift
        return None

    @property
    def m_beta(self) -> np.ndarray | None:
        for sector in self.sectors:
            if sector.name == "y":
                return sector.drift
        return None

    @property
    def m_joint(self) -> np.ndarray | None:
        for sector in self.sectors:
            if sector.name == "xy":
                return sector.drift
        return None

    @property
    def d(self) -> np.ndarray:
        """Block-diagonal SI diffusion over all sectors."""
        blocks = [sector.diffusion for sector in self.sectors]
        size = sum(b.shape[0] for b in blocks)
        out = np.zeros((size, size))
        pos = 0
        for block in blocks:
            k = block.shape[0]
            out[pos:pos + k, pos:pos + k] = block
            pos += k
        return out

    @property
    def rotation(self) -> np.ndarray:
        """Block-diagonal orthogonal collective rotation."""
        blocks = [sector.rotation for sector in self.sectors]
        size = sum(b.shape[0] for b in blocks)
        out = np.zeros((size, size))
        pos = 0
        for block in blocks:
            k = block.shape[0]
            out[pos:pos + k, pos:pos + k] = block
            pos += k
        return out

    def select(self, *names: str) -> "FluctuationModel":
        """Submodel with only the named sectors (e.g. just the amplitude
        sector above threshold, where the phase sector is marginal)."""
        chosen = tuple(s for s in self.sectors if s.name in names)
        if not chosen:
            raise InvalidParameterError(
                f"no sectors named {names!r} in {tuple(s.name for s in self.sectors)!r}")
        return FluctuationModel(sectors=chosen, regime=self.regime)

    def max_real_eigenvalue(self) -> float:
        return max(float(np.max(sector.eigenvalues().real))
                   for sector in self.sectors)

    def marginal_tolerance(self) -> float:
        """Absolute eigenvalue scale below which a mode is 'marginal'."""
        scale = max(float(np.max(np.abs(sector.eigenvalues())))
                    for sector in self.sectors)
        return MARGINAL_RTOL * scale


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def _mode_arrays(sys: SystemConfig, with_pump: bool = True):
    modes = [sys.mode_i, sys.mode_j] + ([sys.mode_s] if with_pump else [])
    gammas = np.array([m.gamma for m in modes])
    kappas = np.array([kappa(m, sys.g) for m in modes])
    diff = np.array([m.gamma * sys.k_b * sys.temperature
                     / (m.mass * m.omega ** 2) for m in modes])
    xth = np.array([math.sqrt(thermal_variance(m, sys.temperature, sys.k_b))
                    for m in modes])
    return gammas, kappas, diff, xth


def _require_thermal(sys: SystemConfig) -> None:
    if sys.temperature <= 0.0:
        raise InvalidParameterError(
            "fluctuation analysis needs temperature > 0 (normalization "
            "is per-mode thermal variance)")


def _drift_full(gammas, kappas, a_s: float, a_i: float, a_j: float,
                sign: float) -> np.ndarray:
    """General 3x3 quadrature drift; sign -1 for the x sector, +1 for y."""
    g_i, g_j, g_s = gammas
    k_i, k_j, k_s = kappas
    return 0.5 * np.array([
        [-g_i, sign * k_i * a_s, k_i * a_j],
        [sign * k_j * a_s, -g_j, k_j * a_i],
        [-k_s * a_j, -k_s * a_i, -g_s],
    ])


def build_below(sys: SystemConfig, drive: DriveConfig) -> FluctuationModel:
    """Fluctuation model for an undepleted pump (mu <= 1, resonant drive).

    At exactly ``mu = 1`` the amplified quadratures are marginal; the
    model is still built so spectral densities and band-limited variances
    remain available (full-band variances get divergence flags).
    """
    _require_thermal(sys)
    if drive.delta != 0.0:
        raise InvalidParameterError("resonant builder: use build_detuned "
                                    "for a nonzero drive detuning")
    if drive.mu > 1.0:
        raise AboveThresholdError(
            f"build_below needs mu <= 1, got {drive.mu}")
    gammas, kappas, diff, xth = _mode_arrays(sys)
    a_s = drive.mu * critical_pump_amplitude(sys)
    rot = _rotation(3)
    norm = 1.0 / xth
    sectors = (
        Sector("x", _drift_full(gammas, kappas, a_s, 0.0, 0.0, -1.0),
               np.diag(diff), norm, rot, ("x+", "x-", "x_s")),
        Sector("y", _drift_full(gammas, kappas, a_s, 0.0, 0.0, +1.0),
               np.diag(diff), norm, rot, ("y+", "y-", "y_s")),
    )
    return FluctuationModel(sectors=sectors, regime="below")


def build_above(sys: SystemConfig, drive: DriveConfig, *,
                eliminate_pump: bool = True,
                guard_ratio: float = ELIMINATION_RATIO) -> FluctuationModel:
    """Fluctuation model above threshold (mu > 1, resonant drive).

    With ``eliminate_pump`` the fast pump quadrature is slaved to the
    slow modes, leaving 2x2 drifts; the pump thermal noise it carried is
    folded into an effective (no longer diagonal) diffusion matrix.  The
    fed-through term is kept exactly, which is why the resulting
    squeezing does not depend on the pump/resonator mass ratio.
    """
    _require_thermal(sys)
    if drive.delta != 0.0:
        raise InvalidParameterError("above-threshold fluctuations with a "
                                    "detuned drive are not modeled")
    if drive.mu <= 1.0:
        raise BelowThresholdError(
            f"build_above needs mu > 1, got {drive.mu} (use build_below)")

    gammas, kappas, diff, xth = _mode_arrays(sys)
    state = solve_steady_state(sys, DriveConfig(mu=drive.mu))
    a_i, a_j, a_s = state.magnitudes

    if not eliminate_pump:
        rot = _rotation(3)
        norm = 1.0 / xth
        sectors = (
            Sector("x", _drift_full(gammas, kappas, a_s, a_i, a_j, -1.0),
                   np.diag(diff), norm, rot, ("x+", "x-", "x_s")),
            Sector("y", _drift_full(gammas, kappas, a_s, a_i, a_j, +1.0),
                   np.diag(diff), norm, rot, ("y+", "y-", "y_s")),
        )
        return FluctuationModel(sectors=sectors, regime="above_full")

    sys.require_fast_pump(guard_ratio)
    gamma_s = gammas[2]
    # Slave the pump row: u_s = (2/gamma_s) * (C @ u + v_s).
    col = 0.5 * np.array([kappas[0] * a_j, kappas[1] * a_i])      # B
    row = -0.5 * np.array([kappas[2] * a_j, kappas[2] * a_i])     # C
    coupling = (2.0 / gamma_s) * np.outer(col, row)
    d_eff = np.diag(diff[:2]) + (4.0 * diff[2] / gamma_s ** 2) * np.outer(col, col)
    rot = _rotation(2)
    norm = 1.0 / xth[:2]
    sectors = []
    for name, sign, labels in (("x", -1.0, ("x+", "x-")),
                               ("y", +1.0, ("y+", "y-"))):
        base = 0.5 * np.array([
            [-gammas[0], sign * kappas[0] * a_s],
            [sign * kappas[1] * a_s, -gammas[1]],
        ])
        sectors.append(Sector(name, base + coupling, d_eff, norm, rot, labels))
    return FluctuationModel(sectors=tuple(sectors), regime="above_eliminated")


def build_detuned(sys: SystemConfig, drive: DriveConfig, *,
                  detuning_guard: float = DETUNING_GUARD) -> FluctuationModel:
    """Joint 4x4 fluctuation model for a detuned drive below threshold.

    Valid in the frame rotating at half the detuning, where the x and y
    quadratures of the signal/idler pair couple with strength delta/2.
    The pump must still respond quasi-statically (|delta| << gamma_s).
    """
    _require_thermal(sys)
    if abs(drive.delta) > detuning_guard * sys.mode_s.gamma:
        raise PumpDetuningTooLargeError(
            f"|delta| = {abs(drive.delta):.3g} exceeds "
            f"{detuning_guard:g} * gamma_s = "
            f"{detuning_guard * sys.mode_s.gamma:.3g}")

    gammas, kappas, diff, xth = _mode_arrays(sys, with_pump=False)
    a_s = drive.mu * critical_pump_amplitude(sys)
    half = 0.5 * drive.delta * np.eye(2)
    blocks = {}
    for name, sign in (("x", -1.0), ("y", +1.0)):
        blocks[name] = 0.5 * np.array([
            [-gammas[0], sign * kappas[0] * a_s],
            [sign * kappas[1] * a_s, -gammas[1]],
        ])
    m_joint = np.block([[blocks["x"], -half], [half, blocks["y"]]])

    eigs = np.linalg.eigvals(m_joint)
    tol = MARGINAL_RTOL * float(np.max(np.abs(eigs)))
    if float(np.max(eigs.real)) > tol:
        raise AboveThresholdError(
            f"drive mu = {drive.mu} is above the detuned instability "
            "threshold (drift has a positive eigenvalue)")

    d_joint = np.diag(np.concatenate([diff, diff]))
    norm = np.concatenate([1.0 / xth, 1.0 / xth])
    sector = Sector("xy", m_joint, d_joint, norm, _rotation(4),
                    ("x+", "x-", "y+", "y-"))
    return FluctuationModel(sectors=(sector,), regime="detuned")


# ---------------------------------------------------------------------------
# Spectral densities
# ---------------------------------------------------------------------------

def _spectrum_block(drift_col: np.ndarray, diff_col: np.ndarray,
                    omega: float) -> np.ndarray:
    """Collective-frame spectral density of one sector at one frequency."""
    k = drift_col.shape[0]
    resolvent = np.linalg.inv(drift_col + 1j * omega * np.eye(k))
    return (resolvent @ diff_col @ resolvent.conj().T) / TWO_PI


def spectral_density(model: FluctuationModel, omega: float) -> np.ndarray:
    """Normalized collective-quadrature spectral density matrix at omega.

    Returns a Hermitian positive semi-definite matrix over
    ``model.labels`` with units of normalized variance per (rad/s).
    Raises :class:`SingularAtFrequencyError` where a marginal mode makes
    the resolvent singular (omega = 0 at threshold and the free-phase
    sector above threshold).
    """
    blocks = []
    for sector in model.sectors:
        k = sector.drift.shape[0]
        drift_col = sector.collective_drift()
        a = drift_col + 1j * omega * np.eye(k)
        smallest = np.linalg.svd(a, compute_uv=False)[-1]
        largest = np.linalg.norm(a, 2)
        if not smallest > 1e-13 * largest:
            raise SingularAtFrequencyError(
                f"sector {sector.name!r} is singular at omega = {omega!r} "
                "(marginal mode)")
        blocks.append(_spectrum_block(drift_col,
                                      sector.collective_diffusion(), omega))
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size), dtype=complex)
    pos = 0
    for block in blocks:
        k = block.shape[0]
        out[pos:pos + k, pos:pos + k] = block
        pos += k
    return out


@dataclass(frozen=True)
class SpectrumSeries:
    """Spectral density matrices on a frequency grid (collective basis)."""

    labels: tuple[str, ...]
    frequencies: np.ndarray          # rad/s, offsets from the carriers
    values: np.ndarray               # (n, k, k) complex Hermitian

    def to_csv(self, path: str | Path) -> None:
        """Long-format CSV: one row per (omega, row-label, col-label)."""
        rows = []
        for idx, omega in enumerate(self.frequencies):
            for a, la in enumerate(self.labels):
                for b, lb in enumerate(self.labels):
                    val = self.values[idx, a, b]
                    rows.append([format_float(omega), la, lb,
                                 format_float(val.real),
                                 format_float(val.imag)])
        write_csv(path, ["omega_rad_s", "row", "col", "re", "im"], rows,
                  comments={"content": "spectral-density"})

    def to_json(self, path: str | Path | None = None):
        payload = {
            "labels": list(self.labels),
            "frequencies_rad_s": [float(w) for w in self.frequencies],
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }
        if path is None:
            return payload
        Path(path).write_text(json.dumps(payload, indent=1))
        return payload


def spectrum_series(model: FluctuationModel,
                    omegas: Iterable[float]) -> SpectrumSeries:
    grid = np.asarray(list(omegas), dtype=float)
    values = np.stack([spectral_density(model, w) for w in grid])
    return SpectrumSeries(labels=model.labels, frequencies=grid,
                          values=values)


# ---------------------------------------------------------------------------
# Covariances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceReport:
    """Normalized collective-quadrature covariance matrix.

    ``sigma`` entries flagged in ``divergent`` hold ``+inf``: no
    stationary value exists there (marginal mode).  ``method`` records
    the route used, and ``tau_m`` the measurement time for band-limited
    results.
    """

    labels: tuple[str, ...]
    sigma: np.ndarray
    method: str                      # frequency_integral | lyapunov | finite_time
    divergent: np.ndarray
    tau_m: float | None = None

    def entry(self, row: str, col: str) -> float:
        a = self.labels.index(row)
        b = self.labels.index(col)
        return float(self.sigma[a, b])

    def is_divergent(self, row: str, col: str) -> bool:
        a = self.labels.index(row)
        b = self.labels.index(col)
        return bool(self.divergent[a, b])

    def subset(self, labels: Sequence[str]) -> "CovarianceReport":
        idx = [self.labels.index(label) for label in labels]
        return CovarianceReport(labels=tuple(labels),
                                sigma=self.sigma[np.ix_(idx, idx)],
                                method=self.method,
                                divergent=self.divergent[np.ix_(idx, idx)],
                                tau_m=self.tau_m)

    def to_csv(self, path: str | Path) -> None:
        rows = []
        for a, la in enumerate(self.labels):
            for b, lb in enumerate(self.labels):
                rows.append([la, lb, format_float(self.sigma[a, b]),
                             int(self.divergent[a, b])])
        write_csv(path, ["row", "col", "value", "divergent"], rows,
                  comments={"content": "covariance", "method": self.method,
                            **({"tau_m_s": format_float(self.tau_m)}
                               if self.tau_m else {})})

    def to_json(self, path: str | Path | None = None):
        payload = {
            "labels": list(self.labels),
            "method": self.method,
            "tau_m_s": self.tau_m,
            "sigma": [[format_float(v) if np.isinf(v) else float(v)
                       for v in row] for row in self.sigma],
            "divergent": self.divergent.astype(bool).tolist(),
        }
        if path is None:
            return payload
        Path(path).write_text(json.dumps(payload, indent=1))
        return payload


def _assemble(labels, blocks_sigma, blocks_flags, method, tau_m):
    size = len(labels)
    sigma = np.zeros((size, size))
    flags = np.zeros((size, size), dtype=bool)
    pos = 0
    for sig, flag in zip(blocks_sigma, blocks_flags):
        k = sig.shape[0]
        sigma[pos:pos + k, pos:pos + k] = sig
        flags[pos:pos + k, pos:pos + k] = flag
        pos += k
    return CovarianceReport(labels=labels, sigma=sigma, method=method,
                            divergent=flags, tau_m=tau_m)


def variance_lyapunov(model: FluctuationModel) -> CovarianceReport:
    """Stationary covariance via the algebraic Lyapunov equation.

    Requires strict stability; a marginal or unstable drift raises
    :class:`MarginallyStableError` since no stationary covariance exists.
    """
    tol = model.marginal_tolerance()
    sigmas, flags = [], []
    for sector in model.sectors:
        eigs = sector.eigenvalues()
        if float(np.max(eigs.real)) > -tol:
            raise MarginallyStableError(
                f"sector {sector.name!r} has an eigenvalue with real part "
                f">= -{tol:.3g}; no stationary covariance")
        sigma = solve_continuous_lyapunov(sector.collective_drift(),
                                          -sector.collective_diffusion())
        sigmas.append(0.5 * (sigma + sigma.T))
        flags.append(np.zeros_like(sigmas[-1], dtype=bool))
    return _assemble(model.labels, sigmas, flags, "lyapunov", None)


def _integration_breakpoints(eigs: np.ndarray, lo: float,
                             hi: float) -> list[float]:
    """Breakpoints at the Lorentzian widths/centers for adaptive quadrature."""
    pts: set[float] = set()
    for lam in eigs:
        width = abs(lam.real)
        center = abs(lam.imag)
        for p in (width, 0.1 * width, 10.0 * width, center,
                  center - width, center + width):
            if lo < p < hi and p > 0.0:
                pts.add(float(p))
    return sorted(pts)


def _tail_correction(drift: np.ndarray, diffusion: np.ndarray,
                     cutoff: float) -> np.ndarray:
    """Analytic integral of Re S over [cutoff, inf) from the large-omega
    expansion S ~ D/omega^2 + K/omega^4 (odd orders are imaginary)."""
    k = (drift @ diffusion @ drift.T - drift @ drift @ diffusion
         - diffusion @ drift.T @ drift.T)
    return (diffusion / cutoff + k / (3.0 * cutoff ** 3)) / TWO_PI


def _quad_block(drift_col, diff_col, lo, cutoff, rtol):
    """2 * integral over [lo, inf) of the real collective spectrum."""
    pts = _integration_breakpoints(np.linalg.eigvals(drift_col), lo, cutoff)

    def integrand(omega: float) -> np.ndarray:
        return _spectrum_block(drift_col, diff_col, omega).real

    value, _err = quad_vec(integrand, lo, cutoff, epsrel=rtol,
                           norm="max", points=pts, limit=2000)
    tail = _tail_correction(drift_col, diff_col, cutoff)
    sigma = 2.0 * (value + tail)
    return 0.5 * (sigma + sigma.T)


def variance_integral(model: FluctuationModel, *,
                      tau_m: float | None = None,
                      low_cut: float | None = None,
                      rtol: float = 1e-12) -> CovarianceReport:
    """Covariance as a frequency integral of the spectral density.

    Full band by default; passing ``tau_m`` truncates the (one-sided,
    doubled) integral below ``2*pi/tau_m``, modeling a measurement of
    finite duration; ``low_cut`` gives the cutoff directly.

    Full-band entries carried by a marginal mode have no stationary
    value: they are flagged and set to ``+inf`` rather than raising, so
    parameter sweeps across the instability produce complete tables.
    Any band-limited integral is finite, marginal modes included.
    """
    if tau_m is not None and low_cut is not None:
        raise InvalidParameterError("pass either tau_m or low_cut, not both")
    if tau_m is not None:
        if tau_m <= 0.0:
            raise InvalidParameterError("tau_m must be > 0")
        lo = TWO_PI / tau_m
        method = "finite_time"
    elif low_cut is not None:
        if low_cut < 0.0:
            raise InvalidParameterError("low_cut must be >= 0")
        lo = low_cut
        method = "finite_time" if low_cut > 0.0 else "frequency_integral"
    else:
        lo = 0.0
        method = "frequency_integral"

    tol = model.marginal_tolerance()
    sigmas, flags = [], []
    for sector in model.sectors:
        eigs, vecs = np.linalg.eig(sector.drift)
        marginal = np.abs(eigs.real) <= tol
        t = sector.collective_map
        scale = float(np.max(np.abs(eigs)))
        cutoff = max(CUTOFF_FACTOR * scale, 10.0 * lo if lo > 0 else 0.0)
        k = sector.drift.shape[0]

        if lo > 0.0 or not marginal.any():
            pts = _integration_breakpoints(sector, lo, cutoff)
            sigma = _quad_sector(sector.drift, sector.diffusion, t,
                                 lo, pts, cutoff, rtol)
            sigmas.append(sigma)
            flags.append(np.zeros((k, k), dtype=bool))
            continue

        # Full band with marginal modes: integrate the stable complement
        # exactly (deflated block), flag everything the marginal
        # directions touch.
        kernel = vecs[:, marginal].real
        q, _ = np.linalg.qr(np.hstack([kernel, np.eye(k)]))
        n_m = kernel.shape[1]
        q2 = q[:, n_m:k]
        drift_s = q2.T @ sector.drift @ q2
        diff_s = q2.T @ sector.diffusion @ q2
        t_s = t @ q2
        stable_sector = Sector(sector.name, drift_s, diff_s,
                               np.ones(k - n_m), np.eye(k - n_m),
                               sector.labels[:k - n_m])
        pts = _integration_breakpoints(stable_sector, 0.0, cutoff)
        sigma = _quad_sector(drift_s, diff_s, t_s, 0.0, pts, cutoff, rtol)

        participation = np.max(np.abs(t @ (kernel / np.linalg.norm(
            kernel, axis=0, keepdims=True))), axis=1)
        touched = participation > 1e-10
        flag = touched[:, None] | touched[None, :]
        sigma = np.where(flag, np.inf, sigma)
        sigmas.append(sigma)
        flags.append(flag)

    return _assemble(model.labels, sigmas, flags, method, tau_m)


# ---------------------------------------------------------------------------
# Stability boundary
# ---------------------------------------------------------------------------

def _growth_rate(sys: SystemConfig, mu: float, delta: float) -> float:
    """Largest drift real part of the undepleted-pump linearization."""
    gammas, kappas, _diff, _xth = _mode_arrays(sys, with_pump=False)
    a_s = mu * critical_pump_amplitude(sys)
    half = 0.5 * delta * np.eye(2)
    m_x = 0.5 * np.array([[-gammas[0], -kappas[0] * a_s],
                          [-kappas[1] * a_s, -gammas[1]]])
    m_y = 0.5 * np.array([[-gammas[0], kappas[0] * a_s],
                          [kappas[1] * a_s, -gammas[1]]])
    m = np.block([[m_x, -half], [half, m_y]])
    return float(np.max(np.linalg.eigvals(m).real))


def instability_threshold(sys: SystemConfig, delta: float = 0.0, *,
                          tol: float = 1e-9) -> float:
    """Drive at which the quadrature drift first becomes unstable.

    Located by bisection on the largest eigenvalue real part; resolves
    the resonant threshold at mu = 1 and the detuned one at
    ``sqrt(1 + (delta/gamma)^2)`` for matched modes.
    """
    lo, hi = 0.0, 1.0
    for _ in range(64):
        if _growth_rate(sys, hi, delta) > 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise InvalidParameterError("no instability found below mu = 2^64")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _growth_rate(sys, mid, delta) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)

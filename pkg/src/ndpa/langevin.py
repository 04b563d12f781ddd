"""Stochastic-simulation oracle for the slow-flow Langevin dynamics.

Integrates the full *nonlinear* slow-flow equations of the three coupled
modes (not their linearization) with additive thermal noise, over an
ensemble of trajectories, and estimates collective-quadrature variances
and spectra with bootstrap errors.  The estimates are compared against
the closed forms / matrix engine by z-score.

Design points
-------------
* Euler-Maruyama with additive noise (strong order 1 here); default time
  step is a small fraction of the fastest simulated decay time.
* Counter-based RNG (Philox) keyed by (seed, trajectory-block), with
  trajectories inside a block advancing in lockstep: ensembles are
  bit-reproducible and block-parallel, independent of worker count.
* The pump is simulated explicitly below threshold and adiabatically
  eliminated above threshold by default; both paths are available so the
  pump-noise feed-through can be checked directly.
* A detuned drive is integrated in the frame rotating at half the
  detuning, where the drive is static and the detuning appears as an
  extra quadrature rotation.
* Trajectories start at the deterministic steady state plus one thermal
  fluctuation, then run a burn-in of several relaxation times.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal as _signal

from .errors import (
    BelowThresholdError,
    InsufficientDurationError,
    InvalidParameterError,
    LabelMismatchError,
    SeedRequiredError,
    UnstableStepError,
)
from .fluctuations import (
    CovarianceReport,
    FluctuationModel,
    build_above,
    build_below,
    build_detuned,
)
from .model import DriveConfig, SystemConfig, susceptibility, thermal_variance
from .output import dump_json, write_trajectory_dump
from .steady_state import critical_pump_force, solve_steady_state

BLOCK_SIZE = 2048
WELCH_TRAJ_CAP = 512
BOOTSTRAP_SAMPLES = 200

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SimPlan:
    """Ensemble integration plan.

    ``burn_in`` is the discarded initial fraction of ``t_total``; it must
    cover at least five decay times of the slowest stable quadrature
    (validated against the actual model when the simulation starts).
    """

    dt: float
    t_total: float
    n_traj: int
    seed: int | None = None
    burn_in: float = 0.5
    estimator: str = "variance"          # "variance" | "welch"
    welch_segment: int | None = None     # samples per segment
    welch_overlap: float = 0.5

    def __post_init__(self) -> None:
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise InvalidParameterError("dt must be finite and > 0")
        if not (self.t_total > self.dt):
            raise InvalidParameterError("t_total must exceed dt")
        if self.n_traj < 2:
            raise InvalidParameterError("n_traj must be >= 2")
        if not (0.0 <= self.burn_in < 1.0):
            raise InvalidParameterError("burn_in fraction must lie in [0, 1)")
        if self.estimator not in ("variance", "welch"):
            raise InvalidParameterError(
                f"unknown estimator {self.estimator!r}")
        if self.estimator == "welch":
            if not self.welch_segment or self.welch_segment < 16:
                raise InvalidParameterError(
                    "welch estimator needs welch_segment >= 16 samples")
            if not (0.0 <= self.welch_overlap < 1.0):
                raise InvalidParameterError("welch_overlap must lie in [0, 1)")


@dataclass(frozen=True)
class SpectrumEstimate:
    """Welch-averaged two-sided spectral densities, per (rad/s)."""

    labels: tuple[str, ...]
    frequencies: np.ndarray       # rad/s
    psd: np.ndarray               # (k, n_freq)
    psd_se: np.ndarray


@dataclass(frozen=True)
class EnsembleStats:
    """Ensemble estimates with bootstrap standard errors."""

    labels: tuple[str, ...]
    mode_labels: tuple[str, ...]
    mean_amplitudes: np.ndarray      # complex, time/ensemble averaged
    covariance: np.ndarray           # normalized collective quadratures
    covariance_se: np.ndarray
    n_traj: int
    dt: float
    t_measure: float
    seed: int
    spectra: SpectrumEstimate | None = None
    series: np.ndarray | None = None          # (traj, sample, channel)
    series_times: np.ndarray | None = None

    def to_json(self, path: str | Path | None = None):
        payload = {
            "labels": list(self.labels),
            "mode_labels": list(self.mode_labels),
            "mean_amplitudes_re": self.mean_amplitudes.real.tolist(),
            "mean_amplitudes_im": self.mean_amplitudes.imag.tolist(),
            "covariance": self.covariance.tolist(),
            "covariance_se": self.covariance_se.tolist(),
            "n_traj": self.n_traj,
            "dt_s": self.dt,
            "t_measure_s": self.t_measure,
            "seed": self.seed,
        }
        if self.spectra is not None:
            payload["spectra"] = {
                "labels": list(self.spectra.labels),
                "frequencies_rad_s": self.spectra.frequencies.tolist(),
                "psd": self.spectra.psd.tolist(),
                "psd_se": self.spectra.psd_se.tolist(),
            }
        return dump_json(payload, path)

    def dump_trajectories(self, path: str | Path) -> None:
        """Raw recorded series as flat little-endian float64 (see output)."""
        if self.series is None:
            raise InvalidParameterError(
                "no recorded series: run simulate(..., store_series=True)")
        write_trajectory_dump(path, self.series, self.seed)


@dataclass(frozen=True)
class ComparisonVerdict:
    """Entrywise z-test of ensemble statistics against a reference."""

    passed: bool
    z: np.ndarray
    max_abs_z: float
    mean_z: float
    n_compared: int
    notes: str = ""


@dataclass(frozen=True)
class PhaseDiffusionResult:
    """Growth of the phase-difference spread above threshold."""

    times: np.ndarray
    msd_difference: np.ndarray
    msd_sum: np.ndarray
    slope: float                  # d<dphi_-^2>/dt, rad^2/s
    slope_se: float
    predicted_slope: float        # gamma * (x_th/A)^2
    sum_tail_slope: float         # late-time slope of the locked phase sum

    @property
    def diffusion_coefficient(self) -> float:
        return 0.5 * self.slope


# ---------------------------------------------------------------------------
# Setup shared by all entry points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _RunSetup:
    sys: SystemConfig
    drive: DriveConfig
    plan: SimPlan
    eliminate: bool
    linearize: bool
    n_steps: int
    burn_steps: int
    stat_stride: int
    labels: tuple[str, ...]
    mode_labels: tuple[str, ...]
    record_phases: bool = False
    record_series: bool = False
    record_stride: int = 1


def _reference_model(sys: SystemConfig, drive: DriveConfig,
                     eliminate: bool) -> FluctuationModel:
    if drive.delta != 0.0:
        return build_detuned(sys, drive)
    if drive.mu > 1.0:
        return build_above(sys, drive, eliminate_pump=eliminate)
    return build_below(sys, drive)


def _stable_rates(model: FluctuationModel) -> np.ndarray:
    tol = model.marginal_tolerance()
    rates = []
    for sector in model.sectors:
        real = -sector.eigenvalues().real
        rates.extend(r for r in real if r > tol)
    if not rates:
        raise InvalidParameterError("no stable quadratures to relax")
    return np.asarray(rates)


def _prepare(sys: SystemConfig, drive: DriveConfig, plan: SimPlan, *,
             eliminate_pump: bool | None, linearize: bool,
             record_phases: bool = False, record_series: bool = False,
             record_stride: int = 1) -> _RunSetup:
    if plan.seed is None:
        raise SeedRequiredError("SimPlan.seed is required for reproducible runs")
    if sys.temperature <= 0.0:
        raise InvalidParameterError("simulation needs temperature > 0")

    eliminate = drive.mu > 1.0 if eliminate_pump is None else eliminate_pump
    if eliminate and drive.delta != 0.0:
        raise InvalidParameterError(
            "pump elimination with a detuned drive is not modeled")
    if eliminate:
        sys.require_fast_pump()
    if linearize and eliminate:
        raise InvalidParameterError(
            "linearized runs keep the pump explicit; pass eliminate_pump=False")

    modes = [sys.mode_i, sys.mode_j] + ([] if eliminate else [sys.mode_s])
    gamma_max = max(m.gamma for m in modes)
    dt_cap = (2.0 / gamma_max) / 100.0
    if plan.dt > dt_cap * (1.0 + 1e-12):
        raise InvalidParameterError(
            f"dt = {plan.dt:.3g} exceeds (2/gamma_max)/100 = {dt_cap:.3g} "
            "for the simulated modes")

    model = _reference_model(sys, drive, eliminate)
    rates = _stable_rates(model)
    slowest = float(np.min(rates))
    burn_time = plan.burn_in * plan.t_total
    if burn_time < 5.0 / slowest * (1.0 - 1e-9):
        raise InvalidParameterError(
            f"burn-in {burn_time:.3g} s is shorter than five decay times "
            f"of the slowest stable quadrature ({5.0 / slowest:.3g} s)")

    fastest = float(np.max(rates))
    stat_stride = max(1, int(0.1 / (fastest * plan.dt)))

    n_steps = int(round(plan.t_total / plan.dt))
    burn_steps = int(round(burn_time / plan.dt))
    labels = ("x+", "x-", "y+", "y-") if eliminate else \
        ("x+", "x-", "y+", "y-", "x_s", "y_s")
    mode_labels = ("i", "j") if eliminate else ("i", "j", "s")
    return _RunSetup(sys=sys, drive=drive, plan=plan, eliminate=eliminate,
                     linearize=linearize, n_steps=n_steps,
                     burn_steps=burn_steps, stat_stride=stat_stride,
                     labels=labels, mode_labels=mode_labels,
                     record_phases=record_phases,
                     record_series=record_series,
                     record_stride=record_stride)


def _steady_rotating_frame(sys: SystemConfig, drive: DriveConfig,
                           eliminate: bool) -> np.ndarray:
    """Deterministic fixed point of the simulated equations (frame
    rotating at delta/2 for the modes, delta for the pump)."""
    state = solve_steady_state(sys, replace(drive, delta=0.0))
    if eliminate:
        return np.array([state.a_i, state.a_j])
    if drive.delta == 0.0:
        return np.array([state.a_i, state.a_j, state.a_s])
    # Below threshold with detuning: modes at zero, pump slightly shifted
    # by the finite response time (exact fixed point of the integrator).
    chi_s = susceptibility(sys.mode_s)
    force = drive.mu * critical_pump_force(sys) * np.exp(1j * drive.phi_s)
    pump = 1j * chi_s * force / (1.0 - 2j * drive.delta / sys.mode_s.gamma)
    return np.array([0j, 0j, pump])


# ---------------------------------------------------------------------------
# Block integrator
# ---------------------------------------------------------------------------

def _simulate_block(setup: _RunSetup, block_index: int,
                    n_block: int, record_cap: int) -> dict:
    """Integrate one block of trajectories; returns partial accumulators."""
    sys = setup.sys
    drive = setup.drive
    plan = setup.plan
    dt = plan.dt
    rng = np.random.Generator(np.random.Philox(key=[plan.seed, block_index]))

    modes = [sys.mode_i, sys.mode_j] + ([] if setup.eliminate else [sys.mode_s])
    gam = np.array([m.gamma for m in modes])
    chi = np.array([susceptibility(m) for m in modes])
    xth = np.array([math.sqrt(thermal_variance(m, sys.temperature, sys.k_b))
                    for m in modes])
    diff = gam * xth ** 2                     # per-quadrature noise intensity
    noise_scale = np.sqrt(diff * dt)

    g = sys.g
    half_g = 0.5 * gam
    pref = 0.5j * g * chi                     # i g chi / 2 per mode
    force = drive.mu * critical_pump_force(sys) * np.exp(1j * drive.phi_s)
    rot_mode = 0.5j * drive.delta             # frame-rotation terms
    rot_pump = 1j * drive.delta

    bbar = _steady_rotating_frame(sys, drive, setup.eliminate)
    if setup.eliminate:
        chi_s = susceptibility(sys.mode_s)
        gamma_s = sys.mode_s.gamma
        diff_s = gamma_s * thermal_variance(sys.mode_s, sys.temperature, sys.k_b)
        feed_scale = 2.0 * math.sqrt(diff_s * dt) / gamma_s
        pump_phase = drive.phi_s
    else:
        pump_phase = float(np.angle(bbar[2] * -1j)) if abs(bbar[2]) else drive.phi_s
    derot_half = np.exp(-0.5j * pump_phase)
    derot_full = np.exp(-1.0j * pump_phase)

    n_modes = len(modes)
    state = bbar[None, :] * np.ones((n_block, 1), dtype=complex)
    init = rng.standard_normal((n_block, 2 * n_modes))
    state = state + (init[:, :n_modes] + 1j * init[:, n_modes:]) * xth[None, :]

    guard = 1e6 * max(float(np.max(np.abs(bbar))), float(np.max(xth)) * 1e3,
                      critical_pump_force(sys) * susceptibility(sys.mode_s))

    k = len(setup.labels)
    acc_qq = np.zeros((n_block, k, k))
    acc_q = np.zeros((n_block, k))
    acc_modes = np.zeros((n_block, n_modes), dtype=complex)
    n_stat = 0

    start = block_index * BLOCK_SIZE
    n_rec_traj = max(0, min(n_block, record_cap - start))
    recorded: list[np.ndarray] = []
    phases: list[np.ndarray] = []
    rec_times: list[float] = []

    def quadratures(z: np.ndarray) -> np.ndarray:
        dev = (z - bbar[None, :])
        dev_ij = dev[:, :2] * derot_half
        alpha = dev_ij.real / xth[None, :2]
        beta = dev_ij.imag / xth[None, :2]
        cols = [(alpha[:, 0] + alpha[:, 1]) / _SQRT2,
                (alpha[:, 0] - alpha[:, 1]) / _SQRT2,
                (beta[:, 0] + beta[:, 1]) / _SQRT2,
                (beta[:, 0] - beta[:, 1]) / _SQRT2]
        if not setup.eliminate:
            dev_s = dev[:, 2] * derot_full
            cols.append(dev_s.real / xth[2])
            cols.append(dev_s.imag / xth[2])
        return np.stack(cols, axis=1)

    def phase_pair(z: np.ndarray) -> np.ndarray:
        rotated = z[:, :2] * derot_half * -1j
        phi = np.angle(rotated)
        return np.stack([(phi[:, 0] + phi[:, 1]) / _SQRT2,
                         (phi[:, 0] - phi[:, 1]) / _SQRT2], axis=1)

    for step in range(setup.n_steps):
        z = rng.standard_normal((n_block, 2 * n_modes))
        noise = (z[:, :n_modes] + 1j * z[:, n_modes:]) * noise_scale[None, :]
        b_i, b_j = state[:, 0], state[:, 1]

        if setup.eliminate:
            # Pump slaved to the slow modes; its thermal noise feeds
            # through as the shared white term `feed`.
            pump = 0.5j * g * chi_s * b_i * b_j + 1j * chi_s * force
            u = rng.standard_normal((n_block, 2))
            feed = (u[:, 0] + 1j * u[:, 1]) * feed_scale
            drift_i = half_g[0] * (-b_i + pref[0] * np.conj(b_j) * pump)
            drift_j = half_g[1] * (-b_j + pref[1] * np.conj(b_i) * pump)
            state[:, 0] = b_i + drift_i * dt + noise[:, 0] \
                + half_g[0] * pref[0] * np.conj(b_j) * feed
            state[:, 1] = b_j + drift_j * dt + noise[:, 1] \
                + half_g[1] * pref[1] * np.conj(b_i) * feed
        elif setup.linearize:
            dev = state - bbar[None, :]
            d_i, d_j, d_s = dev[:, 0], dev[:, 1], dev[:, 2]
            drift_i = half_g[0] * (-d_i + pref[0] * (np.conj(d_j) * bbar[2]
                                                     + np.conj(bbar[1]) * d_s)) \
                + rot_mode * d_i
            drift_j = half_g[1] * (-d_j + pref[1] * (np.conj(d_i) * bbar[2]
                                                     + np.conj(bbar[0]) * d_s)) \
                + rot_mode * d_j
            drift_s = half_g[2] * (-d_s + pref[2] * (bbar[0] * d_j
                                                     + bbar[1] * d_i)) \
                + rot_pump * d_s
            state[:, 0] = bbar[0] + d_i + drift_i * dt + noise[:, 0]
            state[:, 1] = bbar[1] + d_j + drift_j * dt + noise[:, 1]
            state[:, 2] = bbar[2] + d_s + drift_s * dt + noise[:, 2]
        else:
            b_s = state[:, 2]
            drift_i = half_g[0] * (-b_i + pref[0] * np.conj(b_j) * b_s) \
                + rot_mode * b_i
            drift_j = half_g[1] * (-b_j + pref[1] * np.conj(b_i) * b_s) \
                + rot_mode * b_j
            drift_s = half_g[2] * (-b_s + pref[2] * b_i * b_j
                                   + 1j * chi[2] * force) + rot_pump * b_s
            state[:, 0] = b_i + drift_i * dt + noise[:, 0]
            state[:, 1] = b_j + drift_j * dt + noise[:, 1]
            state[:, 2] = b_s + drift_s * dt + noise[:, 2]

        if step % 256 == 0 and not np.all(np.abs(state) < guard):
            raise UnstableStepError(
                f"trajectory norm exceeded {guard:.3g} at step {step}; "
                "reduce dt or eliminate the pump")

        if setup.record_phases and step % setup.record_stride == 0:
            phases.append(phase_pair(state))
            rec_times.append((step + 1) * dt)

        if step < setup.burn_steps:
            continue
        if (step - setup.burn_steps) % setup.stat_stride == 0:
            q = quadratures(state)
            acc_qq += q[:, :, None] * q[:, None, :]
            acc_q += q
            acc_modes += state
            n_stat += 1
            if setup.record_series and n_rec_traj > 0 \
                    and (step - setup.burn_steps) % setup.record_stride == 0:
                recorded.append(q[:n_rec_traj].copy())
                rec_times.append((step + 1) * dt)

    out = {
        "block": block_index,
        "second_moment": acc_qq / max(n_stat, 1),
        "mean_q": acc_q / max(n_stat, 1),
        "mean_modes": acc_modes / max(n_stat, 1),
        "n_stat": n_stat,
    }
    if setup.record_series and recorded:
        out["series"] = np.stack(recorded, axis=1)  # (traj, sample, channel)
        out["times"] = np.asarray(rec_times)
    if setup.record_phases and phases:
        out["phases"] = np.stack(phases, axis=1)    # (traj, sample, 2)
        out["times"] = np.asarray(rec_times)
    return out


def _run_blocks(setup: _RunSetup, jobs: int, record_cap: int) -> list[dict]:
    n_traj = setup.plan.n_traj
    blocks = []
    for index in range(0, (n_traj + BLOCK_SIZE - 1) // BLOCK_SIZE):
        n_block = min(BLOCK_SIZE, n_traj - index * BLOCK_SIZE)
        blocks.append((index, n_block))
    if jobs <= 1 or len(blocks) == 1:
        return [_simulate_block(setup, idx, nb, record_cap)
                for idx, nb in blocks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_simulate_block, setup, idx, nb, record_cap)
                   for idx, nb in blocks]
        results = [f.result() for f in futures]
    results.sort(key=lambda r: r["block"])
    return results


def _bootstrap_se(per_traj: np.ndarray, seed: int) -> np.ndarray:
    """Bootstrap standard error of the trajectory-mean of per_traj."""
    n = per_traj.shape[0]
    flat = per_traj.reshape(n, -1)
    rng = np.random.Generator(np.random.Philox(key=[seed, 1 << 32]))
    counts = rng.multinomial(n, np.full(n, 1.0 / n), size=BOOTSTRAP_SAMPLES)
    boot = counts.astype(float) @ flat / n
    return boot.std(axis=0, ddof=1).reshape(per_traj.shape[1:])


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------

def simulate(sys: SystemConfig, drive: DriveConfig, plan: SimPlan, *,
             eliminate_pump: bool | None = None, linearize: bool = False,
             jobs: int = 1, store_series: bool = False) -> EnsembleStats:
    """Ensemble-integrate the slow-flow Langevin equations.

    Returns normalized collective-quadrature statistics with bootstrap
    standard errors.  ``eliminate_pump=None`` chooses the default:
    explicit pump below threshold, eliminated above.  ``linearize`` runs
    the linearized dynamics about the steady state instead (used to
    validate the linearization itself).
    """
    want_series = store_series or plan.estimator == "welch"
    setup = _prepare(sys, drive, plan, eliminate_pump=eliminate_pump,
                     linearize=linearize, record_series=want_series,
                     record_stride=1)
    record_cap = min(plan.n_traj, WELCH_TRAJ_CAP) if want_series else 0
    results = _run_blocks(setup, jobs, record_cap)

    second = np.concatenate([r["second_moment"] for r in results])
    means_q = np.concatenate([r["mean_q"] for r in results])
    mean_modes = np.concatenate([r["mean_modes"] for r in results])

    covariance = second.mean(axis=0)
    covariance_se = _bootstrap_se(second, plan.seed)
    t_measure = (setup.n_steps - setup.burn_steps) * plan.dt

    spectra = None
    series = None
    times = None
    if want_series:
        series = np.concatenate([r["series"] for r in results if "series" in r])
        times = next(r["times"] for r in results if "times" in r)
        if plan.estimator == "welch":
            fs = 2.0 * math.pi / (plan.dt * setup.stat_stride)
            freqs, psd = _signal.welch(
                series, fs=fs, nperseg=plan.welch_segment,
                noverlap=int(plan.welch_overlap * plan.welch_segment),
                detrend="constant", axis=1)
            # one-sided density of a real signal -> two-sided convention
            psd = 0.5 * psd
            psd_mean = psd.mean(axis=0).T
            psd_se = psd.std(axis=0, ddof=1).T / math.sqrt(psd.shape[0])
            spectra = SpectrumEstimate(labels=setup.labels,
                                       frequencies=freqs,
                                       psd=psd_mean, psd_se=psd_se)

    return EnsembleStats(labels=setup.labels, mode_labels=setup.mode_labels,
                         mean_amplitudes=mean_modes.mean(axis=0),
                         covariance=covariance, covariance_se=covariance_se,
                         n_traj=plan.n_traj, dt=plan.dt,
                         t_measure=t_measure, seed=plan.seed,
                         spectra=spectra,
                         series=series if store_series else None,
                         series_times=times if store_series else None)


def phase_diffusion_measure(sys: SystemConfig, drive: DriveConfig,
                            plan: SimPlan, *, jobs: int = 1,
                            record_points: int = 400) -> PhaseDiffusionResult:
    """Measure the diffusion of the signal-idler phase difference.

    Runs the above-threshold ensemble (pump eliminated), tracks the
    phase sum/difference from the locked start, fits the mean-square
    difference growth, and reports it against the spectral prediction
    ``gamma * (x_th/A)^2``.  The phase sum must stay locked (bounded).
    """
    if drive.mu <= 1.0:
        raise BelowThresholdError("phase diffusion is an above-threshold effect")
    gamma_mean = 0.5 * (sys.mode_i.gamma + sys.mode_j.gamma)
    if plan.t_total < 10.0 / gamma_mean:
        raise InsufficientDurationError(
            f"fit window {plan.t_total:.3g} s shorter than 10/gamma = "
            f"{10.0 / gamma_mean:.3g} s")

    stride = max(1, int(round(plan.t_total / plan.dt / record_points)))
    setup = _prepare(sys, drive, plan, eliminate_pump=True, linearize=False,
                     record_phases=True, record_stride=stride)
    results = _run_blocks(setup, jobs, record_cap=0)

    phases = np.concatenate([r["phases"] for r in results])  # (traj, t, 2)
    times = next(r["times"] for r in results if "times" in r)
    dev = phases - phases[:, :1, :]       # spread from the locked start
    sq_sum = dev[:, :, 0] ** 2
    sq_diff = dev[:, :, 1] ** 2
    msd_diff = sq_diff.mean(axis=0)
    msd_sum = sq_sum.mean(axis=0)

    design = np.vstack([times, np.ones_like(times)]).T
    slope, _intercept = np.linalg.lstsq(design, msd_diff, rcond=None)[0]

    # bootstrap the slope over trajectories
    n = sq_diff.shape[0]
    rng = np.random.Generator(np.random.Philox(key=[plan.seed, 1 << 33]))
    counts = rng.multinomial(n, np.full(n, 1.0 / n), size=BOOTSTRAP_SAMPLES)
    boot_msd = counts.astype(float) @ sq_diff / n
    slopes = np.linalg.lstsq(design, boot_msd.T, rcond=None)[0][0]
    slope_se = float(slopes.std(ddof=1))

    state = solve_steady_state(sys, DriveConfig(mu=drive.mu))
    xth = math.sqrt(thermal_variance(sys.mode_i, sys.temperature, sys.k_b))
    ratio = abs(state.a_i) / xth
    predicted = sys.mode_i.gamma / ratio ** 2 \
        if sys.mode_i.gamma == sys.mode_j.gamma else gamma_mean / ratio ** 2

    half = len(times) // 2
    tail_design = np.vstack([times[half:], np.ones_like(times[half:])]).T
    tail_slope = np.linalg.lstsq(tail_design, msd_sum[half:], rcond=None)[0][0]

    return PhaseDiffusionResult(times=times, msd_difference=msd_diff,
                                msd_sum=msd_sum, slope=float(slope),
                                slope_se=slope_se,
                                predicted_slope=float(predicted),
                                sum_tail_slope=float(tail_slope))


def compare(stats: EnsembleStats, reference: CovarianceReport, *,
            z_limit: float = 4.0) -> ComparisonVerdict:
    """z-test every covariance entry of ``stats`` against ``reference``.

    PASS requires every |z| below ``z_limit`` and no systematic bias
    (|mean z| below ``z_limit/sqrt(n)``).  Entries the reference flags
    as divergent are skipped.  Labels must match exactly.
    """
    if tuple(stats.labels) != tuple(reference.labels):
        raise LabelMismatchError(
            f"labels {stats.labels!r} vs reference {reference.labels!r}")
    if stats.covariance.size == 0 or not np.all(np.isfinite(stats.covariance_se)):
        raise LabelMismatchError("empty or degenerate ensemble statistics")

    k = len(stats.labels)
    z = np.full((k, k), np.nan)
    values = []
    for a in range(k):
        for b in range(a, k):
            if reference.divergent[a, b]:
                continue
            se = stats.covariance_se[a, b]
            if not se > 0.0:
                raise LabelMismatchError(
                    f"nonpositive standard error at entry ({a}, {b})")
            score = (stats.covariance[a, b] - reference.sigma[a, b]) / se
            z[a, b] = z[b, a] = score
            values.append(score)
    if not values:
        raise LabelMismatchError("no comparable entries (all divergent)")
    values = np.asarray(values)
    max_abs = float(np.max(np.abs(values)))
    mean = float(np.mean(values))
    bias_limit = z_limit / math.sqrt(len(values))
    passed = max_abs < z_limit and abs(mean) < bias_limit
    notes = (f"max|z| = {max_abs:.2f} (limit {z_limit}), mean z = {mean:.2f} "
             f"(limit {bias_limit:.2f}) over {len(values)} entries")
    return ComparisonVerdict(passed=passed, z=z, max_abs_z=max_abs,
                             mean_z=mean, n_compared=len(values), notes=notes)


def recommended_plan(sys: SystemConfig, drive: DriveConfig, n_traj: int,
                     seed: int, *, eliminate_pump: bool | None = None,
                     measure_factor: float = 30.0,
                     dt_factor: float = 100.0,
                     estimator: str = "variance",
                     welch_segment: int | None = None) -> SimPlan:
    """Construct a plan sized from the actual relaxation rates.

    ``dt`` is ``(2/gamma_max)/dt_factor`` over the simulated modes,
    burn-in covers just over five slowest decay times, and the
    measurement window is ``measure_factor`` decay times.
    """
    eliminate = drive.mu > 1.0 if eliminate_pump is None else eliminate_pump
    modes = [sys.mode_i, sys.mode_j] + ([] if eliminate else [sys.mode_s])
    gamma_max = max(m.gamma for m in modes)
    dt = (2.0 / gamma_max) / dt_factor
    model = _reference_model(sys, drive, eliminate)
    slowest = float(np.min(_stable_rates(model)))
    burn_time = 5.2 / slowest
    measure_time = measure_factor / slowest
    t_total = burn_time + measure_time
    return SimPlan(dt=dt, t_total=t_total, n_traj=n_traj, seed=seed,
                   burn_in=burn_time / t_total, estimator=estimator,
                   welch_segment=welch_segment)

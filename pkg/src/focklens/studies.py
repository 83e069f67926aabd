"""Figure-level experiment drivers.

Each driver is a pure function from parameters to plain data (rows and
dataclasses); the CLI adds file output and manifests on top.  Recipes keep
the defaults recorded in the module design notes: drive strength 1, focal
center at the initial mean photon number, detuning active only during Kerr
stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import cdf_rise_width
from .errors import DomainError
from .lens import (
    ContinuousEvolution,
    LensParams,
    ProtocolSchedule,
    WindowPolicy,
    focal_drive_time,
    lens_group_schedule,
    run_lens_group,
    sweep_focus_map,
    time_resolved_run,
)
from .opensystem import EnsembleConfig, ensemble_average, timed_lens_schedule
from .optimize import (
    FitResult,
    OptimizationConfig,
    fit_power_law,
    optimize_lens_group,
    phi0_scaling_guess,
)
from .oracles import poisson_pmf
from .propagators import HamiltonianSpec


@dataclass(frozen=True)
class FocusRun:
    """Time-resolved single-lens run (the Fig. 1b/1c experiment)."""

    times: tuple
    snapshots: tuple          # PhotonStatistics per time
    peak_values: tuple
    peak_ns: tuple
    cdf_widths: tuple
    focus_time: float
    focus_peak: float


def kerr_drive_schedule(alpha: float, phi0: float, kerr_time: float,
                        eps_p: float, total_time: float,
                        center: float | None = None) -> ProtocolSchedule:
    """Kerr stage then resonant drive, the time-resolved lens realization.

    The Kerr stage runs chi = phi0/kerr_time with the detuning that parks
    the chirp vertex at the focal center (the initial mean photon number by
    default); the drive stage is resonant (no detuning, no Kerr).
    """
    n0 = float(center) if center is not None else abs(alpha) ** 2
    if total_time < kerr_time:
        raise DomainError("total_time must cover the Kerr stage")
    chi = phi0 / kerr_time if kerr_time > 0 else 0.0
    stages = []
    if kerr_time > 0:
        stages.append(ContinuousEvolution(
            HamiltonianSpec(drive_strength=0.0, detuning=chi * (2 * n0 - 1),
                            kerr=chi),
            kerr_time,
        ))
    if total_time > kerr_time:
        stages.append(ContinuousEvolution(
            HamiltonianSpec(drive_strength=eps_p), total_time - kerr_time))
    return ProtocolSchedule(alpha=alpha, stages=tuple(stages),
                            target_n=int(round(n0)))


def focus_run(alpha: float = 100.0, phi0: float = 2.45e-3,
              kerr_time: float = 0.5, eps_p: float = 1.0,
              total_time: float = 1.9, snapshots: int = 36,
              window_sigma: float = 10.0) -> FocusRun:
    """Evolution of P(n, t) through one Kerr stage plus drive."""
    schedule = kerr_drive_schedule(alpha, phi0, kerr_time, eps_p, total_time)
    times = np.linspace(0.0, total_time, snapshots)
    policy = WindowPolicy(sigma_multiple=window_sigma)
    res = time_resolved_run(schedule, times, policy)
    peaks = tuple(s.peak_value for s in res.snapshots)
    peak_ns = tuple(s.peak_n for s in res.snapshots)
    widths = tuple(cdf_rise_width(s) for s in res.snapshots)
    i_fo = int(np.argmax(peaks))
    return FocusRun(times=res.times, snapshots=res.snapshots,
                    peak_values=peaks, peak_ns=peak_ns, cdf_widths=widths,
                    focus_time=float(times[i_fo]), focus_peak=peaks[i_fo])


@dataclass(frozen=True)
class RidgeResult:
    phi0_grid: tuple
    t_grid: tuple
    peak: np.ndarray
    t_star: tuple
    t_focal_law: tuple


def focus_ridge(n0: float = 1.0e4, eps_p: float = 1.0,
                phi_m: float = 2.45e-3, phi_frac_min: float = 0.2,
                phi_frac_max: float = 1.0, phi_points: int = 7,
                t_min: float = 0.2, t_max: float = 6.0, t_points: int = 80,
                workers: int = 1) -> RidgeResult:
    """Fig. 1d sweep: peak probability over (phi0, drive time) plus the ridge."""
    phis = phi_m * np.linspace(phi_frac_min, phi_frac_max, phi_points)
    ts = np.linspace(t_min, t_max, t_points)
    fm = sweep_focus_map(phis, ts, n0=n0, eps_p=eps_p, workers=workers)
    law = tuple(focal_drive_time(n0, eps_p, p) for p in fm.phi0_grid)
    return RidgeResult(phi0_grid=fm.phi0_grid, t_grid=fm.t_grid, peak=fm.peak,
                       t_star=fm.t_star, t_focal_law=law)


@dataclass(frozen=True)
class ScalingStudy:
    """Optimized fidelities over (photon number, lens count) plus fits."""

    n_list: tuple
    lens_counts: tuple
    fidelities: dict          # (lens_count, n) -> fidelity
    results: dict             # (lens_count, n) -> OptimizationResult
    fits: dict                # lens_count -> FitResult


def scaling_study(n_list: Sequence[int] = (1000, 2500, 10000, 40000, 100000),
                  lens_counts: Sequence[int] = (0, 1, 2, 3),
                  restarts: int = 4, budget: int = 6000,
                  phi_bound: float = 1.2, seed: int = 1234,
                  fit_min_n: float = 0.0,
                  workers: int = 1) -> ScalingStudy:
    """Optimize the lens group on the (N, L) grid and fit F = x N^-y per L.

    For each N the lens counts run in ascending order and each optimization
    warm-starts from the previous count's solution, which keeps the best
    fidelity monotone in L.
    """
    n_list = tuple(int(n) for n in n_list)
    lens_counts = tuple(sorted(int(c) for c in lens_counts))
    fidelities: dict = {}
    results: dict = {}
    for n in n_list:
        warm = None
        for lens_count in lens_counts:
            cfg = OptimizationConfig(target_n=n, lens_count=lens_count,
                                     restarts=restarts, budget=budget,
                                     phi_bound=phi_bound, seed=seed,
                                     workers=workers)
            res = optimize_lens_group(cfg, warm_start=warm)
            results[(lens_count, n)] = res
            fidelities[(lens_count, n)] = res.fidelity
            if lens_count >= 1:
                warm = res.lenses
    fits = {}
    for lens_count in lens_counts:
        pts = [(n, fidelities[(lens_count, n)]) for n in n_list
               if n >= fit_min_n]
        if len(pts) >= 2:
            fits[lens_count] = fit_power_law(pts)
    return ScalingStudy(n_list=n_list, lens_counts=lens_counts,
                        fidelities=fidelities, results=results, fits=fits)


@dataclass(frozen=True)
class LensTimeScaling:
    """Optimal single-lens strength phi0 versus photon number (Fig. 3c)."""

    n_list: tuple
    phi0_opt: tuple
    fidelities: tuple
    lenses: tuple
    fit: FitResult | None


def normalized_lens(lens: LensParams) -> LensParams:
    """Flip a defocusing solution to its focusing mirror image.

    (phi0, beta) and (-phi0, conj(beta)) give identical photon statistics
    (global complex conjugation), so the positive-phi0 representative is
    canonical.
    """
    if lens.phi0 >= 0:
        return lens
    return LensParams(phi0=-lens.phi0, center=lens.center,
                      beta=lens.beta.conjugate(), drive=lens.drive)


def focal_law_fidelity(target_n: int, phi0: float,
                       eps_p: float = 1.0) -> float:
    """Single-lens fidelity with the displacement tied to the focal law.

    The lens has center target_n and beta = -i eps_p tau_drive(phi0), so the
    lens strength is the only free parameter; this is the one-dimensional
    family whose optimum defines the normalized lens duration.
    """
    tau = focal_drive_time(target_n, eps_p, phi0)
    lens = LensParams(phi0=phi0, center=float(target_n),
                      beta=-1j * eps_p * tau)
    schedule = lens_group_schedule(math.sqrt(target_n), [lens], target_n)
    return run_lens_group(schedule).fidelity


def lens_time_scaling(n_list: Sequence[int] = (2500, 10000, 40000, 100000),
                      eps_p: float = 1.0, fit_min_n: float = 2500.0,
                      xtol: float = 1e-3, **_unused) -> LensTimeScaling:
    """Optimal single-lens phi0 per target, fitted to phi0 = x n^-y.

    phi0 is optimized along the focal-law family (displacement slaved to
    phi0), which makes the argmax deterministic and well conditioned; the
    joint (phi0, beta) optimum trades the two off along a nearly flat valley
    and its argmax is not reproducible at this tolerance.
    """
    from scipy.optimize import minimize_scalar

    n_list = tuple(int(n) for n in n_list)
    phi_opt = []
    fids = []
    lenses = []
    for n in n_list:
        guess = phi0_scaling_guess(n)

        def neg_f(phi, n=n):
            return -focal_law_fidelity(n, phi, eps_p)

        res = minimize_scalar(neg_f, bounds=(0.3 * guess, 2.5 * guess),
                              method="bounded",
                              options=dict(xatol=xtol * guess))
        phi = float(res.x)
        phi_opt.append(phi)
        fids.append(-float(res.fun))
        tau = focal_drive_time(n, eps_p, phi)
        lenses.append(LensParams(phi0=phi, center=float(n),
                                 beta=-1j * eps_p * tau))
    pts = [(n, p) for n, p in zip(n_list, phi_opt) if n >= fit_min_n]
    fit = fit_power_law(pts) if len(pts) >= 2 else None
    return LensTimeScaling(n_list=n_list, phi0_opt=tuple(phi_opt),
                           fidelities=tuple(fids), lenses=tuple(lenses),
                           fit=fit)


@dataclass(frozen=True)
class LossSweep:
    """Ensemble fidelity versus the Kerr-to-loss ratio (Fig. 3d)."""

    target_n: int
    chi: float
    ratios: tuple
    fidelities: tuple
    stderrs: tuple
    mean_jumps: tuple
    closed_fidelity: float
    coherent_baseline: float
    lens: LensParams


def loss_ratio_sweep(target_n: int = 2500,
                     ratios: Sequence[float] = (1.0, 3.0, 10.0, 30.0, 100.0,
                                                200.0),
                     n_traj: int = 200, tau_kerr: float = 0.5,
                     eps_p: float = 1.0, restarts: int = 4,
                     budget: int = 6000, phi_bound: float = 1.2,
                     seed: int = 1234, workers: int = 1,
                     lens: LensParams | None = None) -> LossSweep:
    """Single-lens fidelity under loss for a grid of chi/kappa ratios.

    The Kerr coefficient is fixed by the stated Kerr stage duration,
    chi = phi0_opt / tau_kerr, and kappa = chi / ratio per grid point; the
    drive strength stays at eps_p for every ratio.

    The mean photon number decays deterministically by the factor
    exp(-kappa t) regardless of jumps (a coherent envelope is a fixed point
    of the jump map), so each lossy run pre-compensates: the initial
    amplitude is boosted so the packet arrives at the target after decaying,
    and the chirp center rides the packet's mid-Kerr-stage mean.
    """
    if lens is None:
        cfg = OptimizationConfig(target_n=target_n, lens_count=1,
                                 restarts=restarts, budget=budget,
                                 phi_bound=phi_bound, seed=seed,
                                 workers=workers)
        lens = normalized_lens(optimize_lens_group(cfg).lenses[0])
    if lens.phi0 <= 0:
        raise DomainError("loss sweep needs a focusing lens (phi0 > 0)")
    chi = lens.phi0 / tau_kerr
    alpha = math.sqrt(target_n)
    t_kerr = lens.phi0 / chi
    t_drive = abs(lens.beta) / eps_p
    schedule = timed_lens_schedule(alpha, [lens], target_n, chi, eps_p)
    closed = run_lens_group(schedule).fidelity
    fids, ses, jumps = [], [], []
    for ratio in ratios:
        kappa = chi / ratio
        boost = math.exp(kappa * (t_kerr + t_drive))
        alpha_eff = math.sqrt(target_n * boost)
        center_eff = ((lens.center - target_n)
                      + target_n * math.exp(kappa * (t_drive + t_kerr / 2)))
        lens_eff = LensParams(phi0=lens.phi0, center=center_eff,
                              beta=lens.beta)
        sched_eff = timed_lens_schedule(alpha_eff, [lens_eff], target_n,
                                        chi, eps_p)
        ens = ensemble_average(EnsembleConfig(
            kappa=kappa, n_trajectories=n_traj, base_seed=seed,
            schedule=sched_eff, workers=workers))
        fids.append(ens.mean_fidelity)
        ses.append(ens.stderr)
        hist = np.array(ens.jump_histogram, dtype=float)
        jumps.append(float(np.dot(np.arange(hist.size), hist) / hist.sum()))
    return LossSweep(target_n=target_n, chi=chi, ratios=tuple(ratios),
                     fidelities=tuple(fids), stderrs=tuple(ses),
                     mean_jumps=tuple(jumps), closed_fidelity=closed,
                     coherent_baseline=poisson_pmf(float(target_n), target_n),
                     lens=lens)

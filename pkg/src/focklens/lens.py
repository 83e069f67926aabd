"""Lens schedules: compose phase/displacement/evolution stages, the focal
law, time-resolved runs, and the focus-map sweep.

Protocol convention.  A lens of strength phi0 > 0 is the Kerr-imprinted
chirp exp(+i phi0 (n - n0)^2) followed by a displacement; since
``apply_quadratic_phase`` multiplies by exp(-i * phase), the phase stage of
a lens carries ``QuadraticPhase(phi0=-strength)``.  With that chirp the
focusing displacement points along -i (a resonant drive of duration tau is
exactly D(-i * eps_p * tau)), and the focal drive time obeys
tau = 1 / (4 sqrt(n0) eps_p phi0).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import (
    DEFAULT_TAIL_TOL,
    FockWindow,
    PhotonStatistics,
    StateVector,
    coherent_state,
    fidelity,
    make_window,
    photon_statistics,
)
from .errors import DomainError, TailLeak
from .parallel import parallel_map
from .propagators import (
    HamiltonianSpec,
    QuadraticPhase,
    apply_quadratic_phase,
    displace,
    evolve_hamiltonian,
)


@dataclass(frozen=True)
class Displacement:
    """Instantaneous displacement stage D(beta)."""

    beta: complex


@dataclass(frozen=True)
class ContinuousEvolution:
    """Evolution under a fixed Hamiltonian for a given duration."""

    hamiltonian: HamiltonianSpec
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise DomainError(f"duration must be >= 0, got {self.duration}")


Stage = Union[QuadraticPhase, Displacement, ContinuousEvolution]


@dataclass(frozen=True)
class DriveRealization:
    """Continuous realization of a lens displacement: strength, detuning, time."""

    drive_strength: float
    detuning: float
    duration: float


@dataclass(frozen=True)
class LensParams:
    """One lens: chirp strength, phase center, and displacement."""

    phi0: float
    center: float
    beta: complex
    drive: DriveRealization | None = None

    def __post_init__(self):
        if not (math.isfinite(self.phi0) and math.isfinite(self.center)):
            raise DomainError("lens phi0 and center must be finite")
        if not (math.isfinite(self.beta.real) and math.isfinite(self.beta.imag)):
            raise DomainError("lens beta must be finite")
        if self.drive is not None:
            expect = self.drive.drive_strength * self.drive.duration
            if abs(abs(self.beta) - expect) > 1e-9 * max(1.0, expect):
                raise DomainError(
                    "drive realization inconsistent: |beta|="
                    f"{abs(self.beta):.12g} != eps_p*tau={expect:.12g}"
                )


def lens_stages(lens: LensParams) -> list[Stage]:
    """Expand a lens into its schedule stages.

    The chirp exp(+i phi0 (n-n0)^2) enters as QuadraticPhase(-phi0); the
    displacement is exact unless a continuous drive realization is attached.
    """
    stages: list[Stage] = [QuadraticPhase(phi0=-lens.phi0, center=lens.center)]
    if lens.drive is not None:
        theta = -cmath.phase(1j * lens.beta) if lens.beta != 0 else 0.0
        stages.append(ContinuousEvolution(
            HamiltonianSpec(drive_strength=lens.drive.drive_strength,
                            drive_phase=theta,
                            detuning=lens.drive.detuning),
            lens.drive.duration,
        ))
    elif lens.beta != 0:
        stages.append(Displacement(lens.beta))
    return stages


@dataclass(frozen=True)
class ProtocolSchedule:
    """Initial coherent amplitude, ordered stages, and the target Fock number."""

    alpha: complex
    stages: tuple
    target_n: int

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if len(self.stages) == 0:
            raise DomainError("schedule requires a non-empty stage list")
        if self.target_n < 0:
            raise DomainError(f"target_n must be >= 0, got {self.target_n}")

    def total_duration(self) -> float:
        return sum(s.duration for s in self.stages
                   if isinstance(s, ContinuousEvolution))


def lens_group_schedule(alpha: complex, lenses: Sequence[LensParams],
                        target_n: int) -> ProtocolSchedule:
    stages: list[Stage] = []
    for lens in lenses:
        stages.extend(lens_stages(lens))
    return ProtocolSchedule(alpha=alpha, stages=tuple(stages), target_n=target_n)


@dataclass(frozen=True)
class WindowPolicy:
    """How the photon window is sized and grown during a run."""

    sigma_multiple: float = 10.0
    min_half_width: int = 64
    tail_tol: float = DEFAULT_TAIL_TOL
    auto_extend: bool = True
    max_extensions: int = 16

    def initial_window(self, mean: float, target_n: int):
        center = int(round(mean))
        hw = max(int(math.ceil(self.sigma_multiple * math.sqrt(max(center, 1)))),
                 self.min_half_width,
                 abs(target_n - center) + self.min_half_width)
        return make_window(center, hw)


def focal_drive_time(n0: float, eps_p: float, phi0: float) -> float:
    """Drive duration focusing a lens of strength phi0: 1/(4 sqrt(n0) eps_p phi0)."""
    if n0 <= 0 or eps_p <= 0 or phi0 <= 0:
        raise DomainError(
            f"focal_drive_time requires positive inputs, got "
            f"n0={n0}, eps_p={eps_p}, phi0={phi0}"
        )
    return 1.0 / (4.0 * math.sqrt(n0) * eps_p * phi0)


def apply_stage(state: StateVector, stage: Stage,
                tail_tol: float = DEFAULT_TAIL_TOL,
                evolve_tol: float = 1e-9) -> StateVector:
    if isinstance(stage, QuadraticPhase):
        return apply_quadratic_phase(state, stage)
    if isinstance(stage, Displacement):
        return displace(state, stage.beta, tail_tol=tail_tol)
    if isinstance(stage, ContinuousEvolution):
        return evolve_hamiltonian(state, stage.hamiltonian, stage.duration,
                                  tol=evolve_tol, tail_tol=tail_tol)
    raise DomainError(f"unknown stage type {type(stage).__name__}")


def _force_extend(state: StateVector) -> StateVector:
    """Grow both window edges (lower edge clamped at vacuum)."""
    grow = max(state.window.half_width // 4, 64)
    w = state.window
    n_min = max(0, w.n_min - grow)
    n_max = w.n_max + grow
    amps = np.zeros(n_max - n_min + 1, dtype=np.complex128)
    off = w.n_min - n_min
    amps[off:off + w.dimension] = state.amplitudes
    return StateVector(FockWindow(n_min, n_max), amps)


def _apply_with_policy(state: StateVector, stage: Stage,
                       policy: WindowPolicy) -> StateVector:
    """Apply a stage, widening the window and retrying on TailLeak.

    The retry re-applies the stage to the pre-stage state on the wider
    window, so no probability is ever silently truncated.
    """
    for _ in range(policy.max_extensions + 1):
        try:
            return apply_stage(state, stage, tail_tol=policy.tail_tol)
        except TailLeak:
            if not policy.auto_extend:
                raise
            state = _force_extend(state)
    raise TailLeak(
        f"stage {type(stage).__name__}: window still leaking after "
        f"{policy.max_extensions} extensions"
    )


@dataclass(frozen=True)
class LensGroupResult:
    state: StateVector
    fidelity: float
    statistics: PhotonStatistics


def run_lens_group(schedule: ProtocolSchedule,
                   policy: WindowPolicy | None = None) -> LensGroupResult:
    """Apply the schedule stages in order from the coherent initial state."""
    policy = policy or WindowPolicy()
    window = policy.initial_window(abs(schedule.alpha) ** 2, schedule.target_n)
    state = coherent_state(schedule.alpha, window)
    for stage in schedule.stages:
        state = _apply_with_policy(state, stage, policy)
    return LensGroupResult(
        state=state,
        fidelity=fidelity(state, schedule.target_n),
        statistics=photon_statistics(state),
    )


@dataclass(frozen=True)
class TimeResolvedResult:
    times: tuple
    snapshots: tuple  # PhotonStatistics per time


def time_resolved_run(schedule: ProtocolSchedule,
                      snapshot_times: Sequence[float],
                      policy: WindowPolicy | None = None) -> TimeResolvedResult:
    """Snapshots of the photon statistics at the requested protocol times.

    Snapshot times must be ascending and within the total schedule duration;
    instantaneous stages are applied at their boundary instant, after any
    snapshot requested exactly there.
    """
    policy = policy or WindowPolicy()
    times = [float(t) for t in snapshot_times]
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        raise DomainError("snapshot times must be strictly ascending")
    total = schedule.total_duration()
    if times and (times[0] < 0 or times[-1] > total + 1e-12):
        raise DomainError(
            f"snapshot times must lie within [0, {total:g}]"
        )
    window = policy.initial_window(abs(schedule.alpha) ** 2, schedule.target_n)
    state = coherent_state(schedule.alpha, window)
    snaps: list[PhotonStatistics] = []
    pending = list(times)
    elapsed = 0.0

    def emit_due(upto: float):
        nonlocal pending
        while pending and pending[0] <= upto + 1e-12:
            snaps.append(photon_statistics(state))
            pending.pop(0)

    emit_due(elapsed)
    for stage in schedule.stages:
        if isinstance(stage, ContinuousEvolution):
            remaining = stage.duration
            while pending and pending[0] < elapsed + remaining - 1e-12:
                dt = pending[0] - elapsed
                if dt > 1e-15:
                    seg = ContinuousEvolution(stage.hamiltonian, dt)
                    state = _apply_with_policy(state, seg, policy)
                remaining -= dt
                elapsed = pending[0]
                snaps.append(photon_statistics(state))
                pending.pop(0)
            if remaining > 1e-15:
                seg = ContinuousEvolution(stage.hamiltonian, remaining)
                state = _apply_with_policy(state, seg, policy)
                elapsed += remaining
        else:
            emit_due(elapsed)
            state = _apply_with_policy(state, stage, policy)
        emit_due(elapsed)
    emit_due(math.inf)
    return TimeResolvedResult(times=tuple(times), snapshots=tuple(snaps))


@dataclass(frozen=True)
class FocusMap:
    phi0_grid: tuple
    t_grid: tuple
    peak: np.ndarray          # shape (len(phi0_grid), len(t_grid))
    t_star: tuple             # argmax drive time per phi0


def _focus_column(args):
    phi0, t_grid, n0, eps_p, alpha, policy = args
    window = policy.initial_window(abs(alpha) ** 2, int(round(n0)))
    state = coherent_state(alpha, window)
    state = apply_quadratic_phase(state, QuadraticPhase(phi0=-phi0, center=n0))
    drive = HamiltonianSpec(drive_strength=eps_p)
    peaks = np.empty(len(t_grid))
    prev_t = 0.0
    for i, t in enumerate(t_grid):
        dt = t - prev_t
        if dt > 0:
            state = _apply_with_policy(
                state, ContinuousEvolution(drive, dt), policy)
            prev_t = t
        peaks[i] = photon_statistics(state).peak_value
    return peaks


def sweep_focus_map(phi0_grid: Sequence[float], t_grid: Sequence[float],
                    n0: float, eps_p: float = 1.0,
                    alpha: complex | None = None,
                    policy: WindowPolicy | None = None,
                    workers: int = 1) -> FocusMap:
    """Single-lens peak Fock probability over a (phi0, drive time) grid.

    Each phi0 column is one propagation with snapshots at the drive times;
    columns evaluate independently (optionally in parallel) and are returned
    in grid order.
    """
    phi0_grid = [float(p) for p in phi0_grid]
    t_grid = [float(t) for t in t_grid]
    if not phi0_grid or not t_grid:
        raise DomainError("grids must be non-empty")
    if any(p <= 0 for p in phi0_grid):
        raise DomainError("phi0 grid must be positive")
    if any(t < 0 for t in t_grid) or any(
            t1 <= t0 for t0, t1 in zip(t_grid, t_grid[1:])):
        raise DomainError("t grid must be ascending and non-negative")
    policy = policy or WindowPolicy()
    if alpha is None:
        alpha = math.sqrt(n0)
    jobs = [(p, t_grid, n0, eps_p, alpha, policy) for p in phi0_grid]
    rows = parallel_map(_focus_column, jobs, workers=workers)
    peak = np.vstack(rows)
    t_star = tuple(t_grid[int(np.argmax(row))] for row in peak)
    return FocusMap(phi0_grid=tuple(phi0_grid), t_grid=tuple(t_grid),
                    peak=peak, t_star=t_star)

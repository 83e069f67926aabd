"""Loss robustness: quantum-trajectory unraveling of single-photon loss
during a timed protocol, plus a small dense master-equation oracle.

The unraveling is the standard norm-threshold scheme: between jumps the
state follows the non-Hermitian drift exp((-iH - kappa/2 * n) t); when the
squared norm falls to a uniform random threshold, the lowering operator is
applied and the state renormalized.  Jump times are located by bisection of
the norm condition.  Stages whose Hamiltonian is diagonal (the Kerr phase
stages) evolve in closed form, so only drive stages are stepped.

Open-system schedules must carry explicit durations: every stage is a
ContinuousEvolution.  ``timed_lens_schedule`` converts lens parameters to
that form under the loss clock tau_Kerr = phi0/chi, tau_drive = |beta|/eps_p.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .core import FockWindow, StateVector, coherent_state, fidelity
from .errors import DomainError, JumpOverflow, NoConvergence
from .lens import (
    ContinuousEvolution,
    LensParams,
    ProtocolSchedule,
    WindowPolicy,
)
from .parallel import parallel_map
from .propagators import hamiltonian_arrays, HamiltonianSpec

_TIME_TOL = 1e-9


def timed_lens_schedule(alpha: complex, lenses: Sequence[LensParams],
                        target_n: int, chi: float,
                        eps_p: float = 1.0) -> ProtocolSchedule:
    """Lens group as continuous stages with physical durations.

    The phase stage of a lens of strength phi0 runs the Kerr Hamiltonian
    (with the detuning that centers the chirp) for tau_Kerr = phi0/chi; the
    displacement beta runs the resonant drive for tau_drive = |beta|/eps_p
    with the drive phase chosen so exp(-i tau H_drive) = D(beta).
    """
    if chi <= 0 or eps_p <= 0:
        raise DomainError("chi and eps_p must be > 0")
    stages = []
    for lens in lenses:
        if lens.phi0 <= 0:
            raise DomainError(
                "timed schedules require phi0 > 0 (Kerr strength is positive); "
                f"got {lens.phi0}"
            )
        detuning = chi * (2.0 * lens.center - 1.0)
        stages.append(ContinuousEvolution(
            HamiltonianSpec(drive_strength=0.0, detuning=detuning, kerr=chi),
            lens.phi0 / chi,
        ))
        if lens.beta != 0:
            theta = -cmath.phase(1j * lens.beta)
            stages.append(ContinuousEvolution(
                HamiltonianSpec(drive_strength=eps_p, drive_phase=theta),
                abs(lens.beta) / eps_p,
            ))
    return ProtocolSchedule(alpha=alpha, stages=tuple(stages), target_n=target_n)


@dataclass(frozen=True)
class EnsembleConfig:
    """Trajectory ensemble: loss rate, counts, seeds, timed schedule."""

    kappa: float
    n_trajectories: int
    base_seed: int
    schedule: ProtocolSchedule
    snapshot_times: tuple | None = None
    jump_cap_factor: float = 10.0
    workers: int = 1

    def __post_init__(self):
        if self.kappa < 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa}")
        if self.n_trajectories < 1:
            raise DomainError("n_trajectories must be >= 1")
        for stage in self.schedule.stages:
            if not isinstance(stage, ContinuousEvolution):
                raise DomainError(
                    "open-system schedules need explicit stage durations "
                    "(ContinuousEvolution stages only)"
                )


@dataclass(frozen=True)
class EnsembleResult:
    mean_fidelity: float
    stderr: float
    times: tuple
    mean_photon: tuple
    jump_histogram: tuple
    fidelities: tuple


@dataclass(frozen=True)
class TrajectoryResult:
    state: StateVector
    jump_times: tuple
    n_expect: tuple  # <n> at the requested snapshot times


def _mean_n(amps, ns):
    p = np.abs(amps) ** 2
    return float(np.dot(ns, p) / p.sum())


def _apply_lowering(amps, window):
    out = np.zeros_like(amps)
    roots = np.sqrt(window.ns()[1:])
    out[:-1] = roots * amps[1:]
    nrm = np.linalg.norm(out)
    if nrm == 0.0:
        raise DomainError("lowering operator annihilated the state")
    return out / nrm


class _DiagStage:
    """Closed-form drift for a diagonal Hamiltonian under loss."""

    max_step = math.inf

    def __init__(self, diag, ns, kappa):
        self.rate = kappa * ns  # decay rate per site
        self.freq = diag.real

    def advance(self, amps, dt):
        return amps * np.exp((-1j * self.freq - 0.5 * self.rate) * dt)


class _DriveStage:
    """Taylor-stepped drift for a tridiagonal Hamiltonian under loss."""

    def __init__(self, diag, lo, up, ns, kappa):
        self.diag = -1j * diag - 0.5 * kappa * ns
        self.lo = -1j * lo
        self.up = -1j * up
        row = np.abs(self.diag)
        if lo.size:
            row[1:] += np.abs(self.lo)
            row[:-1] += np.abs(self.up)
        self.norm1 = float(np.max(row)) if row.size else 0.0
        self.max_step = 4.0 / self.norm1 if self.norm1 > 0 else math.inf

    def advance(self, amps, dt):
        if dt <= 0:
            return amps
        nsub = max(1, int(math.ceil(self.norm1 * dt / 4.0)))
        out, status = kernels.taylor_apply(self.diag, self.lo, self.up,
                                           amps, dt, nsub, 64)
        if status != 0:
            raise NoConvergence("taylor propagation failed to converge")
        return out


def _bisect_jump(drift, amps, dt_hi, r, time_tol):
    """Largest dt in (0, dt_hi] where the squared norm still exceeds r."""
    lo, hi = 0.0, dt_hi
    while hi - lo > time_tol:
        mid = 0.5 * (lo + hi)
        cand = drift.advance(amps, mid)
        if float(np.vdot(cand, cand).real) > r:
            lo = mid
        else:
            hi = mid
    return hi


def trajectory_evolve(initial: StateVector, schedule: ProtocolSchedule,
                      kappa: float, seed: int,
                      snapshot_times: Sequence[float] = (),
                      time_tol: float = _TIME_TOL,
                      jump_cap: float | None = None) -> TrajectoryResult:
    """One stochastic unraveling of the lossy protocol.

    Deterministic given the seed.  Raises JumpOverflow when the jump count
    exceeds the sanity bound (default 10 * kappa * target_n * duration).
    """
    rng = np.random.default_rng(seed)
    window = initial.window
    ns = window.ns()
    amps = initial.amplitudes.copy()
    total = schedule.total_duration()
    if jump_cap is None:
        jump_cap = max(10.0 * kappa * schedule.target_n * total, 10.0)
    pending = sorted(float(t) for t in snapshot_times)
    if pending and (pending[0] < 0 or pending[-1] > total + 1e-9):
        raise DomainError("snapshot times outside the schedule duration")
    n_expect: list[float] = []
    jumps: list[float] = []
    r = rng.random()
    elapsed = 0.0

    def emit_due(t_now):
        while pending and pending[0] <= t_now + 1e-12:
            n_expect.append(_mean_n(amps, ns))
            pending.pop(0)

    emit_due(0.0)
    for stage in schedule.stages:
        diag, lo, up = hamiltonian_arrays(stage.hamiltonian, window)
        if lo.size == 0 or not np.any(lo):
            drift = _DiagStage(diag, ns, kappa)
        else:
            drift = _DriveStage(diag, lo, up, ns, kappa)
        stage_end = elapsed + stage.duration
        while elapsed < stage_end - 1e-15:
            target = stage_end
            if pending:
                target = min(target, max(pending[0], elapsed))
            dt = min(target - elapsed, drift.max_step)
            candidate = drift.advance(amps, dt)
            nrm2 = float(np.vdot(candidate, candidate).real)
            if kappa > 0 and nrm2 < r:
                dt_j = _bisect_jump(drift, amps, dt, r, time_tol)
                amps = drift.advance(amps, dt_j)
                amps = _apply_lowering(amps, window)
                elapsed += dt_j
                jumps.append(elapsed)
                if len(jumps) > jump_cap:
                    raise JumpOverflow(
                        f"{len(jumps)} jumps exceed the bound {jump_cap:g}"
                    )
                r = rng.random()
                continue
            amps = candidate
            elapsed += dt
            emit_due(elapsed)
        elapsed = stage_end
        emit_due(elapsed)
    emit_due(total + 1.0)
    nrm = np.linalg.norm(amps)
    state = StateVector(window, amps / nrm)
    return TrajectoryResult(state=state, jump_times=tuple(jumps),
                            n_expect=tuple(n_expect))


def _default_snapshot_times(schedule: ProtocolSchedule) -> tuple:
    times = [0.0]
    t = 0.0
    for stage in schedule.stages:
        t += stage.duration
        times.append(t)
    return tuple(times)


def _trajectory_job(args):
    (schedule, kappa, seed, snapshot_times, policy) = args
    window = policy.initial_window(abs(schedule.alpha) ** 2, schedule.target_n)
    initial = coherent_state(schedule.alpha, window)
    res = trajectory_evolve(initial, schedule, kappa, seed,
                            snapshot_times=snapshot_times)
    return (fidelity(res.state, schedule.target_n), len(res.jump_times),
            res.n_expect)


def ensemble_average(config: EnsembleConfig,
                     policy: WindowPolicy | None = None) -> EnsembleResult:
    """Trajectory-averaged fidelity; trajectory i uses seed base_seed + i.

    The per-trajectory results are reduced in index order, so the outcome is
    independent of the worker count.
    """
    policy = policy or WindowPolicy()
    times = (config.snapshot_times if config.snapshot_times is not None
             else _default_snapshot_times(config.schedule))
    jobs = [(config.schedule, config.kappa, config.base_seed + i, times, policy)
            for i in range(config.n_trajectories)]
    outcomes = parallel_map(_trajectory_job, jobs, workers=config.workers)
    fids = np.array([o[0] for o in outcomes])
    jump_counts = np.array([o[1] for o in outcomes], dtype=int)
    n_series = np.array([o[2] for o in outcomes])
    mean_f = float(np.mean(fids))
    stderr = float(np.std(fids, ddof=1) / math.sqrt(len(fids))) \
        if len(fids) > 1 else 0.0
    return EnsembleResult(
        mean_fidelity=mean_f,
        stderr=stderr,
        times=tuple(times),
        mean_photon=tuple(np.mean(n_series, axis=0)) if n_series.size else (),
        jump_histogram=tuple(np.bincount(jump_counts)),
        fidelities=tuple(fids),
    )


@dataclass(frozen=True)
class OracleResult:
    fidelity: float
    mean_photon: float
    trace_error: float
    min_eigenvalue: float


def dense_lindblad_oracle(dimension: int, schedule: ProtocolSchedule,
                          kappa: float, tol: float = 1e-9,
                          initial: StateVector | None = None) -> OracleResult:
    """Direct density-matrix integration of the loss master equation.

    Small windows only: RK4 on rho' = -i[H, rho] + kappa (a rho a^dag
    - {n, rho}/2), step-halved until the final rho changes by less than tol
    in Frobenius norm.  Verifies trace preservation (1e-8) and positive
    semidefiniteness (eigenvalues >= -1e-8) of the result.
    """
    if dimension < 2 or dimension > 64:
        raise DomainError("oracle window must have dimension in [2, 64]")
    window = FockWindow(0, dimension - 1)
    if initial is None:
        psi0 = coherent_state(schedule.alpha, window).amplitudes
    else:
        if initial.window != window:
            raise DomainError("initial state window must match the oracle window")
        psi0 = initial.amplitudes
    rho0 = np.outer(psi0, psi0.conj())
    ns = window.ns()
    a_op = np.diag(np.sqrt(ns[1:]), k=1)
    a_dag = a_op.conj().T
    n_op = np.diag(ns)

    stage_h = []
    max_h = 0.0
    for stage in schedule.stages:
        if not isinstance(stage, ContinuousEvolution):
            raise DomainError("oracle schedules need explicit stage durations")
        diag, lo, up = hamiltonian_arrays(stage.hamiltonian, window)
        h_mat = np.diag(diag) + np.diag(lo, k=-1) + np.diag(up, k=1)
        stage_h.append((h_mat, stage.duration))
        max_h = max(max_h, float(np.max(np.abs(diag))
                                 + 2 * (np.max(np.abs(up)) if up.size else 0)))

    def rhs(rho):
        out = -1j * (stage_h_cur @ rho - rho @ stage_h_cur)
        if kappa > 0:
            out = out + kappa * (a_op @ rho @ a_dag
                                 - 0.5 * (n_op @ rho + rho @ n_op))
        return out

    def integrate(steps_per_unit):
        nonlocal stage_h_cur
        rho = rho0.copy()
        for h_mat, duration in stage_h:
            if duration == 0:
                continue
            stage_h_cur = h_mat
            nst = max(1, int(math.ceil(duration * steps_per_unit)))
            dt = duration / nst
            for _ in range(nst):
                k1 = rhs(rho)
                k2 = rhs(rho + 0.5 * dt * k1)
                k3 = rhs(rho + 0.5 * dt * k2)
                k4 = rhs(rho + dt * k3)
                rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return rho

    stage_h_cur = None
    rate = max(4.0 * (max_h + kappa * dimension), 16.0)
    prev = integrate(rate)
    for _ in range(12):
        rate *= 2.0
        cur = integrate(rate)
        if float(np.linalg.norm(cur - prev)) < tol:
            trace = float(np.trace(cur).real)
            if abs(trace - 1.0) > 1e-8:
                raise NoConvergence(f"oracle trace drifted to {trace!r}")
            eigs = np.linalg.eigvalsh(0.5 * (cur + cur.conj().T))
            if float(eigs.min()) < -1e-8:
                raise NoConvergence(
                    f"oracle density matrix lost positivity ({eigs.min():.3e})"
                )
            return OracleResult(
                fidelity=float(cur[schedule.target_n, schedule.target_n].real),
                mean_photon=float(np.trace(n_op @ cur).real),
                trace_error=abs(trace - 1.0),
                min_eigenvalue=float(eigs.min()),
            )
        prev = cur
    raise NoConvergence("oracle step halving did not converge")

"""The three physical primitives on the photon-number lattice.

* diagonal quadratic phase (the Kerr imprint),
* displacement D(beta) = exp(beta a^dag - beta* a),
* continuous evolution under H = detuning*n - kerr*n(n-1)
  + drive*(a e^{i theta} + a^dag e^{-i theta}).

Continuous evolution and displacement share one engine: a Chebyshev
expansion of the exponential of the (scaled and shifted) Hermitian
tridiagonal generator, with expansion coefficients from Bessel functions.
The diagonal part of H is rewritten around the window midpoint so that the
phases handed to the kernels stay far below the size where argument
reduction loses accuracy; the constant term dropped in that rewrite is a
global phase and is discarded consistently, so states produced for the same
window compose exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from . import kernels
from .core import DEFAULT_TAIL_TOL, StateVector
from .errors import DomainError, NoConvergence, TailLeak

_COEFF_CUT = 1e-16
_MAX_HALVINGS = 12


@dataclass(frozen=True)
class QuadraticPhase:
    """Diagonal phase phi0*(n - center)^2 + linear_coeff*(n - center).

    Applied as c_n <- c_n * exp(-i * phase(n)); the centered form keeps the
    argument small enough for full double precision even at n ~ 1e5.
    """

    phi0: float
    center: float
    linear_coeff: float = 0.0

    def __post_init__(self):
        for name in ("phi0", "center", "linear_coeff"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"QuadraticPhase.{name} must be finite")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Drive/detuning/Kerr parameters, all in units of the drive strength.

    ``uniform_hopping`` is a test-only switch replacing the physical
    sqrt(n) hopping by a constant coupling, which turns the lattice into the
    uniform tight-binding chain solved by Bessel functions.
    """

    drive_strength: float = 1.0
    drive_phase: float = 0.0
    detuning: float = 0.0
    kerr: float = 0.0
    uniform_hopping: float | None = None

    def __post_init__(self):
        for name in ("drive_strength", "drive_phase", "detuning", "kerr"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"HamiltonianSpec.{name} must be finite")
        if self.drive_strength < 0:
            raise DomainError("drive_strength must be >= 0")
        if self.kerr < 0:
            raise DomainError("kerr must be >= 0")


def hamiltonian_arrays(h: HamiltonianSpec, window) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(diag, lo, up) of H on the window, diagonal centered at the midpoint.

    diag(n) = detuning*n - kerr*n(n-1) is expanded exactly around
    m = (n_min + n_max) // 2 and the constant term is dropped (global phase).
    """
    m = (window.n_min + window.n_max) // 2
    delta = window.ns() - float(m)
    lam = h.detuning - h.kerr * (2.0 * m - 1.0)
    diag = (lam * delta - h.kerr * delta * delta).astype(np.complex128)
    if window.dimension == 1:
        hop = np.zeros(0, dtype=np.float64)
    elif h.uniform_hopping is not None:
        hop = np.full(window.dimension - 1, float(h.uniform_hopping))
    else:
        hop = h.drive_strength * np.sqrt(window.ns()[1:])
    phase = np.exp(1j * h.drive_phase)
    up = hop * phase
    lo = np.conj(up)
    return diag, lo, up


def _chebyshev_plan(diag, lo, up, dt):
    """Scaling and coefficients for exp(-i M dt) with Hermitian tridiag M."""
    dim = diag.shape[0]
    radius = np.zeros(dim)
    if dim > 1:
        radius[:-1] += np.abs(up)
        radius[1:] += np.abs(lo)
    dre = diag.real
    lo_b = float(np.min(dre - radius))
    hi_b = float(np.max(dre + radius))
    b = 0.5 * (hi_b + lo_b)
    a = 0.5 * (hi_b - lo_b) * (1.0 + 1e-12) + 1e-300
    big_r = a * dt
    phase = complex(np.exp(-1j * b * dt))
    if big_r < 1e-12:
        return None, None, None, None, phase
    k_guess = int(big_r + 14.0 * big_r ** (1.0 / 3.0) + 40)
    js = jv(np.arange(k_guess + 1), big_r)
    keep = np.nonzero(np.abs(js) >= _COEFF_CUT)[0]
    k_top = max(int(keep[-1]) + 1 if keep.size else 1, 4)
    k_top = min(k_top, k_guess)
    ks = np.arange(k_top + 1)
    coeffs = np.where(ks == 0, 1.0, 2.0) * (-1j) ** (ks % 4) * js[: k_top + 1]
    return ((diag - b) / a, lo / a, up / a, coeffs.astype(np.complex128), phase)


def _cheb_expmv(diag, lo, up, amps, duration, nseg):
    """exp(-i M duration) amps via nseg equal Chebyshev segments."""
    diag_s, lo_s, up_s, coeffs, phase = _chebyshev_plan(diag, lo, up, duration / nseg)
    out = amps
    for _ in range(nseg):
        if coeffs is None:
            out = out * phase
        else:
            out = kernels.cheb_apply(diag_s, lo_s, up_s, out, coeffs) * phase
    return out


def _check_upper_tail(amps, window, tail_tol, op):
    top = abs(amps[-1]) ** 2
    if top > tail_tol:
        raise TailLeak(f"{op}: upper boundary probability {top:.3e} > {tail_tol:g}")
    if window.n_min > 0:
        bot = abs(amps[0]) ** 2
        if bot > tail_tol:
            raise TailLeak(
                f"{op}: lower boundary probability {bot:.3e} > {tail_tol:g}"
            )


def apply_quadratic_phase(state: StateVector, phase: QuadraticPhase) -> StateVector:
    """c_n <- c_n * exp(-i [phi0 (n-n0)^2 + linear (n-n0)]); P(n) untouched."""
    amps = kernels.phase_apply(
        state.amplitudes, float(state.window.n_min),
        float(phase.phi0), float(phase.center), float(phase.linear_coeff),
    )
    return StateVector(state.window, amps)


def displace(state: StateVector, beta: complex,
             tail_tol: float = DEFAULT_TAIL_TOL) -> StateVector:
    """Apply D(beta) = exp(beta a^dag - beta* a) on the window.

    Realized as the exponential of the anti-Hermitian tridiagonal generator
    (one Chebyshev apply of i*(beta a^dag - beta* a), which is Hermitian);
    closed forms in terms of factorials are numerically fragile at n ~ 1e5
    and survive only as a moderate-n oracle in the tests.
    """
    beta = complex(beta)
    if beta == 0:
        return state.copy()
    window = state.window
    if window.dimension == 1:
        raise TailLeak("displace: window of dimension 1 cannot hold a displacement")
    roots = np.sqrt(window.ns()[1:])
    lo = (1j * beta) * roots
    up = (-1j * np.conj(beta)) * roots
    diag = np.zeros(window.dimension, dtype=np.complex128)
    amps = _cheb_expmv(diag, lo, up, state.amplitudes, 1.0, 1)
    _check_upper_tail(amps, window, tail_tol, "displace")
    return StateVector(window, amps)


def evolve_hamiltonian(state: StateVector, h: HamiltonianSpec, duration: float,
                       tol: float = 1e-9,
                       tail_tol: float = DEFAULT_TAIL_TOL) -> StateVector:
    """exp(-i H duration) applied to the state.

    The result is accepted once halving the internal step changes it by less
    than tol in vector norm; purely diagonal Hamiltonians (no drive) are
    evaluated in closed form.  Raises NoConvergence when the halving budget
    is exhausted and TailLeak when probability reaches the window edge.
    """
    if duration < 0:
        raise DomainError(f"duration must be >= 0, got {duration}")
    if tol <= 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if duration == 0:
        return state.copy()
    window = state.window
    diag, lo, up = hamiltonian_arrays(h, window)
    if lo.size == 0 or not np.any(lo):
        amps = state.amplitudes * np.exp(-1j * diag.real * duration)
        return StateVector(window, amps)
    prev = _cheb_expmv(diag, lo, up, state.amplitudes, duration, 1)
    nseg = 2
    for _ in range(_MAX_HALVINGS):
        cur = _cheb_expmv(diag, lo, up, state.amplitudes, duration, nseg)
        if float(np.linalg.norm(cur - prev)) < tol:
            _check_upper_tail(cur, window, tail_tol, "evolve_hamiltonian")
            return StateVector(window, cur)
        prev = cur
        nseg *= 2
    raise NoConvergence(
        f"evolve_hamiltonian: step halving did not reach tol={tol:g} "
        f"within {_MAX_HALVINGS} halvings"
    )

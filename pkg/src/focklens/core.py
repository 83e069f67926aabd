"""Photon-number-window states and their observables.

A state is a complex amplitude vector c_n over a contiguous window
[n_min, n_max] of the photon-number lattice.  All constructors normalize;
all observables are exact functions of the stored amplitudes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, OutOfWindow, TailLeak

logger = logging.getLogger(__name__)

#: Default bound on the boundary probabilities |c_{n_min}|^2, |c_{n_max}|^2.
DEFAULT_TAIL_TOL = 1e-12
#: Norm budget for any unitary pipeline.
NORM_TOL = 1e-10


@dataclass(frozen=True)
class FockWindow:
    """Contiguous photon-number range [n_min, n_max]."""

    n_min: int
    n_max: int

    def __post_init__(self):
        if self.n_min < 0:
            raise DomainError(f"n_min must be >= 0, got {self.n_min}")
        if self.n_max < self.n_min:
            raise DomainError(
                f"window requires n_min <= n_max, got [{self.n_min}, {self.n_max}]"
            )

    @property
    def dimension(self) -> int:
        return self.n_max - self.n_min + 1

    @property
    def half_width(self) -> int:
        return (self.dimension - 1) // 2

    def ns(self) -> np.ndarray:
        """Photon numbers covered by the window, as float64."""
        return np.arange(self.n_min, self.n_max + 1, dtype=np.float64)

    def contains(self, n: int) -> bool:
        return self.n_min <= n <= self.n_max

    def index_of(self, n: int) -> int:
        if not self.contains(n):
            raise OutOfWindow(f"n={n} outside window [{self.n_min}, {self.n_max}]")
        return n - self.n_min


def make_window(center: int, half_width: int) -> FockWindow:
    """Window [center - half_width, center + half_width], clamped at vacuum."""
    if center < 0:
        raise DomainError(f"center must be >= 0, got {center}")
    if half_width < 1:
        raise DomainError(f"half_width must be >= 1, got {half_width}")
    return FockWindow(max(0, center - half_width), center + half_width)


def default_window(center: float, sigma_multiple: float = 10.0,
                   min_half_width: int = 64) -> FockWindow:
    """Window wide enough for a coherent state of the given mean photon number.

    Half-width max(sigma_multiple * sqrt(center), min_half_width): the photon
    distribution has standard deviation sqrt(center), and displacements move
    the mean by O(2 sqrt(n) |beta|), so a 10-sigma margin plus on-demand
    extension keeps boundary mass negligible.
    """
    c = int(round(center))
    hw = max(int(math.ceil(sigma_multiple * math.sqrt(max(c, 1)))), min_half_width)
    return make_window(c, hw)


@dataclass
class StateVector:
    """Amplitudes c_n over a window; the object every propagator transforms."""

    window: FockWindow
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.window.dimension,):
            raise DomainError(
                f"amplitude length {self.amplitudes.shape} != window dimension "
                f"{self.window.dimension}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise DomainError("cannot normalize a zero state")
        return StateVector(self.window, self.amplitudes / n)

    def boundary_mass(self) -> float:
        """Larger of the two boundary probabilities."""
        a = self.amplitudes
        return float(max(abs(a[0]) ** 2, abs(a[-1]) ** 2))

    def copy(self) -> "StateVector":
        return StateVector(self.window, self.amplitudes.copy())


@dataclass(frozen=True)
class PhotonStatistics:
    """Distribution-level observables of a state: P(n), CDF, moments, peak."""

    window: FockWindow
    probabilities: np.ndarray
    cdf: np.ndarray
    mean: float
    variance: float
    peak_value: float
    peak_n: int


def _poisson_log_pmf(mean: float, n: int) -> float:
    return -mean + n * math.log(mean) - math.lgamma(n + 1)


def poisson_tail_mass(mean: float, window: FockWindow) -> float:
    """Upper bound on the Poisson mass outside the window.

    Both tails are bounded by geometric series starting at the first point
    beyond the edge: the pmf ratio mean/(n+1) (upper tail) resp. n/mean
    (lower tail) is < 1 once the edge is past the mean.  Returns inf when the
    mean itself is outside the window (no geometric bound applies).
    """
    if mean == 0:
        return 0.0 if window.n_min == 0 else 1.0
    tail = 0.0
    hi_first = window.n_max + 1
    r_hi = mean / (hi_first + 1)
    if r_hi >= 1.0:
        return math.inf
    tail += math.exp(_poisson_log_pmf(mean, hi_first)) / (1.0 - r_hi)
    if window.n_min > 0:
        lo_first = window.n_min - 1
        r_lo = lo_first / mean
        if r_lo >= 1.0:
            return math.inf
        tail += math.exp(_poisson_log_pmf(mean, lo_first)) / (1.0 - r_lo)
    return tail


def coherent_state(alpha: complex, window: FockWindow,
                   mass_tol: float = 1e-12) -> StateVector:
    """Coherent state c_n = alpha^n / sqrt(n!) restricted to the window.

    Magnitudes are built by the log-domain recurrence
    log|c_{n+1}| = log|c_n| + log|alpha| - log(n+1)/2 so that n! never
    overflows; the truncated vector is renormalized explicitly.

    Raises TailLeak when the window captures less than 1 - mass_tol of the
    Poisson mass (judged by an analytic bound on the out-of-window tails).
    """
    alpha = complex(alpha)
    dim = window.dimension
    if alpha == 0:
        if window.n_min > 0:
            raise TailLeak("vacuum state lies outside the window")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[0] = 1.0
        return StateVector(window, amps)

    tail = poisson_tail_mass(abs(alpha) ** 2, window)
    if tail > mass_tol:
        raise TailLeak(
            f"window [{window.n_min}, {window.n_max}] misses up to {tail:.3e} "
            f"> {mass_tol:g} of the Poisson mass for |alpha|^2 = "
            f"{abs(alpha) ** 2:g}"
        )
    ns = window.ns()
    log_abs_alpha = math.log(abs(alpha))
    theta = np.angle(alpha)
    # log|c_{n_min}| from the closed form, then the recurrence via cumsum.
    log_c0 = (-abs(alpha) ** 2 / 2.0 + window.n_min * log_abs_alpha
              - 0.5 * math.lgamma(window.n_min + 1))
    log_mag = np.empty(dim)
    log_mag[0] = log_c0
    if dim > 1:
        log_mag[1:] = log_c0 + np.cumsum(log_abs_alpha - 0.5 * np.log(ns[1:]))
    amps = np.exp(log_mag + 1j * theta * ns)
    nrm = np.linalg.norm(amps)
    if abs(nrm - 1.0) > 1e-15:
        logger.debug("coherent_state renormalized after truncation: norm=%.17g", nrm)
    return StateVector(window, amps / nrm)


def fock_state(n: int, window: FockWindow) -> StateVector:
    """Basis state |n> inside the window."""
    idx = window.index_of(n)
    amps = np.zeros(window.dimension, dtype=np.complex128)
    amps[idx] = 1.0
    return StateVector(window, amps)


def photon_statistics(state: StateVector) -> PhotonStatistics:
    """P(n) = |c_n|^2 plus CDF, mean, variance and peak of the stored state."""
    p = np.abs(state.amplitudes) ** 2
    total = p.sum()
    p = p / total
    cdf = np.cumsum(p)
    ns = state.window.ns()
    mean = float(np.dot(ns, p))
    variance = float(np.dot((ns - mean) ** 2, p))
    peak_idx = int(np.argmax(p))
    return PhotonStatistics(
        window=state.window,
        probabilities=p,
        cdf=cdf,
        mean=mean,
        variance=variance,
        peak_value=float(p[peak_idx]),
        peak_n=state.window.n_min + peak_idx,
    )


def fidelity(state: StateVector, n: int) -> float:
    """|<n|psi>|^2; zero when n lies outside the window."""
    if not state.window.contains(n):
        return 0.0
    return float(abs(state.amplitudes[n - state.window.n_min]) ** 2)


def cdf_rise_width(stats: PhotonStatistics, lo: float = 0.05,
                   hi: float = 0.95) -> int:
    """Number of Fock states over which the CDF climbs from lo to hi."""
    i_lo = int(np.searchsorted(stats.cdf, lo))
    i_hi = int(np.searchsorted(stats.cdf, hi))
    return i_hi - i_lo + 1


def extend_window(state: StateVector, tol: float = DEFAULT_TAIL_TOL) -> StateVector:
    """Widen the window on any side whose boundary probability exceeds tol.

    Amplitudes are preserved exactly; new entries are zero.  Growth per side
    is max(half_width // 4, 64) and the lower edge never goes below vacuum.
    """
    if tol <= 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    a = state.amplitudes
    grow = max(state.window.half_width // 4, 64)
    grow_lo = abs(a[0]) ** 2 > tol and state.window.n_min > 0
    grow_hi = abs(a[-1]) ** 2 > tol
    if not (grow_lo or grow_hi):
        return state
    new_min = max(0, state.window.n_min - grow) if grow_lo else state.window.n_min
    new_max = state.window.n_max + grow if grow_hi else state.window.n_max
    new_window = FockWindow(new_min, new_max)
    amps = np.zeros(new_window.dimension, dtype=np.complex128)
    off = state.window.n_min - new_min
    amps[off:off + state.window.dimension] = a
    logger.debug("extend_window: [%d, %d] -> [%d, %d]",
                 state.window.n_min, state.window.n_max, new_min, new_max)
    return StateVector(new_window, amps)

"""Closed-form references used by the test suites.

These evaluate independently of the propagation kernels: Poisson statistics
in the log domain, uniform-hopping lattice amplitudes from Bessel functions
(Miller's backward recurrence), and displacement matrix elements from a
scale-tracked associated-Laguerre recurrence.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import DomainError, RangeError

#: Largest m or n for which the Laguerre recurrence is trusted.
DISPLACEMENT_STABLE_BOUND = 5000


def poisson_pmf(mean: float, n: int) -> float:
    """exp(-mean) * mean^n / n!, computed as exp of the log pmf."""
    if mean < 0:
        raise DomainError(f"mean must be >= 0, got {mean}")
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if mean == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mean + n * math.log(mean) - math.lgamma(n + 1))


def bessel_j_sequence(k_max: int, x: float) -> np.ndarray:
    """J_0(x) .. J_{k_max}(x) by backward recurrence with normalization.

    Forward recurrence diverges for order above the argument; Miller's
    algorithm starts well past max(k_max, x) with an arbitrary seed, recurs
    downward, and fixes the scale with J_0 + 2*sum J_{2k} = 1.
    """
    if k_max < 0:
        raise DomainError(f"k_max must be >= 0, got {k_max}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0.0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    m_start = int(max(k_max, x)) + 2 * int(math.sqrt(40.0 * max(k_max, x, 1))) + 52
    if m_start % 2:
        m_start += 1
    vals = np.zeros(m_start + 2)
    vals[m_start + 1] = 0.0
    vals[m_start] = 1e-300
    for k in range(m_start, 0, -1):
        vals[k - 1] = (2.0 * k / x) * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > 1e250:
            vals[: m_start + 2] /= 1e250
    scale = vals[0] + 2.0 * vals[2: m_start + 1: 2].sum()
    return vals[: k_max + 1] / scale


def bessel_lattice_amplitudes(j_hop: float, t: float, m_range) -> np.ndarray:
    """Site amplitudes i^m J_m(2 j_hop t) after uniform-hopping evolution.

    A single occupied site spreading on a lattice with constant coupling
    j_hop reaches offset m with amplitude i^m J_m(2 j_hop t) under the sign
    convention where the hopping carries a pi drive phase
    (H = -j_hop * sum |n><n+1| + h.c.); with the opposite sign the amplitude
    is the complex conjugate and the magnitudes coincide.  Because
    J_{-m} = (-1)^m J_m, the amplitude reduces to i^|m| J_|m| for every m.
    """
    if j_hop < 0 or t < 0:
        raise DomainError("j_hop and t must be >= 0")
    m_arr = np.asarray(list(m_range), dtype=np.int64)
    k_max = int(np.max(np.abs(m_arr))) if m_arr.size else 0
    js = bessel_j_sequence(k_max, 2.0 * j_hop * t)
    out = np.empty(m_arr.shape, dtype=np.complex128)
    for i, m in enumerate(m_arr):
        out[i] = (1j) ** int(abs(m)) * js[abs(m)]
    return out


def _laguerre_scaled(k: int, d: int, x: float) -> tuple[float, float]:
    """L_k^{(d)}(x) as (mantissa, log_scale): value = mantissa * exp(log_scale)."""
    l_prev = 1.0  # L_0
    if k == 0:
        return l_prev, 0.0
    l_cur = 1.0 + d - x  # L_1
    log_scale = 0.0
    for j in range(1, k):
        l_next = ((2.0 * j + 1.0 + d - x) * l_cur - (j + d) * l_prev) / (j + 1.0)
        l_prev, l_cur = l_cur, l_next
        m = max(abs(l_prev), abs(l_cur))
        if m > 1e200:
            l_prev /= 1e200
            l_cur /= 1e200
            log_scale += math.log(1e200)
    return l_cur, log_scale


def displacement_matrix_element(m: int, n: int, beta: complex) -> complex:
    """<m| D(beta) |n> for D(beta) = exp(beta a^dag - beta* a).

    Uses sqrt(n!/m!) beta^{m-n} e^{-|beta|^2/2} L_n^{(m-n)}(|beta|^2) for
    m >= n, with all factorial growth carried in the log domain; the m < n
    case follows from <m|D(beta)|n> = conj(<n|D(-beta)|m>).
    """
    if m < 0 or n < 0:
        raise DomainError("m and n must be >= 0")
    if max(m, n) > DISPLACEMENT_STABLE_BOUND:
        raise RangeError(
            f"matrix element ({m}, {n}) beyond stability bound "
            f"{DISPLACEMENT_STABLE_BOUND}"
        )
    beta = complex(beta)
    if beta == 0:
        return 1.0 + 0.0j if m == n else 0.0 + 0.0j
    if m < n:
        return complex(displacement_matrix_element(n, m, -beta)).conjugate()
    d = m - n
    x = abs(beta) ** 2
    lag, log_scale = _laguerre_scaled(n, d, x)
    if lag == 0.0:
        return 0.0 + 0.0j
    log_mag = (0.5 * (math.lgamma(n + 1) - math.lgamma(m + 1))
               + d * math.log(abs(beta)) - x / 2.0
               + log_scale + math.log(abs(lag)))
    phase = d * cmath.phase(beta)
    sign = 1.0 if lag > 0 else -1.0
    return sign * math.exp(log_mag) * cmath.exp(1j * phase)

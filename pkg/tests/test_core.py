import math

import numpy as np
import pytest

from focklens.core import (
    FockWindow,
    cdf_rise_width,
    coherent_state,
    default_window,
    extend_window,
    fidelity,
    fock_state,
    make_window,
    photon_statistics,
)
from focklens.errors import DomainError, OutOfWindow, TailLeak
from focklens.oracles import poisson_pmf


def test_make_window_examples():
    assert make_window(0, 10) == FockWindow(0, 10)
    assert make_window(0, 10).dimension == 11
    assert make_window(10000, 4000) == FockWindow(6000, 14000)
    assert make_window(5, 10) == FockWindow(0, 15)


def test_make_window_validation():
    with pytest.raises(DomainError):
        make_window(-1, 5)
    with pytest.raises(DomainError):
        make_window(3, 0)


def test_fock_state_basics():
    w = make_window(6, 6)
    s = fock_state(0, w)
    assert s.amplitudes[0] == 1.0
    assert s.norm() == 1.0

    w2 = FockWindow(6000, 14000)
    s2 = fock_state(10000, w2)
    assert s2.amplitudes[4000] == 1.0

    with pytest.raises(OutOfWindow):
        fock_state(5, w2)


def test_coherent_vacuum():
    w = make_window(0, 8)
    s = coherent_state(0.0, w)
    assert s.amplitudes[0] == 1.0
    assert np.all(s.amplitudes[1:] == 0)


def test_coherent_poisson_value():
    w = make_window(4, 4 + 26)  # plenty of room for mean 4
    s = coherent_state(2.0, w)
    stats = photon_statistics(s)
    p4 = stats.probabilities[w.index_of(4)]
    assert abs(p4 - 0.195367) < 1e-6


def test_coherent_alpha100_peak_and_moments():
    w = default_window(100.0**2)
    s = coherent_state(100.0, w)
    assert abs(s.norm() - 1.0) < 1e-12
    stats = photon_statistics(s)
    assert abs(stats.peak_value - 0.004) < 2e-4
    assert abs(stats.peak_n - 10**4) <= 1
    assert abs(stats.mean - 1e4) < 0.1
    assert abs(stats.variance - 1e4) < 0.01 * 1e4


def test_coherent_complex_alpha_statistics_match():
    w = make_window(9, 30)
    mag = photon_statistics(coherent_state(3.0, w))
    rot = photon_statistics(coherent_state(3.0 * np.exp(0.7j), w))
    assert np.max(np.abs(mag.probabilities - rot.probabilities)) < 1e-14


def test_coherent_tail_leak():
    with pytest.raises(TailLeak):
        coherent_state(10.0, make_window(100, 20))
    with pytest.raises(TailLeak):
        coherent_state(2.0, FockWindow(0, 9))


def test_statistics_fock_state():
    w = make_window(12, 8)
    stats = photon_statistics(fock_state(12, w))
    assert stats.peak_value == 1.0
    assert stats.peak_n == 12
    assert stats.variance == 0.0
    assert stats.mean == 12.0


@pytest.mark.parametrize("alpha", [1.5, 4.0, 9.0])
def test_statistics_invariants(alpha):
    w = default_window(alpha**2)
    stats = photon_statistics(coherent_state(alpha, w))
    assert np.all(stats.probabilities >= 0)
    assert abs(stats.probabilities.sum() - 1.0) < 1e-10
    assert np.all(np.diff(stats.cdf) >= -1e-15)
    assert abs(stats.cdf[-1] - 1.0) < 1e-10


def test_fidelity_basics():
    w = make_window(10, 5)
    s = fock_state(10, w)
    assert fidelity(s, 10) == 1.0
    assert fidelity(s, 11) == 0.0
    assert fidelity(s, 999) == 0.0  # outside window


def test_fidelity_global_phase_invariant():
    w = default_window(9)
    s = coherent_state(3.0, w)
    rotated = s.copy()
    rotated.amplitudes *= np.exp(1.23j)
    assert abs(fidelity(s, 9) - fidelity(rotated, 9)) < 1e-16


def test_fidelity_coherent_mode_matches_poisson_oracle():
    n = 10**4
    w = default_window(n)
    s = coherent_state(100.0, w)
    assert abs(fidelity(s, n) - poisson_pmf(float(n), n)) < 1e-12
    assert abs(fidelity(s, n) - 0.003989) < 5e-6


def test_cdf_rise_width_coherent():
    w = default_window(1e4)
    stats = photon_statistics(coherent_state(100.0, w))
    # 5%-95% of a Gaussian spans 3.29 sigma = 329 states at sigma 100
    assert 300 < cdf_rise_width(stats) < 360


def test_extend_window_noop_when_clean():
    w = default_window(49)
    s = coherent_state(7.0, w)
    assert extend_window(s, 1e-12).window == w


def test_extend_window_grows_on_boundary_mass():
    w = FockWindow(0, 10)
    amps = np.zeros(11, dtype=complex)
    amps[10] = 1e-3
    amps[0] = math.sqrt(1 - 1e-6)
    from focklens.core import StateVector

    s = StateVector(w, amps)
    wide = extend_window(s, 1e-12)
    assert wide.window.n_max >= 10 + 64
    assert wide.window.n_min == 0  # never extends below vacuum
    # amplitudes preserved exactly
    assert wide.amplitudes[10] == amps[10]
    assert np.all(wide.amplitudes[11:] == 0)


def test_extend_window_requires_positive_tol():
    w = make_window(5, 5)
    s = fock_state(5, w)
    with pytest.raises(DomainError):
        extend_window(s, 0.0)

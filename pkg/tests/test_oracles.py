import math

import numpy as np
import pytest
from scipy.special import jv

from focklens.core import make_window, fock_state
from focklens.errors import DomainError, RangeError
from focklens.oracles import (
    bessel_j_sequence,
    bessel_lattice_amplitudes,
    displacement_matrix_element,
    poisson_pmf,
)
from focklens.propagators import HamiltonianSpec, displace, evolve_hamiltonian


def test_poisson_pmf_values():
    assert poisson_pmf(0.0, 0) == 1.0
    assert poisson_pmf(0.0, 3) == 0.0
    assert abs(poisson_pmf(4.0, 4) - 0.195367) < 1e-6
    # mode of a Poisson with mean 1e4, the bare coherent peak of the figures
    assert abs(poisson_pmf(1e4, 10**4) - 0.003989) < 5e-6


def test_poisson_pmf_large_n_stays_finite():
    v = poisson_pmf(1e5, 10**5)
    assert 0 < v < 1
    assert abs(v - 1.0 / math.sqrt(2 * math.pi * 1e5)) < 1e-8


def test_poisson_pmf_domain():
    with pytest.raises(DomainError):
        poisson_pmf(-1.0, 0)
    with pytest.raises(DomainError):
        poisson_pmf(1.0, -2)


@pytest.mark.parametrize("x", [0.3, 2.404826, 7.7, 40.0])
def test_bessel_sequence_matches_scipy(x):
    ours = bessel_j_sequence(60, x)
    ref = jv(np.arange(61), x)
    assert np.max(np.abs(ours - ref)) < 1e-12


def test_bessel_lattice_t0_is_delta():
    amps = bessel_lattice_amplitudes(1.0, 0.0, range(-5, 6))
    expect = np.zeros(11, dtype=complex)
    expect[5] = 1.0
    assert np.array_equal(amps, expect)


def test_bessel_lattice_normalized():
    amps = bessel_lattice_amplitudes(1.3, 2.0, range(-60, 61))
    assert abs(np.sum(np.abs(amps) ** 2) - 1.0) < 1e-12


def test_bessel_first_zero_of_j0():
    # 2 J t at the first zero of J_0 empties the starting site
    amps = bessel_lattice_amplitudes(1.0, 2.404826 / 2.0, [0])
    assert abs(amps[0]) < 1e-6


def test_lattice_phase_convention_against_propagator():
    # uniform hopping with a pi drive phase realizes i^m J_m(2Jt) exactly
    j_hop, t = 1.0, 1.3
    window = make_window(200, 60)
    start = fock_state(200, window)
    h = HamiltonianSpec(drive_strength=0.0, drive_phase=math.pi,
                        uniform_hopping=j_hop)
    evolved = evolve_hamiltonian(start, h, t, tol=1e-11)
    oracle = bessel_lattice_amplitudes(j_hop, t, range(-60, 61))
    assert np.max(np.abs(evolved.amplitudes - oracle)) < 1e-8


def test_displacement_element_vacuum():
    for beta in (0.3, 0.5 - 0.2j, 1.1j):
        val = displacement_matrix_element(0, 0, beta)
        assert abs(val - math.exp(-abs(beta) ** 2 / 2)) < 1e-14


def test_displacement_element_column_norm():
    beta = 0.6 + 0.3j
    n = 40
    col = np.array([displacement_matrix_element(m, n, beta)
                    for m in range(0, 160)])
    assert abs(np.sum(np.abs(col) ** 2) - 1.0) < 1e-10


def test_displacement_element_symmetry():
    beta = 0.4 - 0.7j
    a = displacement_matrix_element(3, 9, beta)
    b = displacement_matrix_element(9, 3, -beta)
    assert abs(a - np.conj(b)) < 1e-14


def test_displacement_element_range_guard():
    with pytest.raises(RangeError):
        displacement_matrix_element(5001, 0, 0.5)


def test_displacement_small_time_drive_expansion():
    # <m|D(-i eps tau)|n> = delta - i eps tau sqrt-couplings + O(tau^2)
    eps, tau, n = 1.0, 1e-4, 7
    for m, expect in ((n, 1.0), (n - 1, -1j * eps * tau * math.sqrt(n)),
                      (n + 1, -1j * eps * tau * math.sqrt(n + 1))):
        val = displacement_matrix_element(m, n, -1j * eps * tau)
        assert abs(val - expect) < 4.0 * (n + 1) * tau ** 2


def test_displacement_element_cross_checks_displace_at_n1000():
    beta = 0.7 + 0.2j
    n = 1000
    window = make_window(1000, 120)
    state = displace(fock_state(n, window), beta)
    col = np.array([displacement_matrix_element(m, n, beta)
                    for m in range(window.n_min, window.n_max + 1)])
    assert np.max(np.abs(state.amplitudes - col)) < 1e-8

import math

import numpy as np
import pytest

from focklens.core import (
    coherent_state,
    default_window,
    fidelity,
    fock_state,
    make_window,
    photon_statistics,
)
from focklens.errors import DomainError, NoConvergence, TailLeak
from focklens.propagators import (
    HamiltonianSpec,
    QuadraticPhase,
    apply_quadratic_phase,
    displace,
    evolve_hamiltonian,
)


@pytest.fixture(scope="module")
def coherent10():
    return coherent_state(10.0, default_window(100.0, sigma_multiple=12))


def test_quadratic_phase_identity(coherent10):
    out = apply_quadratic_phase(coherent10, QuadraticPhase(0.0, 100.0))
    assert np.array_equal(out.amplitudes, coherent10.amplitudes)


@pytest.mark.parametrize("phi0,linear", [(2.45e-3, 0.0), (0.3, 0.1),
                                         (-0.02, -0.5), (7.0, 2.0)])
def test_quadratic_phase_preserves_probabilities(coherent10, phi0, linear):
    phase = QuadraticPhase(phi0, 96.5, linear)
    out = apply_quadratic_phase(coherent10, phase)
    before = photon_statistics(coherent10)
    after = photon_statistics(out)
    assert np.max(np.abs(before.probabilities - after.probabilities)) < 1e-15
    assert abs(out.norm() - 1.0) < 1e-12


def test_quadratic_phase_on_fock_state_is_global_phase():
    w = make_window(50, 10)
    s = fock_state(50, w)
    out = apply_quadratic_phase(s, QuadraticPhase(0.37, 47.0, 0.11))
    assert fidelity(out, 50) == pytest.approx(1.0, abs=1e-14)


def test_quadratic_phase_applied_value():
    w = make_window(3, 3)
    s = fock_state(3, w)
    phase = QuadraticPhase(phi0=0.2, center=1.0, linear_coeff=0.05)
    out = apply_quadratic_phase(s, phase)
    expect = np.exp(-1j * (0.2 * 4.0 + 0.05 * 2.0))
    assert abs(out.amplitudes[3] - expect) < 1e-14


def test_displace_identity(coherent10):
    out = displace(coherent10, 0.0)
    assert np.array_equal(out.amplitudes, coherent10.amplitudes)


def test_displace_vacuum_closed_form():
    w = make_window(0, 40)
    out = displace(fock_state(0, w), 0.5)
    assert abs(abs(out.amplitudes[0]) ** 2 - math.exp(-0.25)) < 1e-12
    assert abs(out.norm() - 1.0) < 1e-10


def test_displace_group_identity(coherent10):
    beta = 0.8 - 0.3j
    back = displace(displace(coherent10, beta), -beta)
    assert np.linalg.norm(back.amplitudes - coherent10.amplitudes) < 1e-10


def test_displace_coherent_consistency():
    alpha, beta = 5.0, 1.2 + 0.4j
    w = default_window(abs(alpha + beta) ** 2 + 40, sigma_multiple=12)
    out = displace(coherent_state(alpha, w), beta)
    stats = photon_statistics(out)
    assert abs(stats.mean - abs(alpha + beta) ** 2) < 1e-6
    assert abs(stats.variance - abs(alpha + beta) ** 2) < 1e-4


def test_displace_unitary(coherent10):
    out = displace(coherent10, 1.1j - 0.2)
    assert abs(out.norm() - 1.0) < 1e-10


def test_displace_tail_leak():
    w = make_window(9, 31)
    s = coherent_state(3.0, w)
    with pytest.raises(TailLeak):
        displace(s, 4.0)


def test_evolve_zero_duration(coherent10):
    out = evolve_hamiltonian(coherent10, HamiltonianSpec(), 0.0)
    assert np.array_equal(out.amplitudes, coherent10.amplitudes)


def test_evolve_validates_arguments(coherent10):
    with pytest.raises(DomainError):
        evolve_hamiltonian(coherent10, HamiltonianSpec(), -0.1)
    with pytest.raises(DomainError):
        evolve_hamiltonian(coherent10, HamiltonianSpec(), 0.1, tol=0.0)


def test_drive_displacement_operator_identity(coherent10):
    # exp(-i tau eps (a + a^dag)) = D(-i eps tau)
    tau, eps = 0.37, 1.0
    ev = evolve_hamiltonian(coherent10, HamiltonianSpec(drive_strength=eps), tau)
    di = displace(coherent10, -1j * eps * tau)
    assert np.linalg.norm(ev.amplitudes - di.amplitudes) < 1e-9


def test_evolve_unitarity(coherent10):
    h = HamiltonianSpec(drive_strength=1.0, detuning=3.0, kerr=0.01)
    out = evolve_hamiltonian(coherent10, h, 1.1)
    assert abs(out.norm() - 1.0) < 1e-10


def test_evolve_composition(coherent10):
    h = HamiltonianSpec(drive_strength=1.0, detuning=0.5, kerr=2e-3,
                        drive_phase=0.4)
    tol = 1e-9
    once = evolve_hamiltonian(coherent10, h, 0.9, tol=tol)
    twice = evolve_hamiltonian(
        evolve_hamiltonian(coherent10, h, 0.4, tol=tol), h, 0.5, tol=tol)
    assert np.linalg.norm(once.amplitudes - twice.amplitudes) < 2 * tol


def test_evolve_diagonal_conserves_occupation(coherent10):
    h = HamiltonianSpec(drive_strength=0.0, detuning=11.0, kerr=0.3)
    out = evolve_hamiltonian(coherent10, h, 2.7)
    # diagonal evolution touches phases only; occupations move by < 1 ulp
    assert np.max(np.abs(np.abs(out.amplitudes)
                         - np.abs(coherent10.amplitudes))) < 1e-16
    before = photon_statistics(coherent10)
    after = photon_statistics(out)
    assert abs(after.mean - before.mean) < 1e-9


def test_evolve_uniform_hopping_bessel_magnitudes():
    from focklens.oracles import bessel_lattice_amplitudes

    window = make_window(300, 80)
    start = fock_state(300, window)
    h = HamiltonianSpec(drive_strength=0.0, uniform_hopping=0.9)
    out = evolve_hamiltonian(start, h, 2.2, tol=1e-11)
    oracle = bessel_lattice_amplitudes(0.9, 2.2, range(-80, 81))
    assert np.max(np.abs(np.abs(out.amplitudes) - np.abs(oracle))) < 1e-8


def test_evolve_no_convergence_budget():
    s = coherent_state(4.0, default_window(16.0))
    with pytest.raises(NoConvergence):
        evolve_hamiltonian(s, HamiltonianSpec(drive_strength=1.0), 0.5,
                           tol=1e-30)


def test_hamiltonian_spec_validation():
    with pytest.raises(DomainError):
        HamiltonianSpec(drive_strength=-1.0)
    with pytest.raises(DomainError):
        HamiltonianSpec(kerr=-0.1)
    with pytest.raises(DomainError):
        HamiltonianSpec(detuning=math.inf)

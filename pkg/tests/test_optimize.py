import math

import numpy as np
import pytest

from focklens.errors import DomainError
from focklens.lens import focal_drive_time
from focklens.optimize import (
    OptimizationConfig,
    fit_power_law,
    grid_search_oracle,
    lenses_from_vector,
    optimize_lens_group,
    phi0_scaling_guess,
    vector_from_lenses,
)
from focklens.oracles import poisson_pmf


def test_fit_exact_recovery():
    xs = np.array([1.0, 3.0, 10.0, 40.0, 500.0])
    fit = fit_power_law(list(zip(xs, 2.0 * xs**-0.3)))
    assert abs(fit.prefactor - 2.0) < 1e-12
    assert abs(fit.exponent - 0.3) < 1e-13
    assert fit.max_log_residual < 1e-12


def test_fit_domain_errors():
    with pytest.raises(DomainError):
        fit_power_law([(1.0, 2.0)])
    with pytest.raises(DomainError):
        fit_power_law([(1.0, 2.0), (-1.0, 3.0)])
    with pytest.raises(DomainError):
        fit_power_law([(1.0, 0.0), (2.0, 3.0)])


def test_fit_coherent_baseline_exponent():
    ns = [1000, 2500, 10000, 40000, 100000]
    fit = fit_power_law([(n, poisson_pmf(float(n), n)) for n in ns])
    assert abs(abs(fit.exponent) - 0.5) < 0.02


def test_phi0_scaling_guess_anchor():
    assert phi0_scaling_guess(1e4) == pytest.approx(2.45e-3)
    # halves roughly per 3.5x in n (exponent 0.5525)
    assert phi0_scaling_guess(4e4) < phi0_scaling_guess(1e4)


def test_vector_roundtrip():
    x = np.array([0.01, -3.0, 0.2, -0.9, 0.3, 1.0, 0.0, 0.05])
    lenses = lenses_from_vector(x, 400)
    assert len(lenses) == 2
    back = vector_from_lenses(lenses, 400)
    assert np.allclose(back, x)


def test_lens_count_zero_returns_baseline():
    cfg = OptimizationConfig(target_n=400, lens_count=0)
    res = optimize_lens_group(cfg)
    assert res.fidelity == pytest.approx(poisson_pmf(400.0, 400), abs=1e-15)
    assert res.evaluations == 0
    assert res.lenses == ()


@pytest.fixture(scope="module")
def opt400():
    cfg = OptimizationConfig(target_n=400, lens_count=1, restarts=2,
                             budget=800, ray_restarts=12, seed=7)
    return cfg, optimize_lens_group(cfg)


def test_optimizer_beats_grid_oracle(opt400):
    _, res = opt400
    phi_g = phi0_scaling_guess(400)
    tau_g = focal_drive_time(400, 1.0, phi_g)
    grid_lens, grid_f = grid_search_oracle(
        400,
        phi_grid=phi_g * np.linspace(0.6, 1.6, 11),
        re_beta_grid=np.linspace(-0.3, 0.3, 5),
        im_beta_grid=-tau_g * np.linspace(0.7, 1.3, 9),
        offset_grid=(-2.0, 0.0, 2.0),
    )
    assert res.fidelity >= grid_f - 1e-3
    assert grid_f > poisson_pmf(400.0, 400)


def test_grid_oracle_contains_identity_point():
    _, f = grid_search_oracle(400, phi_grid=[1e-9], re_beta_grid=[0.0],
                              im_beta_grid=[0.0])
    assert f >= poisson_pmf(400.0, 400) - 1e-12


def test_grid_oracle_refinement_monotone():
    phi_g = phi0_scaling_guess(400)
    tau_g = focal_drive_time(400, 1.0, phi_g)
    coarse_phis = list(phi_g * np.linspace(0.7, 1.3, 3))
    fine_phis = coarse_phis + list(phi_g * np.linspace(0.8, 1.2, 4))
    ims = list(-tau_g * np.linspace(0.8, 1.2, 3))
    _, f_coarse = grid_search_oracle(400, coarse_phis, [0.0], ims)
    _, f_fine = grid_search_oracle(400, fine_phis, [0.0], ims)
    assert f_fine >= f_coarse


def test_optimizer_deterministic(opt400):
    cfg, first = opt400
    again = optimize_lens_group(cfg)
    assert again.fidelity == first.fidelity
    assert again.evaluations == first.evaluations
    assert all(a == b for a, b in zip(again.lenses, first.lenses))


def test_optimizer_workers_do_not_change_result(opt400):
    cfg, first = opt400
    cfg2 = OptimizationConfig(target_n=400, lens_count=1, restarts=2,
                              budget=800, ray_restarts=12, seed=7, workers=2)
    res2 = optimize_lens_group(cfg2)
    assert res2.fidelity == first.fidelity


def test_monotone_in_lens_count(opt400):
    cfg, res1 = opt400
    cfg2 = OptimizationConfig(target_n=400, lens_count=2, restarts=2,
                              budget=1200, ray_restarts=12, seed=7)
    res2 = optimize_lens_group(cfg2, warm_start=res1.lenses)
    assert res2.fidelity >= res1.fidelity - 1e-6


def test_result_revalidated(opt400):
    # reported fidelity reproduces through an independent run_lens_group call
    from focklens.lens import lens_group_schedule, run_lens_group

    _, res = opt400
    schedule = lens_group_schedule(math.sqrt(400), res.lenses, 400)
    assert abs(run_lens_group(schedule).fidelity - res.fidelity) < 1e-9


def test_config_validation():
    with pytest.raises(DomainError):
        OptimizationConfig(target_n=0, lens_count=1)
    with pytest.raises(DomainError):
        OptimizationConfig(target_n=10, lens_count=-1)
    with pytest.raises(DomainError):
        OptimizationConfig(target_n=10, lens_count=1, f_tol=0.0)

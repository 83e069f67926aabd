"""Fock-space lens simulator and optimization toolkit."""

__version__ = "0.1.0"

from .core import (
    DEFAULT_TAIL_TOL,
    FockWindow,
    PhotonStatistics,
    StateVector,
    cdf_rise_width,
    coherent_state,
    default_window,
    extend_window,
    fidelity,
    fock_state,
    make_window,
    photon_statistics,
)
from .propagators import (
    HamiltonianSpec,
    QuadraticPhase,
    apply_quadratic_phase,
    displace,
    evolve_hamiltonian,
)
from .lens import (
    ContinuousEvolution,
    Displacement,
    LensParams,
    ProtocolSchedule,
    WindowPolicy,
    focal_drive_time,
    lens_group_schedule,
    run_lens_group,
    sweep_focus_map,
    time_resolved_run,
)
from .optimize import (
    FitResult,
    OptimizationConfig,
    OptimizationResult,
    fit_power_law,
    grid_search_oracle,
    optimize_lens_group,
)
from .opensystem import (
    EnsembleConfig,
    EnsembleResult,
    dense_lindblad_oracle,
    ensemble_average,
    timed_lens_schedule,
    trajectory_evolve,
)

__all__ = [
    "ContinuousEvolution",
    "DEFAULT_TAIL_TOL",
    "Displacement",
    "EnsembleConfig",
    "EnsembleResult",
    "FitResult",
    "FockWindow",
    "HamiltonianSpec",
    "LensParams",
    "OptimizationConfig",
    "OptimizationResult",
    "PhotonStatistics",
    "ProtocolSchedule",
    "QuadraticPhase",
    "StateVector",
    "WindowPolicy",
    "apply_quadratic_phase",
    "cdf_rise_width",
    "coherent_state",
    "default_window",
    "dense_lindblad_oracle",
    "displace",
    "ensemble_average",
    "evolve_hamiltonian",
    "extend_window",
    "fidelity",
    "fit_power_law",
    "focal_drive_time",
    "fock_state",
    "grid_search_oracle",
    "lens_group_schedule",
    "make_window",
    "optimize_lens_group",
    "photon_statistics",
    "run_lens_group",
    "sweep_focus_map",
    "time_resolved_run",
    "timed_lens_schedule",
    "trajectory_evolve",
    "__version__",
]

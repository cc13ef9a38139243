"""Pseudo-spectral laboratory for the low-Mach-number limit of
non-isentropic ideal MHD on a periodic box."""

from .eos import EosParams, coeff_a, coeff_r, density, g_factor, r0
from .spectral import EllipticConvergenceError, GaugeError, GridSpec
from .compressible import (
    CompressibleState,
    faraday,
    faraday_expanded,
    lorentz_force,
    rhs,
    rk4_step,
    run,
    stable_dt,
)
from .incompressible import (
    IncompressibleState,
    filter_initial_velocity,
    mhd_energy,
    pressure_solve,
    rhs_incompressible,
)
from .initial_data import DataRecipe, make_compressible_data, make_limit_data
from .diagnostics import (
    DiagnosticsRecord,
    SweepResult,
    acoustic_forcing,
    acoustic_residual,
    convergence_metrics,
    coupling_cancellation_residual,
    fit_order,
    quadratic_energy,
    total_energy,
)
from .integrate import IntegrationError, Trajectory
from .harness import (
    ConfigError,
    RunConfig,
    cmd_check_identities,
    cmd_run_compressible,
    cmd_run_incompressible,
    cmd_sweep,
    default_config,
    load_config,
)

__version__ = "0.1.0"

__all__ = [
    "EosParams",
    "coeff_a",
    "coeff_r",
    "density",
    "g_factor",
    "r0",
    "GridSpec",
    "GaugeError",
    "EllipticConvergenceError",
    "CompressibleState",
    "lorentz_force",
    "faraday",
    "faraday_expanded",
    "rhs",
    "rk4_step",
    "run",
    "stable_dt",
    "IncompressibleState",
    "filter_initial_velocity",
    "pressure_solve",
    "rhs_incompressible",
    "mhd_energy",
    "DataRecipe",
    "make_compressible_data",
    "make_limit_data",
    "DiagnosticsRecord",
    "SweepResult",
    "quadratic_energy",
    "total_energy",
    "coupling_cancellation_residual",
    "acoustic_residual",
    "acoustic_forcing",
    "convergence_metrics",
    "fit_order",
    "IntegrationError",
    "Trajectory",
    "RunConfig",
    "ConfigError",
    "default_config",
    "load_config",
    "cmd_run_compressible",
    "cmd_run_incompressible",
    "cmd_sweep",
    "cmd_check_identities",
    "__version__",
]

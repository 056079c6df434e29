"""bnlab: a 1-D laboratory for one-velocity two-phase flow with stiff
pressure/temperature relaxation and its one-pressure one-temperature limit."""

__version__ = "0.1.0"

from .chgvar import (ChartGuard, NormalState, coefficient_table, fd_jacobian,
                     jacobian_det, phi_forward, phi_inverse)
from .diagnostics import (DampingBudget, conservation_report,
                          damping_budget_update, discrete_hk_norm)
from .limitlab import SweepPlan, build_scenario, fit_rate, project_to_limit_vars, run_comparison
from .quasilinear import (RelaxParams, assemble_kapila, assemble_system,
                          build_symmetrizer)
from .solver1d import (GridField, KapilaState, StepReport, conservative_decode,
                       conservative_encode, hyperbolic_step, imex_step, integrate,
                       kapila_step, make_bn_grid, make_kapila_grid,
                       relaxation_substep)
from .thermo import (EquilibriumTriple, GasConstants, MixtureView,
                     PrimitiveState, build_equilibrium, build_initial_data,
                     default_background, default_gas, eta_density, mixture_view,
                     phase_pressure)

__all__ = [
    "__version__",
    "ChartGuard", "NormalState", "coefficient_table", "fd_jacobian",
    "jacobian_det", "phi_forward", "phi_inverse",
    "DampingBudget", "conservation_report", "damping_budget_update",
    "discrete_hk_norm",
    "SweepPlan", "build_scenario", "fit_rate", "project_to_limit_vars",
    "run_comparison",
    "RelaxParams", "assemble_kapila", "assemble_system", "build_symmetrizer",
    "GridField", "KapilaState", "StepReport", "conservative_decode",
    "conservative_encode", "hyperbolic_step", "imex_step", "integrate",
    "kapila_step", "make_bn_grid", "make_kapila_grid", "relaxation_substep",
    "EquilibriumTriple", "GasConstants", "MixtureView", "PrimitiveState",
    "build_equilibrium", "build_initial_data", "default_background",
    "default_gas", "eta_density", "mixture_view", "phase_pressure",
]

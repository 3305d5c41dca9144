"""Simulation, threshold analysis and optimal treatment control for a
TB-HIV/AIDS co-infection model."""

from .analysis import (
    NoEndemicEquilibrium, ReproductionNumbers, StabilityReport, beta_star, classify_stability,
    dfe_full, endemic_equilibrium_hiv, jacobian_hiv_dfe, numerical_jacobian, r0, r1, r2,
)
from .control import (
    CostSpec, SweepOptions, SweepResult, adjoint_rhs, evaluate_cost, fbsm_solve, hamiltonian,
    pointwise_minimizer,
)
from .integrate import IntegrationError, TimeGrid, Trajectory, integrate_backward, integrate_forward
from .model import (
    STATE_NAMES, DomainError, Params, force_of_infection_hiv, force_of_infection_tb,
    rhs_controlled, rhs_hiv_only, rhs_tb_only, rhs_uncontrolled, initial_state,
)
from .scenario import RunReport, Scenario, ScenarioError, load_scenario, run

__version__ = "0.1.0"

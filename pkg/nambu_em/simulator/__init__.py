from .integrators import (
    KINDS, IntegrationError, IntegratorSpec,
    exact_step, midpoint_step, rk4_step, cayley_propagator, generator_matrices,
    exact_propagator_matrix,
    apply_propagator, make_stepper,
)
from .simulator import (
    Trajectory, Simulator, simulate, convergence_orders, DiagnosticsPlotter,
)

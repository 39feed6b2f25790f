"""Reduced ODE system, integration and quadrature."""
from .integrate import (
    RunResult,
    Termination,
    Trajectory,
    integrate,
    integrate_two_sided,
    merge_two_sided,
    run_rk,
    write_csv,
)
from .quadrature import Radicand, TerminationPrediction, XiQuadrature, predict_termination, xi_quadrature
from .system import (
    FieldEvaluator,
    FieldValue,
    FirstIntegrals,
    SystemState,
    XiCheck,
    XiVector,
    first_integrals,
    kappa_of,
    vector_field,
    xi_derivatives,
    xi_rhs_check,
)

__all__ = [
    "FieldEvaluator", "FieldValue", "FirstIntegrals", "Radicand", "RunResult", "SystemState",
    "Termination", "TerminationPrediction", "Trajectory", "XiCheck", "XiQuadrature", "XiVector",
    "first_integrals", "integrate", "integrate_two_sided", "kappa_of", "merge_two_sided",
    "predict_termination", "run_rk", "vector_field", "write_csv", "xi_derivatives",
    "xi_quadrature", "xi_rhs_check",
]

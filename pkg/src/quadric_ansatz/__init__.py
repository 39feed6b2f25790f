"""Variation-of-quadrics solutions of Hessian equations."""
from .arrowhead import AnsatzSample, ArrowheadMatrix, assemble, char_poly, eigenvalues, hessian_sigmas, phase
from .dhym import ThetaSystem, f_theta, isotropic_flow, theta_to_coefficients
from .equations import (
    Case,
    HessianCoefficients,
    RecursiveSpec,
    build_recursive,
    classify,
    detect_recursive,
    equation_from_json,
)
from .errors import (
    AngleMismatch,
    AnsatzError,
    BranchLoss,
    DomainBoundary,
    InternalInconsistency,
    InvalidIndex,
    InvalidInput,
    InvalidStart,
    NotApplicable,
    SingularField,
    Underdetermined,
)
from .families import ClosedFormFamily, Variant, boxed_example, family_from_dict, subcritical_entire
from .ode import SystemState, Termination, Trajectory, integrate, predict_termination, xi_quadrature
from .symfun import elem_sym, elem_sym_all, elem_sym_excl

__version__ = "0.1.0"

__all__ = [
    "AngleMismatch", "AnsatzError", "AnsatzSample", "ArrowheadMatrix", "BranchLoss", "Case",
    "ClosedFormFamily", "DomainBoundary", "HessianCoefficients", "InternalInconsistency", "InvalidIndex",
    "InvalidInput", "InvalidStart", "NotApplicable", "RecursiveSpec", "SingularField", "SystemState",
    "Termination", "ThetaSystem", "Trajectory", "Underdetermined", "Variant", "assemble", "boxed_example",
    "build_recursive", "char_poly", "classify", "detect_recursive", "eigenvalues", "elem_sym",
    "elem_sym_all", "elem_sym_excl", "equation_from_json", "f_theta", "family_from_dict",
    "hessian_sigmas", "integrate", "isotropic_flow", "phase", "predict_termination",
    "subcritical_entire", "theta_to_coefficients", "xi_quadrature",
]

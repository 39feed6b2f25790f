"""First-order reduced system in the state (p, R, r, r'), R_i = 1/p'_i.

    p'_i = 1/R_i,   R'_i = -2 d_i F / F,   r'' = -G / F

Convention used everywhere: kappa = prod p'_i / F^2 (so the Hamiltonian
sum log|R_i| + 2 log|F| equals -log|kappa|).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..equations import HessianCoefficients, RecursiveSpec, structure_constants
from ..errors import InvalidInput, SingularField
from ..symfun import elem_sym_batch


@dataclass(frozen=True, eq=False)
class SystemState:
    s: float
    p: np.ndarray
    R: np.ndarray
    r: float = 0.0
    rprime: float = 0.0

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        R = np.atleast_1d(np.asarray(self.R, dtype=float))
        if p.ndim != 1 or p.shape != R.shape:
            raise InvalidInput(f"p and R must have equal length, got {p.shape} and {R.shape}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "rprime", float(self.rprime))

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def dp(self) -> np.ndarray:
        return 1.0 / self.R

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.R, [self.r, self.rprime]])

    @classmethod
    def from_vector(cls, s, y) -> "SystemState":
        y = np.asarray(y, dtype=float)
        n = (y.size - 2) // 2
        return cls(s, y[:n], y[n:2 * n], y[2 * n], y[2 * n + 1])

    @classmethod
    def from_profile(cls, s, p, dp, r=0.0, rprime=0.0) -> "SystemState":
        return cls(s, p, 1.0 / np.asarray(dp, dtype=float), r, rprime)


class FieldEvaluator:
    """Vector field of one equation, with the exclusion index table cached."""

    def __init__(self, h: HessianCoefficients):
        self.h = h
        self.n = h.n
        self.fc = h.f_coeffs
        self.gc = h.g_coeffs
        n = h.n
        self._idx = np.array([[j for j in range(n) if j != i] for i in range(n)]) if n > 1 else None

    def F_grad_G(self, p):
        sig = elem_sym_batch(p)
        F = float(sig @ self.fc)
        G = float(sig @ self.gc)
        if self._idx is None:
            grad = np.array([self.fc[1]])
        else:
            grad = elem_sym_batch(p[self._idx]) @ self.fc[1:]
        return F, grad, G

    def __call__(self, s, y):
        n = self.n
        p = y[:n]
        R = y[n:2 * n]
        F, grad, G = self.F_grad_G(p)
        if F == 0.0 or not np.isfinite(F):
            raise SingularField(f"F(p) = {F} at s = {s}", s)
        if np.any(R == 0.0):
            raise SingularField(f"R has a zero entry at s = {s}", s)
        out = np.empty_like(y)
        out[:n] = 1.0 / R
        out[n:2 * n] = -2.0 * grad / F
        out[2 * n] = y[2 * n + 1]
        out[2 * n + 1] = -G / F
        return out


@dataclass(frozen=True, eq=False)
class FieldValue:
    dp: np.ndarray
    dR: np.ndarray
    dr: float
    drprime: float
    F: float
    G: float

    @property
    def rpp(self) -> float:
        return self.drprime

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.dp, self.dR, [self.dr, self.drprime]])


def vector_field(h: HessianCoefficients, st: SystemState) -> FieldValue:
    if st.n != h.n:
        raise InvalidInput(f"state has n={st.n}, equation has n={h.n}")
    ev = FieldEvaluator(h)
    d = ev(st.s, st.to_vector())
    F, _, G = ev.F_grad_G(st.p)
    n = h.n
    return FieldValue(d[:n], d[n:2 * n], float(d[2 * n]), float(d[2 * n + 1]), F, G)


@dataclass(frozen=True, eq=False)
class XiVector:
    """xi_i = q(p_i) R_i, kappa, and offsets kappa_j = xi_1 - xi_j (offsets[0] = 0)."""

    xi: np.ndarray
    kappa: float
    offsets: np.ndarray


@dataclass(frozen=True, eq=False)
class FirstIntegrals:
    kappa: float
    hamiltonian: float
    xi: XiVector | None = None


def kappa_of(h: HessianCoefficients, st: SystemState) -> float:
    F, _ = h.F(st.p)
    return float(np.prod(1.0 / st.R) / (F * F))


def first_integrals(spec: RecursiveSpec | None, h: HessianCoefficients, st: SystemState) -> FirstIntegrals:
    F, _ = h.F(st.p)
    kappa = float(np.prod(1.0 / st.R) / (F * F))
    ham = float(np.sum(np.log(np.abs(st.R))) + 2.0 * np.log(abs(F)))
    xi = None
    if spec is not None:
        values = spec.q(st.p) * st.R
        xi = XiVector(values, kappa, values[0] - values)
    return FirstIntegrals(kappa, ham, xi)


def xi_derivatives(spec: RecursiveSpec, h: HessianCoefficients, st: SystemState) -> np.ndarray:
    """d xi_i / ds = q'(p_i) + q(p_i) R'_i for each i; all equal on recursive equations."""
    fv = vector_field(h, st)
    return spec.dq(st.p) + spec.q(st.p) * fv.dR


@dataclass(frozen=True)
class XiCheck:
    residual: float
    scale: float

    @property
    def scaled(self) -> float:
        return abs(self.residual) / self.scale


def xi_rhs_check(spec: RecursiveSpec, st: SystemState, h: HessianCoefficients | None = None) -> XiCheck:
    """(xi_1')^2 - k1 - k2 prod xi_j, with xi_1' taken from the vector field."""
    from ..equations import build_recursive

    h = build_recursive(spec) if h is None else h
    fi = first_integrals(spec, h, st)
    dxi = float(xi_derivatives(spec, h, st)[0])
    k1, k2 = structure_constants(spec, fi.kappa)
    prod = float(np.prod(fi.xi.xi))
    lhs = dxi * dxi
    res = lhs - k1 - k2 * prod
    return XiCheck(res, max(lhs + abs(k1) + abs(k2 * prod), 1e-300))

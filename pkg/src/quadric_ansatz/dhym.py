"""The theta-angle specialization: F_theta = Re(e^{-i theta} prod_j (1 + i p_j)).

Its coefficients in the sigma_k basis are c_k = cos(theta - k pi/2), which is
recursive of type (a0, a1) = (1, 0); G is then F_{theta + pi/2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equations import HessianCoefficients, RecursiveSpec, build_recursive
from .errors import InvalidInput, InvalidStart
from .ode.integrate import Termination, run_rk
from .ode.system import SystemState


@dataclass(frozen=True)
class ThetaSystem:
    n: int
    theta: float

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInput("n must be positive")

    def coef(self, k: int) -> float:
        return math.cos(self.theta - k * math.pi / 2.0)

    def coefficients(self) -> HessianCoefficients:
        return theta_to_coefficients(self)

    def recursive_spec(self) -> RecursiveSpec:
        n = self.n
        return RecursiveSpec(n, 1.0, 0.0, self.coef(n - 1), self.coef(n), self.coef(-1))

    def shifted(self, angle: float) -> "ThetaSystem":
        return ThetaSystem(self.n, self.theta + angle)


def theta_to_coefficients(ts: ThetaSystem) -> HessianCoefficients:
    c = np.array([ts.coef(k) for k in range(-1, ts.n + 1)])
    # exact zeros where cos hits a multiple of pi/2 up to rounding
    c[np.abs(c) < 1e-15] = 0.0
    return HessianCoefficients(ts.n, c)


def theta_from_recursive(ts: ThetaSystem) -> HessianCoefficients:
    """Same coefficients produced through the recursion from the top pair."""
    return build_recursive(ts.recursive_spec())


@dataclass(frozen=True, eq=False)
class FTheta:
    value: float
    perp: float
    grad: np.ndarray
    product: complex


def _others(z: np.ndarray) -> np.ndarray:
    """prod_{k != j} z_k for every j, without division."""
    n = z.size
    prefix = np.ones(n, dtype=complex)
    suffix = np.ones(n, dtype=complex)
    for j in range(1, n):
        prefix[j] = prefix[j - 1] * z[j - 1]
        suffix[n - 1 - j] = suffix[n - j] * z[n - j]
    return prefix * suffix


def f_theta(ts: ThetaSystem, p) -> FTheta:
    """F_theta, F_{theta + pi/2} and the gradient of F_theta at p."""
    p = np.asarray(p, dtype=float)
    if p.size != ts.n:
        raise InvalidInput(f"expected {ts.n} values, got {p.size}")
    z = 1.0 + 1j * p
    rot = complex(math.cos(ts.theta), -math.sin(ts.theta))
    prod = complex(np.prod(z))
    w = rot * prod
    grad = np.real(rot * 1j * _others(z))
    return FTheta(w.real, w.imag, grad, prod)


def f_theta_batch(theta: float, P) -> tuple[np.ndarray, np.ndarray]:
    """(F_theta, F_{theta+pi/2}) for P of shape (..., n)."""
    w = np.exp(-1j * theta) * np.prod(1.0 + 1j * np.asarray(P, dtype=float), axis=-1)
    return w.real, w.imag


@dataclass(frozen=True)
class AngleIdentityResiduals:
    negation: float
    modulus: float
    derivative: float
    scale: float

    def max_scaled(self) -> float:
        return max(abs(self.negation), abs(self.modulus), abs(self.derivative)) / self.scale


def lemma22_residuals(ts: ThetaSystem, p) -> AngleIdentityResiduals:
    """Residuals of F_t + F_{t+pi} = 0, F_t^2 + F_{t+pi/2}^2 = prod(1+p^2) and
    p_j F_t - (1 + p_j^2) d_j F_t = F_{t+pi/2} (maximum over j).
    """
    p = np.asarray(p, dtype=float)
    a = f_theta(ts, p)
    b = f_theta(ts.shifted(math.pi), p)
    modulus = float(np.prod(1.0 + p * p))
    r1 = a.value + b.value
    r2 = a.value ** 2 + a.perp ** 2 - modulus
    r3 = float(np.max(np.abs(p * a.value - (1.0 + p * p) * a.grad - a.perp)))
    scale = 1.0 + modulus
    return AngleIdentityResiduals(r1, r2, r3, scale)


def theta_vector_field(ts: ThetaSystem, st: SystemState) -> np.ndarray:
    """d/ds (p, R, r, r') written directly with F_theta and F_{theta+pi/2}."""
    f = f_theta(ts, st.p)
    return np.concatenate([1.0 / st.R, -2.0 * f.grad / f.value, [st.rprime, -f.perp / f.value]])


def xi_derivative_theta(ts: ThetaSystem, p) -> float:
    """Common derivative of xi_j = (1 + p_j^2)/p'_j: 2 F_{theta+pi/2} / F_theta."""
    f = f_theta(ts, p)
    return 2.0 * f.perp / f.value


@dataclass(eq=False)
class IsotropicFlow:
    """Samples of u = n phi - theta under u' = kappa' cos(u)^(2/n)."""

    n: int
    theta: float
    kappa_prime: float
    s: np.ndarray
    u: np.ndarray
    hit_forward: float | None
    hit_backward: float | None

    @property
    def phi(self) -> np.ndarray:
        return (self.u + self.theta) / self.n

    @property
    def rpp(self) -> np.ndarray:
        """r'' = tan(theta - n phi) = -tan u."""
        return -np.tan(self.u)

    @property
    def p(self) -> np.ndarray:
        return np.tan(self.phi)

    @property
    def entire_on_range(self) -> bool:
        return self.hit_forward is None and self.hit_backward is None


_COS_STOP = 1e-9


def _isotropic_leg(n, kp, u0, s0, s_end, s_eval, rtol, atol):
    expo = 2.0 / n

    def field(t, y):
        c = math.cos(y[0])
        return np.array([kp * max(c, 0.0) ** expo])

    def stop(t, y):
        return Termination.BLOW_UP if math.cos(y[0]) <= _COS_STOP else None

    res = run_rk(field, s0, [u0], s_end, rtol=rtol, atol=atol, max_step=0.05, t_eval=s_eval, stop=stop)
    hit = None
    if res.termination is not Termination.REACHED_END:
        # remaining distance to |u| = pi/2 in the cos u ~ (pi/2 - |u|) regime
        gap = math.pi / 2.0 - abs(float(res.y[-1, 0]))
        rest = gap ** (1.0 - expo) / (abs(kp) * (1.0 - expo)) if n > 2 else math.inf
        if math.isfinite(rest):
            hit = res.t_stop + math.copysign(rest, s_end - s0)
    return res, hit


def isotropic_flow(n: int, theta: float, phi0: float, kappa_prime: float, s_range=(-3.0, 3.0),
                   s_eval=None, rtol: float = 1e-11, atol: float = 1e-13) -> IsotropicFlow:
    """Integrate the isotropic angle equation on s_range (which must contain 0).

    The flow is only defined while cos(n phi - theta) > 0; reaching zero is
    reported as a finite hitting time (the F_theta = 0 set).
    """
    u0 = n * phi0 - theta
    if math.cos(u0) <= 0.0:
        raise InvalidStart(f"cos(n phi0 - theta) = {math.cos(u0)} is not positive")
    s_lo, s_hi = float(s_range[0]), float(s_range[1])
    if not s_lo <= 0.0 <= s_hi:
        raise InvalidInput("s_range must contain 0")
    if kappa_prime == 0.0:
        grid = np.asarray(s_eval if s_eval is not None else [s_lo, 0.0, s_hi], dtype=float)
        return IsotropicFlow(n, theta, 0.0, grid, np.full(grid.shape, u0), None, None)
    ev = None if s_eval is None else np.asarray(s_eval, dtype=float)
    fwd, hit_f = _isotropic_leg(n, kappa_prime, u0, 0.0, s_hi, None if ev is None else ev[ev >= 0], rtol, atol)
    bwd, hit_b = _isotropic_leg(n, kappa_prime, u0, 0.0, s_lo, None if ev is None else ev[ev < 0], rtol, atol)
    s = np.concatenate([bwd.t[::-1], fwd.t])
    u = np.concatenate([bwd.y[::-1, 0], fwd.y[:, 0]])
    keep = np.concatenate([[True], np.diff(s) > 0])
    return IsotropicFlow(n, theta, kappa_prime, s[keep], u[keep], hit_f, hit_b)


def isotropic_state(n: int, theta: float, phi0: float, kappa_prime: float, s: float = 0.0) -> SystemState:
    """Full-system seed p_j = tan(phi0) whose reduction has the given kappa'."""
    if kappa_prime <= 0:
        raise InvalidInput("kappa' must be positive to build a full-system seed")
    u0 = n * phi0 - theta
    if math.cos(u0) <= 0.0:
        raise InvalidStart(f"cos(n phi0 - theta) = {math.cos(u0)} is not positive")
    kappa = (kappa_prime / n) ** n
    dphi = kappa ** (1.0 / n) * math.cos(u0) ** (2.0 / n)
    dp = dphi / math.cos(phi0) ** 2
    return SystemState(s, np.full(n, math.tan(phi0)), np.full(n, 1.0 / dp), 0.0, 0.0)

"""Closed-form solution families, used as exact samplers and as test oracles.

All hyperbolic variants share one engine: coordinates 1 and 2 carry the n=2
hyperbolic profile with tau = s/(alpha beta),

    D1 = alpha cos(psi1) cosh(tau) - beta sin(psi1) sinh(tau),   p1' = 1/D1^2,
    D2 = beta cos(psi2) cosh(tau) - alpha sin(psi2) sinh(tau),   p2' = 1/D2^2,

and coordinates k >= 3 carry p_k = tan(psi_k), q_k = sec(psi_k) gamma_k s.
The trigonometric variant (kappa < 0) lives on a bounded s-interval.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arrowhead import AnsatzSample
from .errors import DomainBoundary, InvalidInput

_HALF_PI = math.pi / 2.0


class Variant(str, enum.Enum):
    N2_HYPERBOLIC = "N2Hyperbolic"
    N2_TRIG = "N2Trig"
    HIGHDIM_LINEAR = "HighDimLinear"
    SUBCRITICAL_ENTIRE = "SubcriticalEntire"
    BOXED_EXAMPLE = "BoxedExample"


@dataclass(frozen=True)
class Domain:
    lo: float
    hi: float

    @property
    def entire(self) -> bool:
        return math.isinf(self.lo) and math.isinf(self.hi)

    def contains(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return (s > self.lo) & (s < self.hi)

    def to_dict(self) -> dict:
        if self.entire:
            return {"entire": True}
        return {"entire": False, "lo": _jsonable(self.lo), "hi": _jsonable(self.hi)}


def _jsonable(v: float):
    return None if math.isinf(v) else float(v)


@dataclass(frozen=True)
class ClosedFormFamily:
    """Parameters of one closed-form family.

    ``psi`` always has length n and ``gamma`` length n - 2 after construction
    (use the variant constructors below).  ``r_lin`` and ``r_const`` add the
    affine part of r that the Hessian does not see.
    """

    variant: Variant
    n: int
    alpha: float = 1.0
    beta: float = 1.0
    psi: tuple = ()
    gamma: tuple = ()
    r_lin: float = 0.0
    r_const: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "psi", tuple(float(v) for v in self.psi))
        object.__setattr__(self, "gamma", tuple(float(v) for v in self.gamma))
        if self.alpha <= 0 or self.beta <= 0:
            raise InvalidInput("alpha and beta must be positive")
        if len(self.psi) != self.n:
            raise InvalidInput(f"{self.variant.value} needs {self.n} angles, got {len(self.psi)}")
        if len(self.gamma) != max(self.n - 2, 0):
            raise InvalidInput(f"{self.variant.value} needs {max(self.n - 2, 0)} gamma values")
        if self.variant in (Variant.N2_HYPERBOLIC, Variant.N2_TRIG) and self.n != 2:
            raise InvalidInput(f"{self.variant.value} is a two-variable family")
        if self.variant is not Variant.N2_TRIG and self.n < 2:
            raise InvalidInput("n must be at least 2")

    @property
    def theta(self) -> float:
        return float(sum(self.psi))

    @property
    def hyperbolic(self) -> bool:
        return self.variant is not Variant.N2_TRIG

    @property
    def kappa(self) -> float:
        """prod p'/F_theta^2 of the two-variable block."""
        k = 1.0 / (self.alpha * self.beta) ** 2
        return k if self.hyperbolic else -k

    # ------------------------------------------------------------------ profile
    def _blocks(self, s):
        s = np.asarray(s, dtype=float)
        a, b = self.alpha, self.beta
        ab = a * b
        tau = s / ab
        c1, s1 = math.cos(self.psi[0]), math.sin(self.psi[0])
        c2, s2 = math.cos(self.psi[1]), math.sin(self.psi[1])
        if self.hyperbolic:
            ch, sh = np.cosh(tau), np.sinh(tau)
            D1 = a * c1 * ch - b * s1 * sh
            N1 = a * s1 * ch + b * c1 * sh
            dD1 = (a * c1 * sh - b * s1 * ch) / ab
            D2 = b * c2 * ch - a * s2 * sh
            N2 = b * s2 * ch + a * c2 * sh
            dD2 = (b * c2 * sh - a * s2 * ch) / ab
            sign2 = 1.0
        else:
            dom = domain_of_validity(self)
            outside = ~dom.contains(s)
            if np.any(outside):
                where = float(np.atleast_1d(s)[np.atleast_1d(outside)][0])
                raise DomainBoundary(f"s = {where} is outside the domain ({dom.lo}, {dom.hi})", where)
            co, si = np.cos(tau), np.sin(tau)
            D1 = a * c1 * co - b * s1 * si
            N1 = a * s1 * co + b * c1 * si
            dD1 = (-a * c1 * si - b * s1 * co) / ab
            D2 = b * c2 * co + a * s2 * si
            N2 = b * s2 * co - a * c2 * si
            dD2 = (-b * c2 * si + a * s2 * co) / ab
            sign2 = -1.0
        bad = (D1 == 0.0) | (D2 == 0.0)
        if np.any(bad):
            where = float(np.atleast_1d(s)[np.atleast_1d(bad)][0])
            raise DomainBoundary(f"{self.variant.value} has a pole at s = {where}", where)
        return s, tau, D1, N1, dD1, D2, N2, dD2, sign2

    def sample(self, s) -> AnsatzSample:
        """Exact profile data (p, p', p'', q, q', q'', r, r', r'') at s (scalar or array)."""
        s, tau, D1, N1, dD1, D2, N2, dD2, sign2 = self._blocks(s)
        a, b = self.alpha, self.beta
        ab = a * b
        n = self.n
        shape = s.shape + (n,)
        p = np.empty(shape)
        dp = np.zeros(shape)
        d2p = np.zeros(shape)
        q = np.zeros(shape)
        dq = np.zeros(shape)
        p[..., 0] = N1 / D1
        p[..., 1] = N2 / D2
        dp[..., 0] = 1.0 / D1 ** 2
        dp[..., 1] = sign2 / D2 ** 2
        d2p[..., 0] = -2.0 * dD1 / D1 ** 3
        d2p[..., 1] = -2.0 * sign2 * dD2 / D2 ** 3
        tan_k = np.array([math.tan(v) for v in self.psi[2:]])
        sec_k = np.array([1.0 / math.cos(v) for v in self.psi[2:]])
        g = np.array(self.gamma)
        if n > 2:
            p[..., 2:] = tan_k
            q[..., 2:] = s[..., None] * (sec_k * g)
            dq[..., 2:] = sec_k * g
        lin = 1.0 + float(np.sum(g * g))
        if self.hyperbolic:
            amp = a * b * (a * a + b * b) / 8.0
            r = -amp * lin * np.sinh(2 * tau)
            dr = -(a * a + b * b) / 4.0 * lin * np.cosh(2 * tau)
            d2r = -(a * a + b * b) / (2.0 * ab) * lin * np.sinh(2 * tau)
        else:
            r = -ab * (a * a - b * b) / 8.0 * np.sin(2 * tau)
            dr = -(a * a - b * b) / 4.0 * np.cos(2 * tau)
            d2r = (a * a - b * b) / (2.0 * ab) * np.sin(2 * tau)
        quad = float(np.sum(tan_k * g * g))
        r = r + 0.5 * quad * s * s + self.r_lin * s + self.r_const
        dr = dr + quad * s + self.r_lin
        d2r = d2r + quad
        return AnsatzSample(s, p, dp, d2p, r, dr, d2r, q, dq, np.zeros(shape))

    def f_theta(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Closed forms of (F_theta, F_{theta+pi/2}) along the family."""
        s, tau, D1, _, _, D2, _, _, _ = self._blocks(s)
        a, b = self.alpha, self.beta
        sec = float(np.prod([1.0 / math.cos(v) for v in self.psi[2:]])) if self.n > 2 else 1.0
        base = a * b / (D1 * D2) * sec
        if self.hyperbolic:
            return base, base * (a * a + b * b) / (2 * a * b) * np.sinh(2 * tau)
        return base, base * (b * b - a * a) / (2 * a * b) * np.sin(2 * tau)

    def potential(self, x, s, real: bool = False):
        """u = 4 f (complex ansatz) or f = 1/2 sum p x^2 + sum q x + r (real ansatz)."""
        x = np.asarray(x, dtype=float)
        smp = self.sample(s)
        f = 0.5 * np.sum(smp.p * x * x, axis=-1) + np.sum(smp.q * x, axis=-1) + smp.r
        return f if real else 4.0 * f

    def state(self, s: float = 0.0):
        """Reduced-system state (p, R, r, r') at s; R = 1/p' needs p' != 0 in every slot."""
        from .ode.system import SystemState

        smp = self.sample(float(s))
        if np.any(smp.dp == 0.0):
            raise InvalidInput("p' vanishes in some coordinate; the reduced (p, R) state is undefined")
        return SystemState(float(s), smp.p, 1.0 / smp.dp, float(smp.r), float(smp.dr))

    # ------------------------------------------------------------------ domain
    def domain(self) -> Domain:
        return domain_of_validity(self)

    def violations(self, entire: bool = True) -> list[str]:
        return admissibility_violations(self, entire)

    def to_dict(self) -> dict:
        out = {"variant": self.variant.value, "n": self.n, "alpha": self.alpha, "beta": self.beta,
               "psi": list(self.psi), "gamma": list(self.gamma), "theta": self.theta}
        if self.r_lin or self.r_const:
            out["r_lin"], out["r_const"] = self.r_lin, self.r_const
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# ---------------------------------------------------------------------- constructors
def n2_hyperbolic(alpha: float, beta: float, psi1: float, psi2: float) -> ClosedFormFamily:
    return ClosedFormFamily(Variant.N2_HYPERBOLIC, 2, alpha, beta, (psi1, psi2), ())


def n2_trig(alpha: float, beta: float, psi1: float, psi2: float) -> ClosedFormFamily:
    return ClosedFormFamily(Variant.N2_TRIG, 2, alpha, beta, (psi1, psi2), ())


def highdim_linear(alpha: float, beta: float, psi1: float, psi2: float, gamma) -> ClosedFormFamily:
    gamma = tuple(gamma)
    n = 2 + len(gamma)
    return ClosedFormFamily(Variant.HIGHDIM_LINEAR, n, alpha, beta, (psi1, psi2) + (0.0,) * len(gamma), gamma)


def subcritical_entire(n: int, psi, gamma=None, alpha: float = 1.0, beta: float = 1.0) -> ClosedFormFamily:
    gamma = tuple(gamma) if gamma is not None else (0.0,) * (n - 2)
    return ClosedFormFamily(Variant.SUBCRITICAL_ENTIRE, n, alpha, beta, tuple(psi), gamma)


def split_phase(n: int, Theta: float, alpha: float = 1.0, beta: float = 1.0) -> tuple:
    """Angles psi_1..psi_n summing to Theta with (psi_1, psi_2) admissible and |psi_k| < pi/2.

    psi_1, psi_2 take as much of the phase as the entirety condition allows
    (at most Theta/n each); the rest is shared equally.
    """
    if n < 3:
        raise InvalidInput("phase splitting needs n >= 3")
    if abs(Theta) >= (n - 1) * _HALF_PI:
        raise InvalidInput(f"phase {Theta} is not subcritical for n={n}")
    sgn = 1.0 if Theta >= 0 else -1.0
    psi1 = sgn * min(math.atan(alpha / beta), abs(Theta) / n)
    psi2 = sgn * min(math.atan(beta / alpha), abs(Theta) / n)
    rest = (Theta - psi1 - psi2) / (n - 2)
    if abs(rest) >= _HALF_PI:
        raise InvalidInput(f"cannot split phase {Theta} with alpha={alpha}, beta={beta}")
    return (psi1, psi2) + (rest,) * (n - 2)


def boxed_example(n: int, Theta: float) -> ClosedFormFamily:
    psi = Theta / n
    fam = ClosedFormFamily(Variant.BOXED_EXAMPLE, n, 1.0, 1.0, (psi,) * n, (0.0,) * (n - 2))
    return fam


def boxed_example_closed_forms(n: int, Theta: float, s):
    """The Example's displayed (F_Theta, F_{Theta+pi/2}, dF_Theta/dp_j for j = 1, 2)."""
    psi = Theta / n
    s = np.asarray(s, dtype=float)
    c, si = math.cos(psi), math.sin(psi)
    den = c * np.cosh(s) - si * np.sinh(s)
    sec = (1.0 / c) ** (n - 2)
    F = sec / den ** 2
    Fp = sec * np.sinh(2 * s) / den ** 2
    dF = sec * (si * np.cosh(s) - c * np.sinh(s)) / den
    return F, Fp, dF


# ---------------------------------------------------------------------- validity
def _hyperbolic_pole(A: float, B: float):
    """Zero of A cosh(tau) - B sinh(tau) in tau, or None (equality |A| = |B| counts as none)."""
    if B == 0.0 or abs(A) >= abs(B):
        return None
    return math.atanh(A / B)


def _trig_window(A: float, B: float) -> tuple[float, float]:
    """Maximal tau-interval around 0 where A cos(tau) - B sin(tau) != 0."""
    if A == 0.0:
        raise DomainBoundary("denominator vanishes at s = 0", 0.0)
    delta = math.atan2(B, A)
    up = (_HALF_PI - delta) % math.pi
    if up == 0.0:
        up = math.pi
    return up - math.pi, up


def domain_of_validity(fam: ClosedFormFamily) -> Domain:
    a, b = fam.alpha, fam.beta
    ab = a * b
    p1 = fam.psi[0]
    p2 = fam.psi[1]
    if fam.hyperbolic:
        lo, hi = -math.inf, math.inf
        for A, B in ((a * math.cos(p1), b * math.sin(p1)), (b * math.cos(p2), a * math.sin(p2))):
            if A == 0.0 and B != 0.0:
                raise DomainBoundary("denominator vanishes at s = 0", 0.0)
            t0 = _hyperbolic_pole(A, B)
            if t0 is None:
                continue
            if t0 > 0:
                hi = min(hi, ab * t0)
            else:
                lo = max(lo, ab * t0)
        return Domain(lo, hi)
    l1, h1 = _trig_window(a * math.cos(p1), b * math.sin(p1))
    l2, h2 = _trig_window(b * math.cos(p2), -a * math.sin(p2))
    return Domain(ab * max(l1, l2), ab * min(h1, h2))


def admissibility_violations(fam: ClosedFormFamily, entire: bool = True) -> list[str]:
    """Human-readable list of violated parameter constraints (empty when admissible)."""
    out = []
    a, b = fam.alpha, fam.beta
    tol = 1e-12
    if fam.variant is Variant.N2_TRIG:
        if entire:
            out.append("the trigonometric family (kappa < 0) is never entire")
        return out
    p1, p2 = fam.psi[0], fam.psi[1]
    for name, v in (("psi1", p1), ("psi2", p2)):
        if abs(v) > _HALF_PI + tol:
            out.append(f"{name} = {v} is outside [-pi/2, pi/2]")
    if entire:
        if abs(math.tan(p1)) > a / b * (1 + tol):
            out.append(f"alpha/beta >= |tan psi1| fails: {a / b} < {abs(math.tan(p1))}")
        if abs(math.tan(p2)) > b / a * (1 + tol):
            out.append(f"beta/alpha >= |tan psi2| fails: {b / a} < {abs(math.tan(p2))}")
    for k, v in enumerate(fam.psi[2:], start=3):
        if abs(v) >= _HALF_PI:
            out.append(f"psi{k} = {v} is outside (-pi/2, pi/2)")
    if fam.n > 2 and abs(fam.theta) >= (fam.n - 1) * _HALF_PI:
        out.append(f"phase {fam.theta} is not subcritical for n={fam.n}")
    return out


# ---------------------------------------------------------------------- JSON
def family_from_dict(obj: dict) -> ClosedFormFamily:
    """Build a family from {"variant", "n", "alpha", "beta", "psi", "gamma", "theta"}."""
    if not isinstance(obj, dict) or "variant" not in obj:
        raise InvalidInput("family record needs a 'variant'")
    try:
        variant = Variant(obj["variant"])
    except ValueError:
        raise InvalidInput(f"unknown variant {obj['variant']!r}") from None
    a = float(obj.get("alpha", 1.0))
    b = float(obj.get("beta", 1.0))
    psi = [float(v) for v in obj.get("psi", [])]
    gamma = [float(v) for v in obj.get("gamma", [])]
    n = int(obj.get("n", 2))
    if variant is Variant.BOXED_EXAMPLE:
        if "theta" not in obj:
            raise InvalidInput("BoxedExample needs 'theta'")
        fam = boxed_example(n, float(obj["theta"]))
    elif variant is Variant.N2_HYPERBOLIC:
        fam = n2_hyperbolic(a, b, *_two(psi))
    elif variant is Variant.N2_TRIG:
        fam = n2_trig(a, b, *_two(psi))
    elif variant is Variant.HIGHDIM_LINEAR:
        if not gamma:
            gamma = [0.0] * (n - 2)
        fam = highdim_linear(a, b, *_two(psi[:2]), gamma)
    else:
        if not psi:
            if "theta" not in obj:
                raise InvalidInput("SubcriticalEntire needs 'psi' or 'theta'")
            psi = list(split_phase(n, float(obj["theta"]), a, b))
        fam = subcritical_entire(n, psi, gamma or None, a, b)
    if "r_lin" in obj or "r_const" in obj:
        fam = ClosedFormFamily(fam.variant, fam.n, fam.alpha, fam.beta, fam.psi, fam.gamma,
                               float(obj.get("r_lin", 0.0)), float(obj.get("r_const", 0.0)))
    if "theta" in obj and abs(float(obj["theta"]) - fam.theta) > 1e-12 * (1 + abs(fam.theta)):
        raise InvalidInput(f"theta {obj['theta']} does not equal the sum of angles {fam.theta}")
    return fam


def _two(psi):
    if len(psi) != 2:
        raise InvalidInput(f"expected two angles, got {len(psi)}")
    return psi[0], psi[1]


def theta_ode_residuals(fam: ClosedFormFamily, s) -> tuple[float, float, float]:
    """Max scaled residuals of the theta-angle system along the family.

    F p_j''/2 - dF/dp_j (p_j')^2,   F q_j''/2 - dF/dp_j p_j' q_j',
    F r'' - sum dF/dp_j (q_j')^2 + F_{theta+pi/2}.
    """
    from .dhym import ThetaSystem, f_theta

    ts = ThetaSystem(fam.n, fam.theta)
    smp = fam.sample(np.atleast_1d(np.asarray(s, dtype=float)))
    worst = [0.0, 0.0, 0.0]
    for i in range(smp.s.size):
        f = f_theta(ts, smp.p[i])
        dp, d2p, dq, d2q = smp.dp[i], smp.d2p[i], smp.dq[i], smp.d2q[i]
        e1 = f.value * d2p / 2 - f.grad * dp * dp
        s1 = np.abs(f.value * d2p / 2) + np.abs(f.grad * dp * dp) + 1.0
        e2 = f.value * d2q / 2 - f.grad * dp * dq
        s2 = np.abs(f.value * d2q / 2) + np.abs(f.grad * dp * dq) + 1.0
        t = float(np.sum(f.grad * dq * dq))
        e3 = f.value * smp.d2r[i] - t + f.perp
        s3 = abs(f.value * smp.d2r[i]) + abs(t) + abs(f.perp) + 1.0
        worst[0] = max(worst[0], float(np.max(np.abs(e1) / s1)))
        worst[1] = max(worst[1], float(np.max(np.abs(e2) / s2)))
        worst[2] = max(worst[2], abs(e3) / s3)
    return tuple(worst)

"""Quadrature for xi_1 on recursive equations.

xi = xi_1 obeys (xi')^2 = rho(xi) := k1 + k2 prod_j (xi - kappa_j), kappa_1 = 0.
Elapsed s along a monotone leg of xi is the integral of d xi / sqrt(rho);
legs end at simple zeros of rho (turning points) or at infinity.  Near a
simple zero the substitution xi = root +- u^2 removes the square-root
singularity; infinite tails use xi = a +- (1/t^2 - 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from ..equations import HessianCoefficients, RecursiveSpec, build_recursive, structure_constants
from ..errors import InvalidStart, NotApplicable
from .system import SystemState, first_integrals, xi_derivatives

_QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


class Radicand:
    def __init__(self, k1: float, k2: float, kappas):
        self.k1, self.k2 = float(k1), float(k2)
        self.kappas = np.asarray(kappas, dtype=float)
        self.n = self.kappas.size
        poly = self.k2 * np.poly(self.kappas) if self.n else np.array([0.0])
        poly = np.array(poly, dtype=float)
        poly[-1] += self.k1
        self.poly = poly
        self.dpoly = np.polyder(poly)

    def __call__(self, x):
        return np.polyval(self.poly, x)

    def deriv(self, x):
        return np.polyval(self.dpoly, x)

    def real_roots(self) -> np.ndarray:
        if self.k2 == 0.0:
            return np.array([])
        roots = np.roots(self.poly)
        scale = 1.0 + np.max(np.abs(roots))
        real = np.sort(roots[np.abs(roots.imag) <= 1e-7 * scale].real)
        polished = []
        for x in real:
            for _ in range(5):
                d = self.deriv(x)
                if d == 0.0:
                    break
                x = x - self(x) / d
            polished.append(x)
        return np.array(polished)

    def deflated(self, root: float):
        q, _ = np.polydiv(self.poly, np.array([1.0, -root]))
        return q


@dataclass
class Leg:
    """Monotone piece of xi(s): from ``start`` in direction ``move`` to ``end``."""

    start: float
    end: float
    move: int
    start_is_root: bool
    end_is_root: bool
    duration: float


def _leg_integral(rho: Radicand, a: float, b: float, a_root: bool, b_root: bool, weight=None) -> float:
    """Integral over the leg [a, b] (either order, b may be +-inf) of w(xi) |d xi| / sqrt(rho)."""
    if a == b:
        return 0.0
    w = weight if weight is not None else (lambda x: 1.0)
    move = 1.0 if b > a else -1.0
    total = 0.0
    if math.isinf(b):
        if rho.n <= 2 and weight is None:
            # xi grows at most exponentially: the escape takes infinite s
            return math.inf
        if a_root:
            span = 1.0 + abs(a)
            mid = a + move * span
            total += _leg_integral(rho, a, mid, True, False, weight)
            a, a_root = mid, False

        def tail(t):
            x = a + move * (1.0 / (t * t) - 1.0)
            return w(x) * 2.0 / (t ** 3 * math.sqrt(rho(x)))

        val, _ = quad(tail, 0.0, 1.0, **_QUAD)
        return total + val

    mid = 0.5 * (a + b)
    pieces = [(a, mid, a_root), (b, mid, b_root)]
    for root, other, is_root in pieces:
        if is_root:
            inner = rho.deflated(root)
            sgn = 1.0 if other > root else -1.0

            def near(u, root=root, sgn=sgn, inner=inner):
                x = root + sgn * u * u
                val = sgn * np.polyval(inner, x)
                return w(x) * 2.0 / math.sqrt(max(val, 1e-300))

            val, _ = quad(near, 0.0, math.sqrt(abs(other - root)), **_QUAD)
        else:
            lo, hi = min(root, other), max(root, other)
            val, _ = quad(lambda x: w(x) / math.sqrt(rho(x)), lo, hi, **_QUAD)
        total += val
    return total


def _is_root(rho: Radicand, x: float) -> bool:
    return abs(rho(x)) <= 1e-12 * (abs(rho.k1) + abs(rho.k2) * float(np.prod(1.0 + np.abs(x - rho.kappas))))


def _legs(rho: Radicand, xi0: float, move: int, s_cap: float, max_legs: int = 10000) -> tuple[list[Leg], str]:
    """Legs covering elapsed s up to ``s_cap`` (or until xi escapes to infinity)."""
    roots = rho.real_roots()
    legs: list[Leg] = []
    x = xi0
    at_root = _is_root(rho, x)
    if at_root and roots.size:
        nearest = float(roots[np.argmin(np.abs(roots - x))])
        if abs(nearest - x) <= 1e-8 * (1.0 + abs(x)):
            x = nearest
    if at_root:
        # leave a turning point towards the side where rho > 0
        d = rho.deriv(x)
        if d == 0.0:
            return [], "equilibrium"
        move = 1 if d > 0 else -1
    elapsed = 0.0
    note = ""
    while elapsed < s_cap and len(legs) < max_legs:
        if move > 0:
            ahead = roots[roots > x + 1e-9 * (1 + abs(x))]
        else:
            ahead = roots[roots < x - 1e-9 * (1 + abs(x))][::-1]
        if ahead.size == 0:
            dur = _leg_integral(rho, x, move * math.inf, at_root, False)
            legs.append(Leg(x, move * math.inf, move, at_root, False, dur))
            note = "escape"
            break
        target = float(ahead[0])
        if abs(rho.deriv(target)) <= 1e-10 * (1 + abs(rho.k2)):
            dur = math.inf
            legs.append(Leg(x, target, move, at_root, True, dur))
            note = "equilibrium"
            break
        dur = _leg_integral(rho, x, target, at_root, True)
        legs.append(Leg(x, target, move, at_root, True, dur))
        elapsed += dur
        x, at_root, move = target, True, -move
    return legs, note


@dataclass
class XiQuadrature:
    """xi_1(s) by quadrature; ``blowup_s`` / ``blowup_s_backward`` are inf when xi stays finite."""

    rho: Radicand
    xi0: float
    branch_sign: int
    forward: list[Leg] = field(repr=False)
    backward: list[Leg] = field(repr=False)
    blowup_s: float = math.inf
    blowup_s_backward: float = -math.inf

    def __call__(self, s: float) -> float:
        legs = self.forward if s >= 0 else self.backward
        remaining = abs(s)
        for leg in legs:
            if remaining <= leg.duration:
                return self._solve_in_leg(leg, remaining)
            remaining -= leg.duration
        raise InvalidStart(f"s = {s} is beyond the quadrature range")

    def _solve_in_leg(self, leg: Leg, tau: float) -> float:
        if tau == 0.0:
            return leg.start
        if math.isinf(leg.end):
            hi_off = 1.0
            while _leg_integral(self.rho, leg.start, leg.start + leg.move * hi_off, leg.start_is_root, False) < tau:
                hi_off *= 2.0
            b_end = leg.start + leg.move * hi_off
        else:
            b_end = leg.end

        def gap(x):
            return _leg_integral(self.rho, leg.start, x, leg.start_is_root, False) - tau

        if not math.isinf(leg.end) and abs(tau - leg.duration) <= 1e-14 * (1 + leg.duration):
            return leg.end
        lo = leg.start + leg.move * 1e-300
        return brentq(gap, lo, b_end, xtol=1e-15 * (1 + abs(b_end)), rtol=1e-15) if leg.move > 0 \
            else brentq(gap, b_end, lo, xtol=1e-15 * (1 + abs(b_end)), rtol=1e-15)


def xi_quadrature(spec: RecursiveSpec, kappa: float, offsets, xi1_start: float, branch_sign: int = 1,
                  s_cap: float = 1e3) -> XiQuadrature:
    """Solve (xi_1')^2 = k1 + k2 prod (xi_1 - kappa_j) with xi_1(0) = xi1_start.

    ``offsets`` are kappa_2..kappa_n; ``branch_sign`` is the sign of xi_1'(0)
    (ignored when xi1_start is a turning point).
    """
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    if offsets.size != spec.n - 1:
        raise InvalidStart(f"need {spec.n - 1} offsets, got {offsets.size}")
    k1, k2 = structure_constants(spec, kappa)
    rho = Radicand(k1, k2, np.concatenate([[0.0], offsets]))
    r0 = rho(xi1_start)
    if r0 < 0 and not _is_root(rho, xi1_start):
        raise InvalidStart(f"radicand is negative ({r0}) at xi_1 = {xi1_start}")
    sgn = 1 if branch_sign >= 0 else -1
    fwd, note_f = _legs(rho, xi1_start, sgn, s_cap)
    bwd, note_b = _legs(rho, xi1_start, -sgn, s_cap)
    q = XiQuadrature(rho, xi1_start, sgn, fwd, bwd)
    q.blowup_s = _escape_time(fwd, note_f)
    q.blowup_s_backward = -_escape_time(bwd, note_b)
    return q


def _escape_time(legs: list[Leg], note: str) -> float:
    if note != "escape":
        return math.inf
    return float(sum(leg.duration for leg in legs))


def _pole_distance(spec: RecursiveSpec, p0: float, up: bool) -> float:
    """Change of A = integral dp/q(p) needed for p to reach +-infinity (inf if unreachable)."""
    disc = spec.discriminant
    a1 = spec.a1
    if disc < 0:
        D = -disc
        A0 = 2.0 / math.sqrt(D) * math.atan((2.0 * p0 + a1) / math.sqrt(D))
        return (math.pi / math.sqrt(D) - A0) if up else (-math.pi / math.sqrt(D) - A0)
    q0 = spec.q(p0)
    if q0 <= 0:
        return math.inf
    roots = sorted([(-a1 - math.sqrt(disc)) / 2.0, (-a1 + math.sqrt(disc)) / 2.0])
    if disc == 0:
        A0 = -1.0 / (p0 - roots[0])
    else:
        A0 = math.log(abs((p0 - roots[1]) / (p0 - roots[0]))) / (roots[1] - roots[0])
    if up and p0 > roots[1]:
        return -A0
    if not up and p0 < roots[0]:
        return -A0
    return math.inf


@dataclass(frozen=True)
class TerminationPrediction:
    s_star: float
    cause: str  # "xi" (F -> 0 as xi escapes), "pole" (some p_j -> infinity) or "none"
    index: int | None = None


def predict_termination(spec: RecursiveSpec, st: SystemState, direction: int,
                        h: HessianCoefficients | None = None, s_cap: float = 1e3) -> TerminationPrediction:
    """Where integration from ``st`` must stop, from quadrature alone.

    The earlier of the xi escape time and the first pole of some p_j, with
    p_j' = q(p_j)/xi_j integrated as d(int dp/q) = ds/xi_j along the legs.
    """
    h = build_recursive(spec) if h is None else h
    fi = first_integrals(spec, h, st)
    xi = fi.xi.xi
    dxi = float(xi_derivatives(spec, h, st)[0])
    k1, k2 = structure_constants(spec, fi.kappa)
    rho = Radicand(k1, k2, np.concatenate([[0.0], fi.xi.offsets[1:]]))
    d = 1 if direction >= 0 else -1
    move = d * (1 if dxi >= 0 else -1)
    legs, note = _legs(rho, float(xi[0]), move, s_cap)

    escape = _escape_time(legs, note)
    best = TerminationPrediction(escape, "xi" if math.isfinite(escape) else "none")
    for j in range(spec.n):
        kj = float(fi.xi.offsets[j])
        # d A_j / d tau = d / xi_j, fixed sign along the trajectory
        sgn = d * (1 if xi[j] > 0 else -1)
        target = _pole_distance(spec, float(st.p[j]), up=sgn > 0)
        if math.isinf(target):
            continue
        need = abs(target)
        elapsed = 0.0
        acc = 0.0
        for leg in legs:
            lo_end = leg.end
            wfun = lambda x, kj=kj: 1.0 / abs(x - kj)
            if _crosses(leg, kj):
                raise NotApplicable("xi_j changes sign along a leg; pole prediction unavailable")
            gain = _leg_integral(rho, leg.start, lo_end, leg.start_is_root, leg.end_is_root, wfun)
            if acc + gain >= need:
                x_hit = _locate(rho, leg, need - acc, wfun)
                tau = elapsed + _leg_integral(rho, leg.start, x_hit, leg.start_is_root, False)
                if tau < best.s_star:
                    best = TerminationPrediction(tau, "pole", j)
                break
            acc += gain
            elapsed += leg.duration
            if elapsed > best.s_star:
                break
    return TerminationPrediction(d * best.s_star, best.cause, best.index)


def _crosses(leg: Leg, k: float) -> bool:
    lo, hi = sorted((leg.start, leg.end))
    return lo < k < hi


def _locate(rho: Radicand, leg: Leg, amount: float, wfun) -> float:
    def gap(x):
        return _leg_integral(rho, leg.start, x, leg.start_is_root, False, wfun) - amount

    if math.isinf(leg.end):
        off = 1.0
        while gap(leg.start + leg.move * off) < 0:
            off *= 2.0
        end = leg.start + leg.move * off
    else:
        end = leg.end
    a, b = sorted((leg.start + leg.move * 1e-300, end))
    return brentq(gap, a, b, xtol=1e-14 * (1 + abs(end)), rtol=1e-15)

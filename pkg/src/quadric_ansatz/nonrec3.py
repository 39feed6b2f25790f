"""Three-variable equations outside the recursive class (c_3 c_1 = c_2^2).

Two shapes occur.  With c_3 != 0 and a = c_2/c_3,
F = c_3 prod(p_j + a) + (c_0 - c_3 a^3), and xi_j = (p_j + a) R_j share one
derivative.  With c_3 = 0 (hence c_2 = 0), F = c_1 sigma_1 + c_0 and the R_j
share one derivative.  In both cases R_1 R_2 R_3 F^2 is conserved, so a cubic
constraint pins xi_1 (or R_1) to p and the system reduces to three equations
for p alone.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .equations import DetectResult, HessianCoefficients, detect_recursive
from .errors import BranchLoss, InvalidInput, SingularField
from .ode.integrate import Termination, Trajectory, blowup_stop, merge_two_sided, run_rk
from .ode.system import FieldEvaluator, SystemState

DEGENERACY_TOL = 1e-12
WINDOW_FACTOR = 10.0
COLLISION_TOL = 1e-6
DENOMINATOR_CONDITION = 1e-9


class NonRec3Kind(str, enum.Enum):
    CUBIC_SHIFT = "CubicShift"
    LINEAR = "Linear"


@dataclass(frozen=True)
class Branch:
    """Last accepted root, where it was taken, and its s-derivative there."""

    value: float
    s: float
    rate: float


@dataclass(frozen=True, eq=False)
class NonRec3Case:
    kind: NonRec3Kind
    h: HessianCoefficients
    a: float = 0.0
    c: float | None = None
    kappa2: float | None = None
    kappa3: float | None = None
    branch: Branch | None = None

    @property
    def bound(self) -> bool:
        return self.c is not None

    def reconstructed_F(self, p) -> float:
        p = np.asarray(p, dtype=float)
        c0, c1, _, c3 = self.h.f_coeffs
        if self.kind is NonRec3Kind.CUBIC_SHIFT:
            return float(c3 * np.prod(p + self.a) + (c0 - c3 * self.a ** 3))
        return float(c1 * np.sum(p) + c0)

    def tracked(self, st: SystemState) -> np.ndarray:
        """(xi_1, xi_2, xi_3) = (p + a) R, or R itself in the linear case."""
        if self.kind is NonRec3Kind.CUBIC_SHIFT:
            return (st.p + self.a) * st.R
        return st.R.copy()

    def rhs(self, p) -> float:
        """Right side of the cubic constraint y (y - kappa2)(y - kappa3) = rhs."""
        self._need_constants()
        p = np.asarray(p, dtype=float)
        F = self.h.F(p)[0]
        if F == 0.0:
            raise SingularField("F vanishes")
        if self.kind is NonRec3Kind.CUBIC_SHIFT:
            return self.c * float(np.prod(p + self.a)) / F ** 2
        return self.c / F ** 2

    def rate(self, p) -> float:
        """d/ds of the tracked quantity at p."""
        p = np.asarray(p, dtype=float)
        F = self.h.F(p)[0]
        c0, c1, _, c3 = self.h.f_coeffs
        if self.kind is NonRec3Kind.CUBIC_SHIFT:
            return 1.0 - 2.0 * c3 * float(np.prod(p + self.a)) / F
        return -2.0 * c1 / F

    def constraint_residual(self, st: SystemState) -> float:
        """Scaled residual of the cubic constraint at a full state."""
        y = self.tracked(st)[0]
        lhs = y * (y - self.kappa2) * (y - self.kappa3)
        r = self.rhs(st.p)
        return abs(lhs - r) / (1.0 + abs(lhs) + abs(r))

    def bind(self, st: SystemState) -> "NonRec3Case":
        """Fix c, kappa2, kappa3 and the branch witness from a seed state."""
        if st.n != 3:
            raise InvalidInput("the three-variable reduction needs n = 3")
        F = self.h.F(st.p)[0]
        if F == 0.0:
            raise InvalidInput("F vanishes at the seed")
        if np.any(st.R == 0.0):
            raise InvalidInput("R has a zero entry at the seed")
        y = self.tracked(st)
        k2, k3 = first_integrals3(self, st)
        c = float(np.prod(st.R)) * F ** 2
        return replace(self, c=c, kappa2=k2, kappa3=k3, branch=Branch(float(y[0]), st.s, self.rate(st.p)))

    def _need_constants(self):
        if self.c is None:
            raise InvalidInput("case constants are unset; call bind(state) first")


def detect3(h: HessianCoefficients) -> DetectResult | NonRec3Case:
    """Route a three-variable equation: recursive when c_3 c_1 != c_2^2, else a NonRec3Case."""
    if h.n != 3:
        raise InvalidInput("detect3 needs n = 3")
    c0, c1, c2, c3 = h.f_coeffs
    scale = float(np.max(np.abs(h.f_coeffs))) ** 2
    if abs(c3 * c1 - c2 * c2) > DEGENERACY_TOL * scale:
        return detect_recursive(h)
    if c3 != 0.0:
        return NonRec3Case(NonRec3Kind.CUBIC_SHIFT, h, a=float(c2 / c3))
    return NonRec3Case(NonRec3Kind.LINEAR, h)


def first_integrals3(case: NonRec3Case, st: SystemState) -> tuple[float, float]:
    """(I_2, I_3): xi_1 - xi_j for j = 2, 3 (xi = (p + a) R, or R in the linear case)."""
    y = case.tracked(st)
    return float(y[0] - y[1]), float(y[0] - y[2])


def _cubic_roots(k2: float, k3: float, rhs: float) -> np.ndarray:
    coeffs = [1.0, -(k2 + k3), k2 * k3, -rhs]
    roots = np.roots(coeffs)
    scale = 1.0 + np.max(np.abs(roots))
    real = np.sort(roots[np.abs(roots.imag) <= 1e-7 * scale].real)

    def polish(x):
        for _ in range(3):
            f = ((x - k2 - k3) * x + k2 * k3) * x - rhs
            df = (3 * x - 2 * (k2 + k3)) * x + k2 * k3
            if df == 0.0:
                break
            x = x - f / df
        return x

    return np.array([polish(x) for x in real])


def track_root(case: NonRec3Case, p, branch: Branch, s: float | None = None) -> float:
    """Real root of the cubic constraint at p continuing ``branch``.

    The root must lie within 10 * |rate| * |s - branch.s| (plus a small floor)
    of the witness; when s is omitted only the floor applies.  A root closer
    than the collision tolerance to another real root is not continued.
    """
    case._need_constants()
    roots = _cubic_roots(case.kappa2, case.kappa3, case.rhs(p))
    if roots.size == 0:
        raise BranchLoss("the constraint cubic has no real root")
    i = int(np.argmin(np.abs(roots - branch.value)))
    y = float(roots[i])
    ds = 0.0 if s is None else abs(s - branch.s)
    floor = 1e-6 * (1.0 + abs(branch.value))
    window = WINDOW_FACTOR * abs(branch.rate) * ds + floor
    if abs(y - branch.value) > window:
        raise BranchLoss(f"nearest real root {y!r} is outside the continuity window around {branch.value!r}")
    others = np.delete(roots, i)
    if others.size and np.min(np.abs(others - y)) < COLLISION_TOL * (1.0 + abs(y)):
        raise BranchLoss(f"roots collide near {y!r}; the branch is not continued")
    return y


def _reduced_field(case: NonRec3Case, witness: list, lost: list):
    ev = FieldEvaluator(case.h)
    k = np.array([0.0, case.kappa2, case.kappa3])

    def fun(s, y):
        p = y[:3]
        F, _, G = ev.F_grad_G(p)
        if F == 0.0 or not np.isfinite(F):
            raise SingularField(f"F vanishes at s = {s}", s)
        try:
            root = track_root(case, p, witness[0], s)
        except BranchLoss as exc:
            # a trial stage outside the window only shrinks the step
            lost.append(exc)
            raise SingularField(str(exc), s) from exc
        den = root - k
        if np.any(den == 0.0):
            raise SingularField(f"denominator vanishes at s = {s}", s)
        dp = (p + case.a) / den if case.kind is NonRec3Kind.CUBIC_SHIFT else 1.0 / den
        return np.concatenate([dp, [y[4], -G / F]])

    return ev, fun, k


def _leg(case: NonRec3Case, init: SystemState, s_end: float, rtol, atol, max_step, s_eval):
    witness = [case.branch]
    history = [case.branch]
    lost: list[BranchLoss] = []
    ev, fun, k = _reduced_field(case, witness, lost)

    def on_step(s, y):
        root = track_root(case, y[:3], witness[0], s)
        witness[0] = Branch(root, s, case.rate(y[:3]))
        history.append(witness[0])

    reasons: list[str] = []
    base_stop = blowup_stop(ev, reasons, fun)

    def stop(s, y):
        # xi_1 - kappa_j cancelling to rounding means p_j is at its pole
        root = witness[0].value
        if np.any(np.abs(root - k) <= DENOMINATOR_CONDITION * (abs(root) + np.abs(k))):
            reasons.append("a reduced denominator has cancelled to the rounding level")
            return Termination.BLOW_UP
        return base_stop(s, y)

    y0 = np.concatenate([init.p, [init.r, init.rprime]])
    res = run_rk(fun, init.s, y0, s_end, rtol=rtol, atol=atol, max_step=max_step, t_eval=s_eval,
                 stop=stop, on_step=on_step)
    m = res.t.size
    full = np.empty((m, 8))
    F = np.empty(m)
    G = np.empty(m)
    # each output sample is re-solved from the witness of the step that produced it
    d = 1.0 if s_end >= init.s else -1.0
    marks = d * np.array([b.s for b in history])
    for i in range(m):
        p = res.y[i, :3]
        j = max(int(np.searchsorted(marks, d * res.t[i], side="left")) - 1, 0)
        root = track_root(case, p, history[j], res.t[i]) if i or res.t[i] != init.s else case.branch.value
        tracked = root - k
        R = tracked / (p + case.a) if case.kind is NonRec3Kind.CUBIC_SHIFT else tracked
        full[i] = np.concatenate([p, R, res.y[i, 3:]])
        F[i], _, G[i] = ev.F_grad_G(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        rpp = -G / F
    s_star = res.t_stop if res.termination is not Termination.REACHED_END else None
    traj = Trajectory(3, res.t, full, rpp, F, G, res.termination, s_star, reasons[-1] if reasons else res.message,
                      {"case": case.kind.value})
    if lost and res.message == "singular stage evaluations":
        exc = lost[-1]
        exc.trajectory = traj
        raise exc
    return traj


def integrate3(case: NonRec3Case, init: SystemState, s_range, *, rtol: float = 1e-10, atol: float = 1e-12,
               max_step: float = 0.05, s_eval=None) -> Trajectory:
    """Integrate the reduced system in p alone.

    ``s_range`` is either an end point or a pair (s_min, s_max) around the
    seed, in which case both directions are run and merged.  A BranchLoss
    carries the part computed before the loss as ``.trajectory``.
    """
    if init.n != 3:
        raise InvalidInput("integrate3 needs a three-variable state")
    bound = case.bind(init)
    if np.ndim(s_range) == 0:
        return _leg(bound, init, float(s_range), rtol, atol, max_step, s_eval)
    lo, hi = map(float, s_range)
    if not lo <= init.s <= hi:
        raise InvalidInput("s_range must contain the seed")
    ev = None if s_eval is None else np.asarray(s_eval, dtype=float)
    legs, lost = [], None
    for end, pick in ((lo, ev <= init.s if ev is not None else None), (hi, ev >= init.s if ev is not None else None)):
        try:
            legs.append(_leg(bound, init, end, rtol, atol, max_step, None if ev is None else ev[pick]))
        except BranchLoss as exc:
            legs.append(exc.trajectory)
            lost = exc
    joined = _join_eval(*legs) if ev is not None else merge_two_sided(*legs)
    if lost is not None:
        lost.trajectory = joined
        raise lost
    return joined


def _join_eval(back: Trajectory, fwd: Trajectory) -> Trajectory:
    s = np.concatenate([back.s[::-1], fwd.s])
    keep = np.concatenate([[True], np.diff(s) > 0]) if s.size else np.array([], dtype=bool)
    cat = lambda a, b: np.concatenate([a[::-1], b])[keep]
    return Trajectory(3, s[keep], cat(back.y, fwd.y), cat(back.rpp, fwd.rpp), cat(back.F, fwd.F),
                      cat(back.G, fwd.G), fwd.termination, fwd.s_star, fwd.message,
                      {**fwd.extra, "backward_termination": back.termination.value,
                       "backward_s_star": back.s_star})


def describe(case: NonRec3Case) -> str:
    if case.kind is NonRec3Kind.CUBIC_SHIFT:
        return f"n=3 non-recursive, CubicShift a={case.a:.17g}"
    return "n=3 non-recursive, Linear"


__all__ = [
    "Branch", "NonRec3Case", "NonRec3Kind", "describe", "detect3", "first_integrals3", "integrate3",
    "track_root",
]

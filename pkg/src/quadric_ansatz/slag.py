"""Special Lagrangian side of the ansatz.

The real potential f = 1/2 sum p_j x_j^2 + sum q_j x_j + r has the same
bordered Hessian as the complex one, so its graph of grad f in C^{n+1} is
special Lagrangian with the same phase.  When every p'_j > 0 and kappa > 0 the
graph is also one chart of an evolving-quadrics submanifold whose data (w, beta)
satisfy a polynomial ODE that stays regular where p blows up.

The quadric coordinates are called ``zeta`` here; ``xi`` is reserved for the
first integrals of the reduced system.
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass

import numpy as np

from .arrowhead import AnsatzSample
from .dhym import ThetaSystem, f_theta
from .errors import AngleMismatch, InvalidInput, NotApplicable
from .ode.integrate import Termination, run_rk
from .ode.system import SystemState
from .verify import Grid, ResidualReport, Sampler, lyz_residual

_ANGLE_TOL = 1e-9


def slag_residual(theta: float, sampler: Sampler, grid: Grid, threads: int = 1,
                  keep_points: bool = False) -> ResidualReport:
    """Im(e^{-i theta} det(I + i D^2 f)) at every grid point (sigma expansion)."""
    report = lyz_residual(theta, sampler, grid, threads=threads, keep_points=keep_points)
    report.extra["kind"] = "slag"
    return report


def graph_map(sampler: Sampler):
    """(x, s) -> (x + i grad_x f, s + i df/ds) in C^{n+1}; x has shape (..., n), s shape (...)."""

    def point(x, s):
        x = np.asarray(x, dtype=float)
        s = np.asarray(s, dtype=float)
        flat_s = np.atleast_1d(s).ravel()
        smp = sampler(flat_s)
        shape = np.broadcast_shapes(x.shape[:-1], s.shape)
        X = np.broadcast_to(x, shape + x.shape[-1:]).reshape(-1, x.shape[-1])
        idx = np.broadcast_to(np.arange(flat_s.size).reshape(s.shape) if s.ndim else 0, shape).ravel()
        p, dp, q, dq = smp.p[idx], smp.dp[idx], smp.q[idx], smp.dq[idx]
        z = X + 1j * (p * X + q)
        last = flat_s[idx] + 1j * (0.5 * np.sum(dp * X * X, axis=-1) + np.sum(dq * X, axis=-1) + smp.dr[idx])
        out = np.concatenate([z, last[:, None]], axis=-1)
        return out.reshape(shape + (x.shape[-1] + 1,))

    return point


def symplectic_pullback(sampler: Sampler, x, s, step: float = 1e-3) -> float:
    """max |sum_j dx_j ^ dy_j (u, v)| over coordinate tangent pairs (fourth-order differences)."""
    gm = graph_map(sampler)
    x = np.asarray(x, dtype=float)
    n = x.size
    tangents = []
    for k in range(n + 1):
        e = np.zeros(n + 1)
        e[k] = step
        f1 = gm(x + e[:n], s + e[n]) - gm(x - e[:n], s - e[n])
        f2 = gm(x + 2 * e[:n], s + 2 * e[n]) - gm(x - 2 * e[:n], s - 2 * e[n])
        tangents.append((8 * f1 - f2) / (12 * step))
    worst = 0.0
    for a in range(n + 1):
        for b in range(a + 1, n + 1):
            u, v = tangents[a], tangents[b]
            w = float(np.sum(u.real * v.imag - u.imag * v.real))
            worst = max(worst, abs(w))
    return worst


@dataclass(frozen=True, eq=False)
class JoyceState:
    t: float
    w: np.ndarray
    beta: complex

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInput("w must be a non-empty vector")
        if np.any(np.abs(w) == 0.0):
            raise InvalidInput("every w_j must be nonzero")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "beta", complex(self.beta))

    @property
    def n(self) -> int:
        return self.w.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.w.real, self.w.imag, [self.beta.real, self.beta.imag]])

    @classmethod
    def from_vector(cls, t, y) -> "JoyceState":
        n = (len(y) - 2) // 2
        return cls(t, y[:n] + 1j * y[n:2 * n], complex(y[2 * n], y[2 * n + 1]))


def required_theta(n: int) -> float:
    """The angle with e^{i theta} i^n = -i, reduced to (-pi, pi]."""
    t = math.remainder(-(n + 1) * math.pi / 2.0, 2 * math.pi)
    return math.pi if t == -math.pi else t


def check_angle(n: int, theta: float) -> None:
    if abs(cmath.exp(1j * theta) * (1j ** n) + 1j) > _ANGLE_TOL:
        req = required_theta(n)
        raise AngleMismatch(f"required theta = {req!r} (e^(i theta) i^n = -i); got {theta!r}", req)


def _state_kappa(ts: ThetaSystem, st: SystemState) -> float:
    F = f_theta(ts, st.p).value
    if F == 0.0:
        raise NotApplicable("F_theta vanishes at this state")
    return float(np.prod(1.0 / st.R)) / F ** 2


def _applicable(ts: ThetaSystem, st: SystemState) -> float:
    if np.any(st.R <= 0.0):
        raise NotApplicable("the quadric correspondence needs p'_j > 0 for every j")
    check_angle(ts.n, ts.theta)
    return _state_kappa(ts, st)


def _orientation(ts: ThetaSystem, st: SystemState) -> np.ndarray:
    """Signs applied to w: where F_theta < 0 the first coordinate is flipped."""
    signs = np.ones(st.n)
    if f_theta(ts, st.p).value < 0.0:
        signs[0] = -1.0
    return signs


def joyce_map(st: SystemState, theta: float) -> JoyceState:
    """t = sqrt(kappa) s, w_j = i(1 + i p_j)/sqrt(p'_j), beta = i(s + i r').

    Where F_theta < 0 (beyond a pole of some p_j) w_1 carries an extra sign,
    which is the branch the (w, beta) flow continues into.
    """
    ts = ThetaSystem(st.n, theta)
    kappa = _applicable(ts, st)
    w = 1j * (1.0 + 1j * st.p) * np.sqrt(st.R) * _orientation(ts, st)
    return JoyceState(math.sqrt(kappa) * st.s, w, 1j * (st.s + 1j * st.rprime))


def zeta_of(st: SystemState, x) -> np.ndarray:
    """Quadric coordinates zeta_j = sqrt(p'_j) x_j."""
    return np.asarray(x, dtype=float) / np.sqrt(st.R)


def joyce_field(js: JoyceState) -> tuple[np.ndarray, complex]:
    """(dw/dt, dbeta/dt) = (conj(prod_{k != j} w_k), conj(prod w))."""
    w = js.w
    others = np.array([np.prod(np.delete(w, j)) for j in range(w.size)])
    return np.conj(others), complex(np.conj(np.prod(w)))


def joyce_derivatives(st: SystemState, theta: float) -> tuple[np.ndarray, complex]:
    """dw/dt and dbeta/dt along the reduced flow, by the chain rule through (p, R, r')."""
    ts = ThetaSystem(st.n, theta)
    kappa = _applicable(ts, st)
    f = f_theta(ts, st.p)
    dp = 1.0 / st.R
    dR = -2.0 * f.grad / f.value
    rpp = -f.perp / f.value
    sq = np.sqrt(st.R)
    dw_ds = 1j * (1j * dp * sq + (1.0 + 1j * st.p) * dR / (2.0 * sq)) * _orientation(ts, st)
    dbeta_ds = 1j - rpp
    scale = 1.0 / math.sqrt(kappa)
    return dw_ds * scale, complex(dbeta_ds * scale)


@dataclass(frozen=True)
class JoyceResidual:
    absolute: float
    scaled: float
    samples: int


def _states(source, s_values=None):
    if isinstance(source, SystemState):
        return [source]
    if hasattr(source, "state") and hasattr(source, "s") and not callable(getattr(source, "sample", None)):
        return [source.state(i) for i in range(len(source.s))]
    if hasattr(source, "state"):
        if s_values is None:
            raise InvalidInput("a family needs explicit s values")
        return [source.state(float(s)) for s in s_values]
    return list(source)


def joyce_residual(source, theta: float, s_values=None) -> JoyceResidual:
    """max over samples of |dw/dt - conj(prod_{k!=j} w_k)| and |dbeta/dt - conj(prod w)|.

    ``source`` is a Trajectory, a closed-form family (with ``s_values``), a
    single SystemState or an iterable of states.
    """
    worst = worst_scaled = 0.0
    count = 0
    for st in _states(source, s_values):
        js = joyce_map(st, theta)
        dw, db = joyce_derivatives(st, theta)
        rw, rb = joyce_field(js)
        err = max(float(np.max(np.abs(dw - rw))), abs(db - rb))
        worst = max(worst, err)
        worst_scaled = max(worst_scaled, err / max(1.0, float(abs(np.prod(js.w)))))
        count += 1
    return JoyceResidual(worst, worst_scaled, count)


def quadric_point(js: JoyceState, zeta) -> np.ndarray:
    """(w_1 zeta_1, ..., w_n zeta_n, beta - |zeta|^2/2); zeta may have shape (..., n)."""
    zeta = np.asarray(zeta, dtype=float)
    head = js.w * zeta
    last = js.beta - 0.5 * np.sum(zeta * zeta, axis=-1)
    return np.concatenate([head, np.asarray(last)[..., None]], axis=-1)


def frame_determinant(js: JoyceState, zeta) -> complex:
    """det of the tangent frame (d/dzeta_1, ..., d/dzeta_n, d/dt) of the quadric family."""
    zeta = np.asarray(zeta, dtype=float)
    n = js.n
    dw, db = joyce_field(js)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    for j in range(n):
        M[j, j] = js.w[j]
        M[n, j] = -zeta[j]
        M[j, n] = dw[j] * zeta[j]
    M[n, n] = db
    return complex(np.linalg.det(M))


@dataclass(eq=False)
class JoyceTrajectory:
    t: np.ndarray
    w: np.ndarray
    beta: np.ndarray
    termination: Termination

    def state(self, i: int) -> JoyceState:
        return JoyceState(float(self.t[i]), self.w[i], complex(self.beta[i]))

    def __len__(self):
        return self.t.size

    def frame_residual(self, zetas, theta_tilde: float = 0.0) -> float:
        """max |Im(e^{-i theta~} det(frame))| / |det(frame)| over samples and zeta values."""
        rot = cmath.exp(-1j * theta_tilde)
        worst = 0.0
        for i in range(len(self)):
            js = self.state(i)
            for z in zetas:
                d = frame_determinant(js, z)
                if d != 0.0:
                    worst = max(worst, abs((rot * d).imag) / abs(d))
        return worst

    def point_cloud(self, zetas) -> np.ndarray:
        """Quadric points for every (t, zeta), shape (len(t) * len(zetas), n+1)."""
        zetas = np.asarray(zetas, dtype=float)
        return np.concatenate([quadric_point(self.state(i), zetas) for i in range(len(self))])


def continue_joyce(js0: JoyceState, t_end: float, t_eval=None, rtol: float = 1e-12, atol: float = 1e-14,
                   max_step: float = 0.01) -> JoyceTrajectory:
    """Integrate the (w, beta) system from js0 to t_end; nothing special happens where p blows up."""
    n = js0.n

    def fun(t, y):
        dw, db = joyce_field(JoyceState.from_vector(t, y))
        return np.concatenate([dw.real, dw.imag, [db.real, db.imag]])

    def stop(t, y):
        w = y[:n] + 1j * y[n:2 * n]
        return Termination.BLOW_UP if np.any(np.abs(w) == 0.0) or not np.all(np.isfinite(y)) else None

    res = run_rk(fun, js0.t, js0.to_vector(), t_end, rtol=rtol, atol=atol, max_step=max_step,
                 t_eval=t_eval, stop=stop)
    w = res.y[:, :n] + 1j * res.y[:, n:2 * n]
    beta = res.y[:, 2 * n] + 1j * res.y[:, 2 * n + 1]
    return JoyceTrajectory(res.t, w, beta, res.termination)


def write_point_cloud(path, points: np.ndarray) -> None:
    points = np.atleast_2d(points)
    m = points.shape[1]
    header = [f"{part}(z{j + 1})" for j in range(m) for part in ("re", "im")]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in points:
            wr.writerow([f"{v:.17g}" for z in row for v in (z.real, z.imag)])


def graph_sampler_state(sample: AnsatzSample) -> SystemState:
    """Reduced state from a single-s sample without linear terms."""
    if sample.has_linear_terms:
        raise NotApplicable("linear terms q_j are outside the quadric correspondence")
    return SystemState(float(np.atleast_1d(sample.s)[0]), np.ravel(sample.p), 1.0 / np.ravel(sample.dp),
                       float(np.ravel(sample.r)[0]), float(np.ravel(sample.dr)[0]))

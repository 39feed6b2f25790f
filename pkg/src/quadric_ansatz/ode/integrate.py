"""Adaptive integration of the reduced system with termination detection.

Stepping is delegated to scipy's Dormand-Prince 5(4) pair, driven one step at
a time so that sign events, blow-up checks and per-step hooks can be applied
between accepted steps.  scipy controls the RMS of the scaled error; passing
tolerances divided by sqrt(dim) turns that into the per-component bound
|err_i| <= atol + rtol |y_i|.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import brentq

from ..equations import HessianCoefficients, RecursiveSpec
from ..errors import InvalidInput, SingularField
from ..symfun import elem_sym_batch
from .system import FieldEvaluator, SystemState

P_BLOWUP = 1e12


class Termination(str, enum.Enum):
    REACHED_END = "ReachedEnd"
    BLOW_UP = "BlowUp"
    F_VANISHED = "FVanished"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass
class RunResult:
    t: np.ndarray
    y: np.ndarray
    termination: Termination
    t_stop: float | None
    message: str = ""
    steps: int = 0


SignEvent = Callable[[float, np.ndarray], float]


def _underflow_kind(fun, t, y) -> Termination:
    try:
        f = fun(t, y)
    except (SingularField, ZeroDivisionError, FloatingPointError):
        return Termination.BLOW_UP
    ynorm = float(np.max(np.abs(y)))
    fnorm = float(np.max(np.abs(f)))
    if not np.isfinite(fnorm) or ynorm > P_BLOWUP or fnorm > 1e6 * (1.0 + ynorm):
        return Termination.BLOW_UP
    return Termination.STEP_UNDERFLOW


def run_rk(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float = 0.05,
    t_eval: Sequence[float] | None = None,
    sign_events: Sequence[tuple[SignEvent, Termination]] = (),
    stop: Callable[[float, np.ndarray], Termination | None] | None = None,
    on_step: Callable[[float, np.ndarray], None] | None = None,
) -> RunResult:
    """Integrate y' = fun(t, y) from t0 towards t_end.

    ``sign_events`` terminate at a located sign change of g(t, y) (bisected on
    the dense output to 1e-10 in t).  ``stop`` is checked after every accepted
    step.  When ``t_eval`` is given only those points (plus the termination
    point) are returned, otherwise every accepted step is.
    """
    if rtol <= 0 or atol <= 0 or max_step <= 0:
        raise InvalidInput("tolerances and max_step must be positive")
    y0 = np.asarray(y0, dtype=float)
    direction = 1.0 if t_end >= t0 else -1.0
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        t_eval = t_eval[direction * (t_eval - t0) >= 0]
        t_eval = t_eval[np.argsort(direction * t_eval)]
    ts: list[float] = []
    ys: list[np.ndarray] = []
    eval_pos = 0

    def emit(t, y):
        ts.append(float(t))
        ys.append(np.array(y, dtype=float))

    if t_eval is None:
        emit(t0, y0)
    else:
        while eval_pos < t_eval.size and t_eval[eval_pos] == t0:
            emit(t0, y0)
            eval_pos += 1

    def finish(term, t_stop, msg, steps):
        keep = t_eval is None or term is not Termination.REACHED_END
        if keep and (not ts or direction * (t_stop - ts[-1]) > 0):
            emit(t_stop, last_y[0])
        return RunResult(np.array(ts), np.array(ys).reshape(len(ts), y0.size), term, t_stop, msg, steps)

    last_y = [y0]
    if t_end == t0:
        return finish(Termination.REACHED_END, t0, "empty range", 0)

    scale = math.sqrt(y0.size)
    solver = RK45(fun, t0, y0, t_end, rtol=rtol / scale, atol=atol / scale, max_step=max_step)
    g_prev = [g(t0, y0) for g, _ in sign_events]
    steps = 0
    while solver.status == "running":
        t_old, y_old = solver.t, solver.y.copy()
        try:
            solver.step()
        except (SingularField, ZeroDivisionError, FloatingPointError):
            solver.h_abs *= 0.25
            if solver.h_abs < 1e-14 * (1.0 + abs(t_old)):
                last_y[0] = y_old
                return finish(_underflow_kind(fun, t_old, y_old), t_old, "singular stage evaluations", steps)
            continue
        if solver.status == "failed":
            last_y[0] = y_old
            return finish(_underflow_kind(fun, t_old, y_old), t_old, str(solver.status), steps)
        steps += 1
        t_new, y_new = solver.t, solver.y.copy()
        dense = None

        for idx, (g, term) in enumerate(sign_events):
            g_new = g(t_new, y_new)
            if g_prev[idx] * g_new < 0 or g_new == 0.0:
                dense = dense or solver.dense_output()
                if g_new == 0.0:
                    t_star = t_new
                else:
                    t_star = brentq(lambda t: g(t, dense(t)), t_old, t_new, xtol=1e-10, rtol=4 * np.finfo(float).eps)
                if t_eval is not None:
                    while eval_pos < t_eval.size and direction * (t_eval[eval_pos] - t_star) < 0:
                        emit(t_eval[eval_pos], dense(t_eval[eval_pos]))
                        eval_pos += 1
                last_y[0] = dense(t_star)
                return finish(term, float(t_star), "sign event", steps)
            g_prev[idx] = g_new

        if t_eval is None:
            emit(t_new, y_new)
        else:
            while eval_pos < t_eval.size and direction * (t_eval[eval_pos] - t_new) <= 0:
                te = t_eval[eval_pos]
                if te == t_new:
                    emit(te, y_new)
                else:
                    dense = dense or solver.dense_output()
                    emit(te, dense(te))
                eval_pos += 1
        last_y[0] = y_new
        if on_step is not None:
            on_step(t_new, y_new)
        if stop is not None:
            reason = stop(t_new, y_new)
            if reason is not None:
                return finish(reason, t_new, "stop condition", steps)
        if solver.status == "running" and solver.step_size < 1e-14 * (1.0 + abs(t_new)):
            return finish(_underflow_kind(fun, t_new, y_new), t_new, "step size underflow", steps)
    return finish(Termination.REACHED_END, float(t_end), "reached end", steps)


@dataclass(eq=False)
class Trajectory:
    """Samples (s, p, R, r, r') of one integration run plus r'', F, G."""

    n: int
    s: np.ndarray
    y: np.ndarray
    rpp: np.ndarray
    F: np.ndarray
    G: np.ndarray
    termination: Termination
    s_star: float | None
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def p(self) -> np.ndarray:
        return self.y[:, : self.n]

    @property
    def R(self) -> np.ndarray:
        return self.y[:, self.n: 2 * self.n]

    @property
    def r(self) -> np.ndarray:
        return self.y[:, 2 * self.n]

    @property
    def rprime(self) -> np.ndarray:
        return self.y[:, 2 * self.n + 1]

    def __len__(self):
        return self.s.size

    def state(self, i: int) -> SystemState:
        return SystemState.from_vector(self.s[i], self.y[i])

    def kappa(self) -> np.ndarray:
        return np.prod(1.0 / self.R, axis=1) / self.F ** 2

    def hamiltonian(self) -> np.ndarray:
        return np.sum(np.log(np.abs(self.R)), axis=1) + 2.0 * np.log(np.abs(self.F))

    def xi(self, spec: RecursiveSpec) -> np.ndarray:
        return spec.q(self.p) * self.R

    def conditioned(self, bound: float = 1e4) -> np.ndarray:
        """Mask of samples away from blow-up, where F is not cancelling catastrophically.

        Sizes are measured against the smallest sample, so merged two-sided
        runs (which start at a blow-up end) are handled too.
        """
        size = np.max(np.abs(self.y), axis=1)
        ref = float(np.min(size)) if len(self) else 0.0
        return size <= bound * (1.0 + ref)

    def invariant_drift(self, spec: RecursiveSpec | None = None) -> dict:
        mask = self.conditioned()
        out = {"samples": int(mask.sum())}
        if not mask.any():
            return out
        kap = self.kappa()[mask]
        out["kappa_relative"] = float(np.max(np.abs(kap / kap[0] - 1.0)))
        ham = self.hamiltonian()[mask]
        out["hamiltonian"] = float(np.max(np.abs(ham - ham[0])))
        if spec is not None:
            xi = self.xi(spec)[mask]
            off = xi[:, :1] - xi
            out["xi_offsets"] = float(np.max(np.abs(off - off[0]))) if xi.shape[1] > 1 else 0.0
        return out

    def summary(self, spec: RecursiveSpec | None = None) -> dict:
        return {
            "termination": self.termination.value,
            "s_star": self.s_star if self.termination is not Termination.REACHED_END else None,
            "s_last": float(self.s[-1]) if len(self) else None,
            "samples": len(self),
            "invariant_drift": self.invariant_drift(spec),
        }

    def rows(self, spec: RecursiveSpec | None = None) -> tuple[list[str], np.ndarray]:
        n = self.n
        header = ["s"] + [f"p{i + 1}" for i in range(n)] + [f"R{i + 1}" for i in range(n)]
        header += ["r", "rprime", "rpp", "F", "kappa"]
        cols = [self.s[:, None], self.y, self.rpp[:, None], self.F[:, None], self.kappa()[:, None]]
        if spec is not None:
            header += [f"xi{i + 1}" for i in range(n)]
            cols.append(self.xi(spec))
        return header, np.hstack(cols)

    def to_csv(self, path, spec: RecursiveSpec | None = None) -> None:
        header, data = self.rows(spec)
        write_csv(path, header, data)

    def to_json(self, path, spec: RecursiveSpec | None = None) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(spec), fh, indent=2)


def write_csv(path, header, data) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in data:
            w.writerow([f"{v:.17g}" for v in row])


def _f_sign_event(ev: FieldEvaluator):
    def g(t, y):
        return ev.F_grad_G(y[: ev.n])[0]

    return g


F_CONDITION = 1e-9
RATE_BLOWUP = 1e4
POLE_SLOPE = 1e-2


def blowup_stop(ev: FieldEvaluator, reasons: list | None = None, field=None):
    """Stop at |p| > 1e12, or when F has cancelled to below 1e-9 of its terms.

    A cancelled F is a blow-up when some component e-folds faster than 1e4
    per unit s, or when the fastest component looks like a pole: for
    y ~ C (s* - s)^(-a) the ratio y/y' has slope -1/a, while exponential
    growth (F decaying on entire two-variable solutions) gives slope 0.  The
    latter state is rounding-limited rather than singular and is reported as
    StepUnderflow.  ``field`` is
    the right-hand side whose state starts with p (the full field by default).
    """
    n = ev.n
    field = ev if field is None else field
    absf = np.abs(ev.fc)

    def stop(t, y):
        p = y[:n]
        if not np.all(np.isfinite(y)) or np.max(np.abs(p)) > P_BLOWUP:
            return Termination.BLOW_UP
        F = ev.F_grad_G(p)[0]
        terms = float(absf @ np.abs(elem_sym_batch(p)))
        if abs(F) >= F_CONDITION * terms:
            return None
        try:
            f = field(t, y)
        except SingularField:
            return Termination.BLOW_UP
        live = np.abs(y) > 0
        rate = float(np.max(np.abs(f[live] / y[live]))) if live.any() else math.inf
        if rate > RATE_BLOWUP or _pole_slope(field, t, y, f, live) < -POLE_SLOPE:
            return Termination.BLOW_UP
        if reasons is not None:
            reasons.append("F has cancelled to the rounding level of its terms")
        return Termination.STEP_UNDERFLOW

    return stop


def _pole_slope(field, t, y, f, live) -> float:
    """d/ds (y/y') of the fastest-growing component, by a forward difference along the flow."""
    if not live.any():
        return 0.0
    k = np.flatnonzero(live)[int(np.argmax(np.abs(f[live] / y[live])))]
    if f[k] == 0.0:
        return 0.0
    h = 1e-4 * abs(y[k] / f[k])
    try:
        f2 = field(t + h, y + h * f)
    except SingularField:
        return -math.inf
    ypp = (f2[k] - f[k]) / h
    return float(1.0 - y[k] * ypp / f[k] ** 2)


def extrapolate_blowup(fun, t1, y1, t2, y2) -> float | None:
    """Blow-up point from two late samples of the fastest-growing component.

    For y ~ C (s* - s)^(-a) the ratio y / y' = (s* - s)/a is affine in s; its
    secant zero is returned.
    """
    try:
        f1, f2 = fun(t1, y1), fun(t2, y2)
    except (SingularField, ZeroDivisionError, FloatingPointError):
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.abs(f2 / y2)
    rate[~np.isfinite(rate)] = 0.0
    k = int(np.argmax(rate))
    if f1[k] == 0.0 or f2[k] == 0.0:
        return None
    g1, g2 = y1[k] / f1[k], y2[k] / f2[k]
    if g1 == g2:
        return None
    est = t2 - g2 * (t2 - t1) / (g2 - g1)
    if not np.isfinite(est) or (est - t2) * (t2 - t1) < 0:
        return None
    return float(est)


def integrate(
    h: HessianCoefficients,
    init: SystemState,
    s_end: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float = 0.05,
    s_eval: Sequence[float] | None = None,
    on_step=None,
) -> Trajectory:
    """Integrate the reduced system of ``h`` from ``init`` to ``s_end``.

    Terminates early with BlowUp (|p| > 1e12, or step underflow against a
    growing field), FVanished (F changes sign) or StepUnderflow.
    """
    if init.n != h.n:
        raise InvalidInput(f"state has n={init.n}, equation has n={h.n}")
    y0 = init.to_vector()
    if not np.all(np.isfinite(y0)):
        raise InvalidInput("initial state is not finite")
    if np.any(init.R == 0.0):
        raise InvalidInput("initial R has a zero entry (p' would be infinite)")
    ev = FieldEvaluator(h)
    F0 = ev.F_grad_G(init.p)[0]
    if F0 == 0.0:
        raise InvalidInput("F vanishes at the initial p")
    recent: list[tuple[float, np.ndarray]] = []
    reasons: list[str] = []

    def hook(t, y):
        recent.append((t, y.copy()))
        if len(recent) > 2:
            recent.pop(0)
        if on_step is not None:
            on_step(t, y)

    res = run_rk(
        ev, init.s, y0, float(s_end), rtol=rtol, atol=atol, max_step=max_step, t_eval=s_eval,
        sign_events=[(_f_sign_event(ev), Termination.F_VANISHED)],
        stop=blowup_stop(ev, reasons), on_step=hook,
    )
    traj = trajectory_from_run(h, res)
    if reasons:
        traj.message = reasons[-1]
    if res.termination is Termination.BLOW_UP and len(recent) == 2:
        est = extrapolate_blowup(ev, *recent[0], *recent[1])
        if est is not None:
            traj.extra["s_last"] = traj.s_star
            traj.s_star = est
    return traj


def trajectory_from_run(h: HessianCoefficients, res: RunResult) -> Trajectory:
    ev = FieldEvaluator(h)
    m = res.t.size
    F = np.empty(m)
    G = np.empty(m)
    for i in range(m):
        F[i], _, G[i] = ev.F_grad_G(res.y[i, : h.n])
    with np.errstate(divide="ignore", invalid="ignore"):
        rpp = -G / F
    s_star = res.t_stop if res.termination is not Termination.REACHED_END else None
    return Trajectory(h.n, res.t, res.y, rpp, F, G, res.termination, s_star, res.message)


def integrate_two_sided(h, init: SystemState, s_min: float, s_max: float, **opts) -> tuple[Trajectory, Trajectory]:
    """Backward run to s_min and forward run to s_max from the same seed."""
    return integrate(h, init, s_min, **opts), integrate(h, init, s_max, **opts)


def merge_two_sided(backward: Trajectory, forward: Trajectory) -> Trajectory:
    """Single trajectory with s increasing, seed sample kept once."""
    s = np.concatenate([backward.s[::-1], forward.s[1:]])
    cat = lambda a, b: np.concatenate([a[::-1], b[1:]])
    return Trajectory(
        forward.n, s, cat(backward.y, forward.y), cat(backward.rpp, forward.rpp),
        cat(backward.F, forward.F), cat(backward.G, forward.G), forward.termination, forward.s_star,
        forward.message, {"backward_termination": backward.termination.value, "backward_s_star": backward.s_star},
    )

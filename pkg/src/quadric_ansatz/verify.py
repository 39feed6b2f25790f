"""PDE-residual verification of ansatz solutions on sample grids.

A *sampler* is any callable mapping an array of s values to an
:class:`~quadric_ansatz.arrowhead.AnsatzSample`; ``ClosedFormFamily.sample``
is one.  Every residual is evaluated from the assembled arrowhead Hessian, so
the check is independent of how the sampler produced its profile.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .arrowhead import AnsatzSample, det_i_plus_iH, phase_from_determinant
from .equations import HessianCoefficients
from .errors import InternalInconsistency, InvalidInput
from .symfun import elem_sym_batch, elem_sym_excl_batch

Sampler = Callable[[np.ndarray], AnsatzSample]

FULL_SWEEP_MAX_AXES = 6


@dataclass(frozen=True)
class Grid:
    """Tensor grid over (x_1..x_n, s), or Monte-Carlo points when n + 1 > 6."""

    n: int
    x_range: tuple = (-2.0, 2.0)
    s_range: tuple = (-2.0, 2.0)
    count: int = 21
    s_count: int | None = None
    mc_points: int = 10_000
    seed: int = 0
    chunk: int = 200_000

    def __post_init__(self):
        if self.count < 2 or (self.s_count is not None and self.s_count < 2):
            raise InvalidInput("grid counts must be at least 2")
        if self.n < 1:
            raise InvalidInput("n must be positive")

    @property
    def monte_carlo(self) -> bool:
        return self.n + 1 > FULL_SWEEP_MAX_AXES

    @property
    def s_axis(self) -> np.ndarray:
        return np.linspace(self.s_range[0], self.s_range[1], self.s_count or self.count)

    @property
    def x_axis(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.count)

    @property
    def size(self) -> int:
        if self.monte_carlo:
            return self.mc_points
        return self.s_axis.size * self.count ** self.n

    def x_block(self) -> np.ndarray:
        ax = self.x_axis
        mesh = np.meshgrid(*([ax] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def blocks(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (s, X) with s of shape (m,) and X of shape (m, n), in a fixed order."""
        if self.monte_carlo:
            rng = np.random.default_rng(self.seed)
            X = rng.uniform(self.x_range[0], self.x_range[1], size=(self.mc_points, self.n))
            S = rng.uniform(self.s_range[0], self.s_range[1], size=self.mc_points)
            for start in range(0, self.mc_points, self.chunk):
                yield S[start:start + self.chunk], X[start:start + self.chunk]
            return
        X = self.x_block()
        per = max(1, self.chunk // X.shape[0])
        axis = self.s_axis
        for start in range(0, axis.size, per):
            svals = axis[start:start + per]
            yield np.repeat(svals, X.shape[0]), np.tile(X, (svals.size, 1))

    def to_dict(self) -> dict:
        return {"n": self.n, "x_range": list(self.x_range), "s_range": list(self.s_range),
                "count": self.count, "s_count": self.s_count or self.count,
                "monte_carlo": self.monte_carlo, "points": self.size,
                **({"mc_points": self.mc_points, "seed": self.seed} if self.monte_carlo else {})}

    @classmethod
    def from_dict(cls, n: int, obj: dict | None) -> "Grid":
        obj = obj or {}
        kw = {}
        # the long form is what to_dict writes
        if "x_range" in obj:
            kw["x_range"] = tuple(float(v) for v in obj["x_range"])
        if "s_range" in obj:
            kw["s_range"] = tuple(float(v) for v in obj["s_range"])
        for key in ("count", "s_count"):
            if obj.get(key) is not None:
                kw[key] = int(obj[key])
        if "x" in obj:
            lo, hi, cnt = obj["x"]
            kw["x_range"], kw["count"] = (float(lo), float(hi)), int(cnt)
        if "s" in obj:
            lo, hi, cnt = obj["s"]
            kw["s_range"], kw["s_count"] = (float(lo), float(hi)), int(cnt)
        for key in ("mc_points", "seed"):
            if key in obj:
                kw[key] = int(obj[key])
        return cls(n, **kw)


def _unique_s_sample(sampler: Sampler, S: np.ndarray):
    """Evaluate the sampler once per distinct s; return it with the point-to-sample index."""
    uniq, inv = np.unique(S, return_inverse=True)
    return sampler(uniq), inv


def _block_sigmas(sampler: Sampler, S: np.ndarray, X: np.ndarray):
    """(P, Q, R, sigmas) for a block, doing the p-only symmetric functions once per s."""
    smp, inv = _unique_s_sample(sampler, S)
    P = smp.p[inv]
    Q = X * smp.dp[inv] + smp.dq[inv]
    R = np.sum(0.5 * X * X * smp.d2p[inv] + smp.d2q[inv] * X, axis=-1) + smp.d2r[inv]
    sig = point_sigmas(P, Q, R, elem_sym_batch(smp.p)[inv], elem_sym_excl_batch(smp.p)[inv])
    return P, Q, R, sig


def point_hessian(smp: AnsatzSample, X: np.ndarray):
    """(P, Q, R) of the arrowhead Hessian at every point."""
    Q = X * smp.dp + smp.dq
    R = np.sum(0.5 * X * X * smp.d2p + smp.d2q * X, axis=-1) + smp.d2r
    return smp.p, Q, R


def point_sigmas(P, Q, R, sP=None, excl=None) -> np.ndarray:
    """sigma_0..sigma_{n+1} of the arrowhead Hessians, shape (m, n+2)."""
    n = P.shape[-1]
    sP = elem_sym_batch(P) if sP is None else sP
    excl = elem_sym_excl_batch(P) if excl is None else excl
    sig = np.zeros(P.shape[:-1] + (n + 2,))
    sig[..., : n + 1] += sP
    sig[..., 1:] += R[..., None] * sP
    sig[..., 2:] -= np.einsum("...i,...ik->...k", np.abs(Q) ** 2, excl)
    return sig


def det_closed_form(P, Q, R) -> np.ndarray:
    """det(I + iH) = prod(1 + iP)(1 + iR) + sum_j |Q_j|^2 prod_{k != j}(1 + iP_k)."""
    n = P.shape[-1]
    Z = 1.0 + 1j * P
    full = np.prod(Z, axis=-1)
    if n == 1:
        others = np.ones_like(Z)
    else:
        idx = np.array([[j for j in range(n) if j != i] for i in range(n)])
        others = np.prod(Z[..., idx], axis=-1)
    return full * (1.0 + 1j * R) + np.sum(np.abs(Q) ** 2 * others, axis=-1)


@dataclass(eq=False)
class ResidualReport:
    grid: dict
    residual: np.ndarray
    scale: np.ndarray
    max_abs_residual: float
    scaled_max: float
    positivity_ok: bool | None = None
    phase_min: float | None = None
    phase_max: float | None = None
    extra: dict = field(default_factory=dict)
    points: tuple | None = field(default=None, repr=False)

    @property
    def phase_spread(self) -> float | None:
        if self.phase_min is None:
            return None
        return self.phase_max - self.phase_min

    def to_dict(self) -> dict:
        out = {
            "grid": self.grid,
            "max_abs_residual": self.max_abs_residual,
            "scaled_max": self.scaled_max,
            "positivity_ok": self.positivity_ok,
            "phase_min": self.phase_min,
            "phase_max": self.phase_max,
        }
        out.update(self.extra)
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, default=float)

    def to_csv(self, path) -> None:
        """Per-point CSV: s, x_1..x_n, residual, scaled residual (needs keep_points=True)."""
        if self.points is None:
            raise InvalidInput("report was built without per-point coordinates")
        S, X = self.points
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s"] + [f"x{i + 1}" for i in range(X.shape[1])] + ["residual", "scaled"])
            for s, x, r, sc in zip(S, X, self.residual, self.scale):
                w.writerow([f"{v:.17g}" for v in (s, *x, r, abs(r) / sc)])


def _map_blocks(fn, grid: Grid, threads: int):
    blocks = list(grid.blocks())
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return blocks, list(pool.map(lambda b: fn(*b), blocks))
    return blocks, [fn(*b) for b in blocks]


def _assemble(grid, blocks, parts, keep_points, **summary):
    residual = np.concatenate([p["residual"] for p in parts])
    scale = np.concatenate([p["scale"] for p in parts])
    points = None
    if keep_points:
        points = (np.concatenate([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks]))
    return ResidualReport(
        grid.to_dict(), residual, scale,
        float(np.max(np.abs(residual))) if residual.size else 0.0,
        float(np.max(np.abs(residual) / scale)) if residual.size else 0.0,
        points=points, **summary,
    )


def hessian_residual(h: HessianCoefficients, sampler: Sampler, grid: Grid, threads: int = 1,
                     keep_points: bool = False) -> ResidualReport:
    """sum_{k=0}^{n+1} c_{k-1} sigma_k(H) at every grid point, with the x-polynomial split.

    The residual is a polynomial in x whose x_i^2, x_i and constant
    coefficients must vanish separately; their maxima over the s-axis are
    reported under ``xi_split``.
    """
    if grid.n != h.n:
        raise InvalidInput(f"grid has n={grid.n}, equation has n={h.n}")
    c = h.c
    absc = np.abs(c)

    def block(S, X):
        P, Q, R, sig = _block_sigmas(sampler, S, X)
        return {"residual": sig @ c, "scale": 1.0 + np.abs(sig) @ absc}

    blocks, parts = _map_blocks(block, grid, threads)
    report = _assemble(grid, blocks, parts, keep_points)
    report.extra["xi_split"] = xi_split(h, sampler, np.unique(np.concatenate([b[0] for b in blocks])))
    report.extra["kind"] = "hessian"
    return report


def xi_split(h: HessianCoefficients, sampler: Sampler, s_values) -> dict:
    """Scaled maxima of the x_i^2, x_i and x-free coefficients of the residual.

    quadratic: F p_i''/2 - dF/dp_i p_i'^2
    linear:    F q_i''   - 2 dF/dp_i p_i' q_i'
    constant:  G + F r'' - sum_i dF/dp_i q_i'^2
    """
    smp = sampler(np.asarray(s_values, dtype=float))
    fc, gc = h.f_coeffs, h.g_coeffs
    sig = elem_sym_batch(smp.p)
    F = sig @ fc
    G = sig @ gc
    grad = elem_sym_excl_batch(smp.p) @ fc[1:]
    Fc = F[:, None]
    quad_terms = (Fc * smp.d2p / 2, grad * smp.dp ** 2)
    lin_terms = (Fc * smp.d2q, 2 * grad * smp.dp * smp.dq)
    t_const = np.sum(grad * smp.dq ** 2, axis=-1)
    const = G + F * smp.d2r - t_const
    const_scale = 1.0 + np.abs(G) + np.abs(F * smp.d2r) + np.abs(t_const)

    def worst(a, b):
        return float(np.max(np.abs(a - b) / (1.0 + np.abs(a) + np.abs(b))))

    return {
        "quadratic": worst(*quad_terms),
        "linear": worst(*lin_terms),
        "constant": float(np.max(np.abs(const) / const_scale)),
    }


def lyz_residual(theta: float, sampler: Sampler, grid: Grid, threads: int = 1,
                 keep_points: bool = False, consistency_tol: float = 1e-9) -> ResidualReport:
    """Im(e^{-i theta} det(I + iH)) on the grid, computed two independent ways.

    (a) the closed product form of det(I + iH) for bordered-diagonal H;
    (b) sum_k i^k sigma_k(H) from the characteristic-polynomial coefficients.
    The reported residual is (b); disagreement beyond ``consistency_tol``
    (relative to the sigma scale) raises InternalInconsistency.
    """
    rot = complex(math.cos(theta), -math.sin(theta))
    kk = np.arange(grid.n + 2)
    weights = np.abs(np.cos(theta - (kk - 1) * math.pi / 2.0))

    def block(S, X):
        P, Q, R, sig = _block_sigmas(sampler, S, X)
        det_b = det_i_plus_iH(sig)
        det_a = det_closed_form(P, Q, R)
        abs_scale = 1.0 + np.sum(np.abs(sig), axis=-1)
        gap = np.abs(det_a - det_b) / abs_scale
        w = rot * det_b
        return {
            "residual": w.imag,
            "scale": 1.0 + np.abs(sig) @ weights,
            "re": w.real,
            "gap": float(np.max(gap)) if gap.size else 0.0,
            "residual_a": (rot * det_a).imag,
            "phase": phase_from_determinant(P, det_b),
        }

    blocks, parts = _map_blocks(block, grid, threads)
    gap = max(p["gap"] for p in parts)
    if gap > consistency_tol:
        raise InternalInconsistency(f"closed-form and sigma-expansion determinants differ by {gap:.3e}")
    re = np.concatenate([p["re"] for p in parts])
    ph = np.concatenate([p["phase"] for p in parts])
    res_a = np.concatenate([p["residual_a"] for p in parts])
    report = _assemble(grid, blocks, parts, keep_points, positivity_ok=bool(np.all(re > 0)),
                       phase_min=float(np.min(ph)), phase_max=float(np.max(ph)))
    report.extra.update({
        "kind": "lyz", "theta": theta, "method_gap": gap,
        "max_abs_residual_closed_form": float(np.max(np.abs(res_a))),
        "min_re": float(np.min(re)),
    })
    return report


def phase_scan(sampler: Sampler, grid: Grid, threads: int = 1):
    """(phase_min, phase_max, (argmin point, argmax point)) over the grid; a point is (s, x)."""

    def block(S, X):
        P, Q, R, sig = _block_sigmas(sampler, S, X)
        ph = phase_from_determinant(P, det_i_plus_iH(sig))
        i, j = int(np.argmin(ph)), int(np.argmax(ph))
        return ph[i], (float(S[i]), X[i].copy()), ph[j], (float(S[j]), X[j].copy())

    _, parts = _map_blocks(block, grid, threads)
    lo = min(parts, key=lambda t: t[0])
    hi = max(parts, key=lambda t: t[2])
    return float(lo[0]), float(hi[2]), (lo[1], hi[3])


def refinement_ratio(report_coarse: ResidualReport, report_fine: ResidualReport, floor: float = 1e-14) -> float:
    """Ratio of fine-grid to coarse-grid maximum scaled residual (floored to avoid 0/0)."""
    return max(report_fine.scaled_max, floor) / max(report_coarse.scaled_max, floor)


def constant_solution_sampler(p, rpp: float, q_slope=None) -> Sampler:
    """Quadratic potential with constant p and r = rpp s^2 / 2 (optionally q_j = slope_j s)."""
    p = np.asarray(p, dtype=float)
    slope = np.zeros_like(p) if q_slope is None else np.asarray(q_slope, dtype=float)

    def sampler(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        m, n = s.size, p.size
        zeros = np.zeros((m, n))
        return AnsatzSample(s, np.tile(p, (m, 1)), zeros, zeros, 0.5 * rpp * s * s, rpp * s,
                            np.full(m, rpp), s[:, None] * slope, np.tile(slope, (m, 1)), zeros)

    return sampler


__all__ = [
    "FULL_SWEEP_MAX_AXES", "Grid", "ResidualReport", "constant_solution_sampler", "det_closed_form",
    "hessian_residual", "lyz_residual", "phase_scan", "point_hessian", "point_sigmas",
    "refinement_ratio", "xi_split",
]

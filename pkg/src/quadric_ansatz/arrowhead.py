"""Bordered-diagonal ("arrowhead") Hermitian matrices.

Every ansatz potential has a Hessian of the form::

    [ P_1              Q_1 ]
    [      ...         ... ]
    [           P_n    Q_n ]
    [ conj(Q_1) ...    R   ]

whose characteristic polynomial is

    det(lambda - H) = prod_j (lambda - P_j)(lambda - R)
                      - sum_i |Q_i|^2 prod_{j != i} (lambda - P_j).

Reading coefficients off that formula gives
sigma_k(H) = sigma_k(P) + R sigma_{k-1}(P) - sum_i |Q_i|^2 sigma_{k-2}(P|i),
which is what all residual evaluations use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .symfun import elem_sym_all, elem_sym_batch, elem_sym_excl_batch

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class ArrowheadMatrix:
    P: np.ndarray
    Q: np.ndarray
    R: float

    def __post_init__(self):
        P = np.atleast_1d(np.asarray(self.P, dtype=float))
        Q = np.atleast_1d(np.asarray(self.Q))
        if Q.shape != P.shape or P.ndim != 1:
            raise InvalidInput(f"P and Q must be 1-d of equal length, got {P.shape} and {Q.shape}")
        if not np.iscomplexobj(Q):
            Q = Q.astype(float)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", float(self.R))

    @property
    def n(self) -> int:
        return self.P.size

    def dense(self) -> np.ndarray:
        n = self.n
        dtype = complex if np.iscomplexobj(self.Q) else float
        H = np.zeros((n + 1, n + 1), dtype=dtype)
        H[np.arange(n), np.arange(n)] = self.P
        H[:n, n] = self.Q
        H[n, :n] = np.conj(self.Q)
        H[n, n] = self.R
        return H


def hessian_sigmas(H: ArrowheadMatrix) -> np.ndarray:
    """(sigma_0(H), ..., sigma_{n+1}(H)) without solving for eigenvalues."""
    n = H.n
    sP = elem_sym_all(H.P)
    excl = elem_sym_excl_batch(H.P)  # (n, n)
    w = np.abs(H.Q) ** 2
    sig = np.zeros(n + 2)
    sig[: n + 1] += sP
    sig[1:] += H.R * sP
    sig[2:] -= w @ excl
    return sig


def char_poly(H: ArrowheadMatrix) -> np.ndarray:
    """Coefficients of det(lambda I - H), highest power first (monic, length n+2)."""
    sig = hessian_sigmas(H)
    k = np.arange(sig.size)
    return (-1.0) ** k * sig


def sigma_of_hessian(H: ArrowheadMatrix, k: int) -> float:
    if k < 0 or k > H.n + 1:
        return 0.0
    return float(hessian_sigmas(H)[k])


def _secular_root(a, b, d, w, R, left_open, right_open):
    """Root of f(x) = x - R - sum w/(x - d) in (a, b); f increasing there."""

    def f_and_df(x):
        t = 1.0 / (x - d)
        return x - R - float(w @ t), 1.0 + float(w @ (t * t))

    lo, hi = a, b
    x = 0.5 * (lo + hi)
    for _ in range(300):
        fx, dfx = f_and_df(x)
        if fx == 0.0:
            return x
        if fx < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= 2.0 * _EPS * max(abs(lo), abs(hi), 1e-300):
            break
        x_newton = x - fx / dfx
        if lo < x_newton < hi and abs(x_newton - x) < 0.5 * (hi - lo):
            x = x_newton
        else:
            x = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def eigenvalues(H: ArrowheadMatrix) -> np.ndarray:
    """Sorted eigenvalues via the secular equation, with deflation.

    Border entries with |Q_i| <= eps * scale count as zero (this moves an
    eigenvalue by at most eps * scale) and give P_i exactly; coincident P_i are merged into one
    pole carrying the combined weight, leaving P_i as eigenvalue with the
    remaining multiplicity.
    """
    P = H.P
    w_all = np.abs(H.Q) ** 2
    R = H.R
    scale = max(float(np.max(np.abs(P), initial=0.0)), abs(R), math.sqrt(float(w_all.sum())), 1.0)
    tiny = (_EPS * scale) ** 2
    evs: list[float] = []

    order = np.argsort(P, kind="stable")
    P_sorted, w_sorted = P[order], w_all[order]
    poles: list[float] = []
    weights: list[float] = []
    i = 0
    n = P.size
    while i < n:
        j = i
        while j + 1 < n and P_sorted[j + 1] - P_sorted[i] <= 4.0 * _EPS * scale:
            j += 1
        group_w = w_sorted[i:j + 1]
        d = float(np.mean(P_sorted[i:j + 1]))
        nonzero = int(np.count_nonzero(group_w > tiny))
        if nonzero == 0:
            evs.extend([d] * (j - i + 1))
        else:
            evs.extend([d] * (j - i))
            poles.append(d)
            weights.append(float(group_w.sum()))
        i = j + 1

    if not poles:
        evs.append(R)
        return np.sort(np.array(evs))

    d = np.array(poles)
    w = np.array(weights)
    root_w = math.sqrt(float(w.sum()))
    lower = min(d[0], R) - root_w
    upper = max(d[-1], R) + root_w
    brackets = [(lower, d[0])] + [(d[k], d[k + 1]) for k in range(d.size - 1)] + [(d[-1], upper)]
    for a, b in brackets:
        evs.append(_secular_root(a, b, d, w, R, a != lower, b != upper))
    return np.sort(np.array(evs))


def phase(H: ArrowheadMatrix) -> float:
    """Sum of arctangents of the eigenvalues."""
    return float(np.sum(np.arctan(eigenvalues(H))))


def det_i_plus_iH(sig: np.ndarray) -> np.ndarray:
    """det(I + i H) = sum_k i^k sigma_k(H); ``sig`` has shape (..., n+2)."""
    m = sig.shape[-1]
    powers = np.array([1j ** k for k in range(m)])
    return sig @ powers


def phase_from_determinant(P, det) -> np.ndarray:
    """Exact phase from det(I + iH) and the diagonal block P, no eigen-solve.

    By interlacing the phase lies strictly within pi/2 of sum arctan P_j, so
    the argument of det(I + iH) (known mod 2 pi) is lifted to that window.
    """
    base = np.sum(np.arctan(np.asarray(P, dtype=float)), axis=-1)
    delta = np.angle(det * np.exp(-1j * base))
    return base + delta


@dataclass(frozen=True, eq=False)
class AnsatzSample:
    """Profile data of f = 1/2 sum p_j x_j^2 + sum q_j x_j + r at one or more s.

    Arrays carry a leading sample axis when ``s`` is an array; the last axis of
    the per-coordinate fields has length n.
    """

    s: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    d2p: np.ndarray
    r: np.ndarray
    dr: np.ndarray
    d2r: np.ndarray
    q: np.ndarray | None = None
    dq: np.ndarray | None = None
    d2q: np.ndarray | None = None

    def __post_init__(self):
        for name in ("s", "p", "dp", "d2p", "r", "dr", "d2r"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("q", "dq", "d2q"):
            value = getattr(self, name)
            value = np.zeros_like(self.p) if value is None else np.broadcast_to(
                np.asarray(value, dtype=float), self.p.shape).copy()
            object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.p.shape[-1]

    @property
    def has_linear_terms(self) -> bool:
        return bool(np.any(self.q) or np.any(self.dq) or np.any(self.d2q))

    def at(self, index) -> "AnsatzSample":
        return AnsatzSample(
            self.s[index], self.p[index], self.dp[index], self.d2p[index], self.r[index],
            self.dr[index], self.d2r[index], self.q[index], self.dq[index], self.d2q[index],
        )


def assemble(sample: AnsatzSample, x) -> ArrowheadMatrix:
    """Hessian of the ansatz at (x, s) for a single-s sample.

    P_j = p_j, Q_j = x_j p'_j + q'_j, R = sum_j (x_j^2 p''_j / 2 + q''_j x_j) + r''.
    The complex potential u = 4 f has the same complex Hessian.
    """
    x = np.asarray(x, dtype=float)
    if sample.p.ndim != 1:
        raise InvalidInput("assemble expects a sample at a single s")
    if x.shape != sample.p.shape:
        raise InvalidInput(f"x has length {x.size}, expected {sample.n}")
    Q = x * sample.dp + sample.dq
    R = float(np.sum(0.5 * x * x * sample.d2p + sample.d2q * x) + sample.d2r)
    return ArrowheadMatrix(sample.p.copy(), Q, R)


def grid_hessian_sigmas(sample: AnsatzSample, X: np.ndarray) -> np.ndarray:
    """sigma_k of the assembled Hessian at many x for one s: X (m, n) -> (m, n+2)."""
    n = sample.n
    sP = elem_sym_batch(sample.p)
    excl = elem_sym_excl_batch(sample.p)
    Q = X * sample.dp + sample.dq
    R = np.sum(0.5 * X * X * sample.d2p + sample.d2q * X, axis=-1) + sample.d2r
    sig = np.zeros((X.shape[0], n + 2))
    sig[:, : n + 1] += sP
    sig[:, 1:] += R[:, None] * sP
    sig[:, 2:] -= (Q * Q) @ excl
    return sig

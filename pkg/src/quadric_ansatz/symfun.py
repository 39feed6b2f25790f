"""Elementary symmetric polynomials and the polynomials F = sum c_k sigma_k(p).

All sigma_k are produced by one sweep that builds the coefficients of
prod_j (t + p_j), so sigma_k is the coefficient of t^(n-k).  Indices ``i`` are
zero-based throughout.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidIndex, InvalidInput


def as_eigen_tuple(values) -> np.ndarray:
    """Validate a tuple of p-values: one-dimensional, non-empty, finite."""
    p = np.asarray(values, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInput(f"expected a non-empty 1-d tuple, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInput("eigen tuple has non-finite entries")
    return p


def elem_sym_all(p) -> np.ndarray:
    """Return (sigma_0, ..., sigma_n) of p."""
    p = np.asarray(p, dtype=float)
    e = np.zeros(p.size + 1)
    e[0] = 1.0
    for j, pj in enumerate(p):
        e[1:j + 2] += pj * e[0:j + 1]
    return e


def elem_sym_batch(P) -> np.ndarray:
    """Vectorised sweep: P has shape (..., n); returns shape (..., n+1)."""
    P = np.asarray(P, dtype=float)
    n = P.shape[-1]
    e = np.zeros(P.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for j in range(n):
        pj = P[..., j:j + 1]
        e[..., 1:j + 2] = e[..., 1:j + 2] + pj * e[..., 0:j + 1]
    return e


def elem_sym_excl_batch(P) -> np.ndarray:
    """sigma_k(p|i) for every i: P shape (..., n) -> (..., n, n).

    Entry [..., i, k] is sigma_k of p with p_i removed, k = 0..n-1.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[-1]
    if n == 1:
        return np.ones(P.shape + (1,))
    idx = np.array([[j for j in range(n) if j != i] for i in range(n)])
    reduced = P[..., idx]  # (..., n, n-1)
    return elem_sym_batch(reduced)


def elem_sym(p, k: int) -> float:
    p = np.asarray(p, dtype=float)
    if k < 0 or k > p.size:
        return 0.0
    return float(elem_sym_all(p)[k])


def elem_sym_excl(p, k: int, i: int) -> float:
    """sigma_k of p with p_i removed; zero for k < 0 or k >= n."""
    p = np.asarray(p, dtype=float)
    n = p.size
    if not 0 <= i < n:
        raise InvalidIndex(f"index {i} out of range for n={n}")
    if k < 0 or k > n - 1:
        return 0.0
    return float(elem_sym_all(np.delete(p, i))[k])


def poly_eval(c, p):
    """Evaluate F(p) = sum_k c_k sigma_k(p) and its gradient.

    ``c`` is (c_0, ..., c_n).  The gradient uses
    dF/dp_i = sum_k c_k sigma_{k-1}(p|i).
    """
    c = np.asarray(c, dtype=float)
    p = np.asarray(p, dtype=float)
    n = p.size
    if c.size != n + 1:
        raise InvalidInput(f"need {n + 1} coefficients for n={n}, got {c.size}")
    value = float(c @ elem_sym_all(p))
    excl = elem_sym_excl_batch(p)  # (n, n): sigma_0..sigma_{n-1} of p|i
    grad = excl @ c[1:]
    return value, grad


def poly_eval_batch(c, P):
    """Batched ``poly_eval``: P shape (..., n) -> values (...), grads (..., n)."""
    c = np.asarray(c, dtype=float)
    P = np.asarray(P, dtype=float)
    values = elem_sym_batch(P) @ c
    grads = elem_sym_excl_batch(P) @ c[1:]
    return values, grads


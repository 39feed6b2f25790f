"""Independent reference computations used only by the tests."""
import itertools
import math

import numpy as np


def sigma_subsets(p, k):
    """sigma_k by summing products over every k-subset."""
    p = list(p)
    if k < 0 or k > len(p):
        return 0.0
    return float(sum(math.prod(c) for c in itertools.combinations(p, k)))


def sigma_from_roots(p):
    """(sigma_0..sigma_n) as the coefficients of prod (t + p_j), via numpy.poly."""
    return np.real(np.poly(-np.asarray(p, dtype=float)))


def dense_char_value(H_dense, lam):
    n1 = H_dense.shape[0]
    with np.errstate(divide="ignore"):  # numpy warns on exactly singular input
        return np.linalg.det(lam * np.eye(n1) - H_dense)


def dense_eigs(H_dense):
    return np.linalg.eigvalsh(H_dense)


def tanh_family(s):
    """alpha = beta = 1, psi = 0: p = tanh s in both slots, r = -sinh(2s)/4."""
    s = np.asarray(s, dtype=float)
    return np.tanh(s), 1.0 / np.cosh(s) ** 2, -0.25 * np.sinh(2 * s), -0.5 * np.cosh(2 * s)


def isotropic_n2(kappa_prime, u0, s):
    """u' = kappa' cos u solved by separation: u = arcsin(tanh(kappa' s + artanh(sin u0)))."""
    return np.arcsin(np.tanh(kappa_prime * np.asarray(s) + math.atanh(math.sin(u0))))


def real_hessian_fd(f, x, s, h=1e-4):
    """Central-difference Hessian of a scalar f(x, s) in the n+1 real variables (x, s)."""
    z0 = np.concatenate([np.asarray(x, dtype=float), [s]])
    m = z0.size

    def g(z):
        return float(f(z[:-1], z[-1]))

    H = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            ea = np.zeros(m)
            eb = np.zeros(m)
            ea[a] = h
            eb[b] = h
            H[a, b] = (g(z0 + ea + eb) - g(z0 + ea - eb) - g(z0 - ea + eb) + g(z0 - ea - eb)) / (4 * h * h)
    return H

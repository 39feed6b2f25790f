"""Hessian equations sum_k c_k sigma_{k+1}(D^2 u) + c_{-1} = 0 and their recursive structure.

An equation is stored as the coefficient vector (c_{-1}, c_0, ..., c_n).  It
is *recursive of type (a0, a1)* when c_{k-1} = a1 c_k - a0 c_{k+1} for
k = 1..n-1; such an F factors through the roots of r^2 - a1 r + a0 (see
``classify``).
"""
from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidIndex, InvalidInput, Underdetermined
from .symfun import elem_sym_all, poly_eval


@dataclass(frozen=True, eq=False)
class HessianCoefficients:
    """Coefficients c_{-1}, c_0, ..., c_n; ``c[k + 1]`` holds c_k."""

    n: int
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if self.n < 1:
            raise InvalidInput("n must be positive")
        if c.shape != (self.n + 2,):
            raise InvalidInput(f"expected {self.n + 2} coefficients (c_-1..c_n), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidInput("coefficients must be finite")
        if not np.any(c[1:]):
            raise InvalidInput("F is identically zero (c_0..c_n all vanish)")
        object.__setattr__(self, "c", c)

    def coef(self, k: int) -> float:
        return float(self.c[k + 1]) if -1 <= k <= self.n else 0.0

    @property
    def f_coeffs(self) -> np.ndarray:
        """(c_0, ..., c_n), the coefficients of F in the sigma_k basis."""
        return self.c[1:]

    @property
    def g_coeffs(self) -> np.ndarray:
        return g_polynomial(self)

    def F(self, p):
        return poly_eval(self.f_coeffs, p)

    def G(self, p) -> float:
        return float(self.g_coeffs @ elem_sym_all(p))

    def scaled(self, factor: float) -> "HessianCoefficients":
        return HessianCoefficients(self.n, factor * self.c)

    def __repr__(self):
        return f"HessianCoefficients(n={self.n}, c={self.c.tolist()})"


class Case(str, enum.Enum):
    DISTINCT_ROOTS = "DistinctRoots"
    REPEATED_NONZERO_ROOT = "RepeatedNonzeroRoot"
    REPEATED_ZERO_ROOT = "RepeatedZeroRoot"


@dataclass(frozen=True)
class RecursiveSpec:
    """Recursive-type data: (a0, a1) and the two top coefficients c_{n-1}, c_n.

    ``c_m1`` is the free constant term c_{-1} of the PDE; the recursion does not
    determine it.
    """

    n: int
    a0: float
    a1: float
    c_nm1: float
    c_n: float
    c_m1: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInput("n must be positive")

    @property
    def discriminant(self) -> float:
        return self.a1 * self.a1 - 4.0 * self.a0

    @property
    def roots(self) -> tuple[complex, complex]:
        """Roots of r^2 - a1 r + a0; the root with larger real (then imaginary) part first."""
        d = cmath.sqrt(self.discriminant)
        return (self.a1 + d) / 2.0, (self.a1 - d) / 2.0

    @property
    def case(self) -> Case:
        if self.discriminant != 0.0:
            return Case.DISTINCT_ROOTS
        if self.a1 != 0.0:
            return Case.REPEATED_NONZERO_ROOT
        return Case.REPEATED_ZERO_ROOT

    @property
    def top_invariant(self) -> float:
        """c_{n-1}^2 - a1 c_{n-1} c_n + a0 c_n^2, the constant in front of prod q(p_j)."""
        return self.c_nm1 ** 2 - self.a1 * self.c_nm1 * self.c_n + self.a0 * self.c_n ** 2

    def q(self, x):
        return x * x + self.a1 * x + self.a0

    def dq(self, x):
        return 2.0 * x + self.a1


def build_recursive(spec: RecursiveSpec) -> HessianCoefficients:
    n = spec.n
    c = np.zeros(n + 2)
    c[n + 1] = spec.c_n
    c[n] = spec.c_nm1
    for k in range(n - 1, 0, -1):
        c[k] = spec.a1 * c[k + 1] - spec.a0 * c[k + 2]
    c[0] = spec.c_m1
    return HessianCoefficients(n, c)


class DetectKind(str, enum.Enum):
    UNIQUE = "unique"
    FAMILY = "family"
    NOT_RECURSIVE = "not_recursive"


@dataclass(frozen=True)
class DetectResult:
    kind: DetectKind
    a0: float
    a1: float
    residual: float
    rank: int
    # null direction of (a0, a1) for a one-parameter family
    direction: tuple[float, float] | None = None

    @property
    def is_recursive(self) -> bool:
        return self.kind is not DetectKind.NOT_RECURSIVE


def _recursion_system(fc: np.ndarray):
    n = fc.size - 1
    rows = [[-fc[k + 1], fc[k]] for k in range(1, n)]
    rhs = [fc[k - 1] for k in range(1, n)]
    return np.array(rows, dtype=float), np.array(rhs, dtype=float)


def detect_recursive(h: HessianCoefficients) -> DetectResult:
    """Find (a0, a1) with c_{k-1} = a1 c_k - a0 c_{k+1}, k = 1..n-1.

    Least squares on the (n-1) x 2 system.  For a rank-deficient system the
    minimum-norm representative is returned together with the null direction.
    """
    if h.n < 2:
        raise Underdetermined("n = 1 imposes no recursion constraint")
    fc = h.f_coeffs
    M, b = _recursion_system(fc)
    tol_detect = 1e-9 * float(np.max(np.abs(fc)))
    U, sv, Vt = np.linalg.svd(M, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv >= 1e-12 * smax)) if smax > 0 else 0
    x = np.zeros(2)
    for j in range(rank):
        x += (U[:, j] @ b) / sv[j] * Vt[j]
    residual = float(np.max(np.abs(M @ x - b))) if b.size else 0.0
    a0, a1 = float(x[0]), float(x[1])
    if residual >= tol_detect and residual > 0.0:
        return DetectResult(DetectKind.NOT_RECURSIVE, a0, a1, residual, rank)
    if rank == 2:
        return DetectResult(DetectKind.UNIQUE, a0, a1, residual, rank)
    direction = (float(Vt[-1, 0]), float(Vt[-1, 1])) if rank == 1 else None
    return DetectResult(DetectKind.FAMILY, a0, a1, residual, rank, direction)


@dataclass(frozen=True)
class Factorization:
    """Factored form of a recursive F.

    DistinctRoots:       F = A prod(p_j + r1) + B prod(p_j + r2)   (B = conj(A) for complex roots)
    RepeatedNonzeroRoot: F = A prod(p_j + u) + B u d/du prod(p_j + u)
    RepeatedZeroRoot:    F = c_n sigma_n + c_{n-1} sigma_{n-1}
    """

    case: Case
    n: int
    roots: tuple[complex, complex]
    A: complex
    B: complex
    u: float | None = None
    conjugate: bool = False

    def coefficients(self) -> np.ndarray:
        """Expand back into (c_0, ..., c_n)."""
        n = self.n
        k = np.arange(n + 1)
        if self.case is Case.DISTINCT_ROOTS:
            r1, r2 = self.roots
            c = self.A * r1 ** (n - k) + self.B * r2 ** (n - k)
            return np.real(c)
        if self.case is Case.REPEATED_NONZERO_ROOT:
            u = self.u
            return (self.A.real + self.B.real * (n - k)) * u ** (n - k)
        c = np.zeros(n + 1)
        c[n] = self.A.real
        c[n - 1] = self.B.real
        return c

    def evaluate(self, p) -> float:
        """Evaluate the factored product form directly at p (no sigma_k)."""
        p = np.asarray(p, dtype=float)
        if self.case is Case.DISTINCT_ROOTS:
            r1, r2 = self.roots
            first = self.A * np.prod(p + r1)
            if self.conjugate:
                return float(2.0 * first.real)
            return float((first + self.B * np.prod(p + r2)).real)
        if self.case is Case.REPEATED_NONZERO_ROOT:
            u = self.u
            shifted = p + u
            deriv = sum(np.prod(np.delete(shifted, j)) for j in range(p.size))
            return float(self.A.real * np.prod(shifted) + self.B.real * u * deriv)
        n = p.size
        prod_all = np.prod(p)
        prod_drop = sum(np.prod(np.delete(p, j)) for j in range(n))
        return float(self.A.real * prod_all + self.B.real * prod_drop)


def classify(spec: RecursiveSpec) -> Factorization:
    r1, r2 = spec.roots
    case = spec.case
    if case is Case.DISTINCT_ROOTS:
        A = (spec.c_nm1 - spec.c_n * r2) / (r1 - r2)
        B = -(spec.c_nm1 - spec.c_n * r1) / (r1 - r2)
        conjugate = spec.discriminant < 0.0
        if conjugate:
            B = A.conjugate()
        return Factorization(case, spec.n, (r1, r2), complex(A), complex(B), conjugate=conjugate)
    if case is Case.REPEATED_NONZERO_ROOT:
        u = spec.a1 / 2.0
        A = spec.c_n
        B = spec.c_nm1 / u - spec.c_n
        return Factorization(case, spec.n, (u, u), complex(A), complex(B), u=u)
    return Factorization(case, spec.n, (0j, 0j), complex(spec.c_n), complex(spec.c_nm1), u=0.0)


def g_polynomial(h: HessianCoefficients) -> np.ndarray:
    """Coefficients of G = sum_k c_{k-1} sigma_k, i.e. (c_{-1}, ..., c_{n-1})."""
    return h.c[:-1].copy()


@dataclass(frozen=True)
class StructureIdentity:
    """Both sides of the quadratic structure identity at one point.

    ``lhs``/``rhs``: (q'(p_i) F - 2 q(p_i) dF_i)^2 versus
    (a1^2 - 4 a0) F^2 + 4 (c_{n-1}^2 - a1 c_{n-1} c_n + a0 c_n^2) prod q(p_j).
    ``inner_lhs``/``inner_rhs``: q'(p_i) F - 2 q(p_i) dF_i versus
    -a1 F + 2 sum_k c~_{k-1} sigma_k with the temporary c~_{-1} = a1 c_0 - a0 c_1.
    """

    lhs: float
    rhs: float
    scale: float
    inner_lhs: float
    inner_rhs: float
    inner_scale: float

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs

    @property
    def scaled_residual(self) -> float:
        return abs(self.residual) / self.scale

    @property
    def inner_residual(self) -> float:
        return self.inner_lhs - self.inner_rhs

    @property
    def inner_scaled_residual(self) -> float:
        return abs(self.inner_residual) / self.inner_scale


def quadratic_identity_residual(spec: RecursiveSpec, p, i: int) -> StructureIdentity:
    p = np.asarray(p, dtype=float)
    if p.size != spec.n:
        raise InvalidInput(f"expected {spec.n} values, got {p.size}")
    if not 0 <= i < spec.n:
        raise InvalidIndex(f"index {i} out of range for n={spec.n}")
    fc = build_recursive(spec).f_coeffs
    F, grad = poly_eval(fc, p)
    pi = p[i]
    qi, dqi = spec.q(pi), spec.dq(pi)
    inner = dqi * F - 2.0 * qi * grad[i]

    sig = elem_sym_all(p)
    shifted = np.empty(spec.n + 1)
    shifted[0] = spec.a1 * fc[0] - spec.a0 * (fc[1] if spec.n >= 1 else 0.0)
    shifted[1:] = fc[:-1]
    terms = shifted * sig
    inner_rhs = -spec.a1 * F + 2.0 * float(terms.sum())
    inner_scale = abs(dqi * F) + abs(2.0 * qi * grad[i]) + abs(spec.a1 * F) + 2.0 * float(np.abs(terms).sum())

    qs = spec.q(p)
    t1 = spec.discriminant * F * F
    t2 = 4.0 * spec.top_invariant * float(np.prod(qs))
    lhs = inner * inner
    # squares of term magnitudes: inner and F may cancel far below their terms
    F_abs, grad_abs = poly_eval(np.abs(fc), np.abs(p))
    inner_abs = abs(dqi) * F_abs + 2.0 * abs(qi) * grad_abs[i]
    scale = inner_abs * inner_abs + abs(spec.discriminant) * F_abs * F_abs + abs(t2)
    return StructureIdentity(
        lhs=lhs,
        rhs=t1 + t2,
        scale=scale if scale > 0 else 1.0,
        inner_lhs=inner,
        inner_rhs=inner_rhs,
        inner_scale=inner_scale if inner_scale > 0 else 1.0,
    )


def equation_from_json(obj) -> tuple[HessianCoefficients, RecursiveSpec | None]:
    """Parse an equation record.

    Accepted shapes::

        {"n": 2, "c": [c_-1, c_0, ..., c_n]}
        {"n": 2, "recursive": {"a0":, "a1":, "c_nm1":, "c_n":, "c_m1":}}
        {"n": 2, "dhym": {"theta": 0.0}}
    """
    if not isinstance(obj, dict) or "n" not in obj:
        raise InvalidInput("equation record must be an object with key 'n'")
    n = int(obj["n"])
    if "c" in obj:
        return HessianCoefficients(n, np.asarray(obj["c"], dtype=float)), None
    if "recursive" in obj:
        r = obj["recursive"]
        try:
            spec = RecursiveSpec(n, float(r["a0"]), float(r["a1"]), float(r["c_nm1"]),
                                 float(r["c_n"]), float(r.get("c_m1", 0.0)))
        except KeyError as exc:
            raise InvalidInput(f"recursive record missing {exc}") from None
        return build_recursive(spec), spec
    if "dhym" in obj:
        from .dhym import ThetaSystem

        ts = ThetaSystem(n, float(obj["dhym"]["theta"]))
        return ts.coefficients(), ts.recursive_spec()
    raise InvalidInput("equation record needs one of 'c', 'recursive', 'dhym'")


def recursive_spec_from(h: HessianCoefficients, a0: float, a1: float) -> RecursiveSpec:
    return RecursiveSpec(h.n, a0, a1, h.coef(h.n - 1), h.coef(h.n), h.coef(-1))


def structure_constants(spec: RecursiveSpec, kappa: float) -> tuple[float, float]:
    """(k1, k2) in (xi')^2 = k1 + k2 prod xi_j, with kappa = prod p'_j / F^2."""
    return spec.discriminant, 4.0 * spec.top_invariant * kappa


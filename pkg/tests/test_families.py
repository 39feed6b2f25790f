import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadric_ansatz import families as fm
from quadric_ansatz.arrowhead import assemble, phase
from quadric_ansatz.dhym import ThetaSystem, f_theta
from quadric_ansatz.errors import DomainBoundary, InvalidInput
from quadric_ansatz.ode import first_integrals, integrate

from oracles import tanh_family

S = np.linspace(-2, 2, 41)


@st.composite
def admissible_n2(draw):
    a = draw(st.floats(0.5, 2.0))
    b = draw(st.floats(0.5, 2.0))
    l1, l2 = math.atan(a / b), math.atan(b / a)
    return fm.n2_hyperbolic(a, b, draw(st.floats(-l1, l1)), draw(st.floats(-l2, l2)))


def test_tanh_example():
    fam = fm.n2_hyperbolic(1, 1, 0, 0)
    smp = fam.sample(S)
    assert np.allclose(smp.p, np.tanh(S)[:, None], atol=1e-14)
    assert np.allclose(smp.r, -0.25 * np.sinh(2 * S), atol=1e-14)
    F, _ = fam.f_theta(S)
    assert np.allclose(F, 1 / np.cosh(S) ** 2, atol=1e-14)
    assert fam.kappa == 1.0
    p, dp, r, dr = tanh_family(S)
    assert np.allclose(smp.dp[:, 0], dp, atol=1e-14) and np.allclose(smp.dr, dr, atol=1e-13)


def test_exponential_example():
    fam = fm.n2_hyperbolic(1, 1, math.pi / 4, math.pi / 4)
    smp = fam.sample(S)
    assert np.allclose(smp.p, np.exp(2 * S)[:, None], rtol=1e-12)
    assert np.allclose(smp.dp, 2 * np.exp(2 * S)[:, None], rtol=1e-12)
    assert math.isclose(fam.theta, math.pi / 2)
    F, _ = fam.f_theta(S)
    assert np.allclose(np.prod(smp.dp, axis=1) / F ** 2, 1.0, rtol=1e-12)


@given(admissible_n2())
def test_origin_values(fam):
    smp = fam.sample(0.0)
    assert np.allclose(smp.p, np.tan(fam.psi), atol=1e-12)
    assert smp.r == 0


def test_trig_example():
    fam = fm.n2_trig(1, 1, 0, 0)
    s = np.linspace(-1.5, 1.5, 31)
    smp = fam.sample(s)
    assert np.allclose(smp.p[:, 0], np.tan(s), atol=1e-12)
    assert np.allclose(smp.p[:, 1], -np.tan(s), atol=1e-12)
    dom = fam.domain()
    assert math.isclose(dom.lo, -math.pi / 2) and math.isclose(dom.hi, math.pi / 2)
    with pytest.raises(DomainBoundary):
        fam.sample(2.0)


@given(st.floats(0.5, 2), st.floats(0.5, 2), st.floats(-1.4, 1.4), st.floats(-1.4, 1.4))
def test_trig_kappa(a, b, p1, p2):
    fam = fm.n2_trig(a, b, p1, p2)
    dom = fam.domain()
    assert math.isfinite(dom.lo) and math.isfinite(dom.hi)
    spec = ThetaSystem(2, fam.theta).recursive_spec()
    h = ThetaSystem(2, fam.theta).coefficients()
    for s in np.linspace(0.8 * dom.lo, 0.8 * dom.hi, 5):
        fi = first_integrals(spec, h, fam.state(s))
        assert math.isclose(fi.kappa, -1 / (a * b) ** 2, rel_tol=1e-9)


def test_domain_examples():
    dom = fm.n2_hyperbolic(1, 1, math.pi / 3, 0).domain()
    assert not dom.entire
    assert math.isclose(dom.hi, math.atanh(1 / math.tan(math.pi / 3)), rel_tol=1e-12)
    assert fm.n2_hyperbolic(0.7, 1.9, 0, 0).domain().entire
    assert fm.n2_hyperbolic(1, 1, math.pi / 4, -math.pi / 4).domain().entire
    assert fm.n2_hyperbolic(1, 1, math.pi / 3, 0).violations()


def test_highdim_examples():
    base = fm.n2_hyperbolic(1.2, 0.9, 0.3, -0.2)
    flat = fm.highdim_linear(1.2, 0.9, 0.3, -0.2, [0.0, 0.0])
    a, b = base.sample(S), flat.sample(S)
    assert np.allclose(b.p[:, :2], a.p) and np.allclose(b.p[:, 2:], 0) and np.allclose(b.r, a.r)
    fam = fm.highdim_linear(1, 1, 0, 0, [1.0])
    assert np.allclose(fam.sample(S).r, -0.5 * np.sinh(2 * S), atol=1e-13)
    fam = fm.highdim_linear(1.1, 0.8, 0.2, 0.4, [0.7, -1.3])
    H = assemble(fam.sample(0.6), np.zeros(4))
    assert np.allclose(H.Q[2:], [0.7, -1.3])
    assert math.isclose(phase(H), 0.6, abs_tol=1e-12)


def test_subcritical_examples():
    a = fm.subcritical_entire(4, [0.3, -0.2, 0.0, 0.0], [0.5, 1.0], 1.2, 0.9)
    b = fm.highdim_linear(1.2, 0.9, 0.3, -0.2, [0.5, 1.0])
    assert np.allclose(a.sample(S).r, b.sample(S).r) and np.allclose(a.sample(S).q, b.sample(S).q)
    fam = fm.subcritical_entire(3, [math.pi / 4, math.pi / 4, 0.4 * math.pi])
    assert not fam.violations()
    assert math.isclose(phase(assemble(fam.sample(0.0), np.zeros(3))), 0.9 * math.pi, abs_tol=1e-12)


@given(st.integers(3, 6), st.floats(-0.99, 0.99))
def test_split_phase(n, frac):
    Theta = frac * (n - 1) * math.pi / 2
    psi = fm.split_phase(n, Theta)
    assert math.isclose(sum(psi), Theta, abs_tol=1e-12)
    assert not fm.subcritical_entire(n, psi).violations()


def test_boxed_examples():
    fam = fm.boxed_example(3, 0.0)
    x = np.array([0.5, -1.0, 2.0])
    for s in (-1.0, 0.3):
        assert math.isclose(fam.potential(x, s), 2 * math.tanh(s) * (x[0] ** 2 + x[1] ** 2) - math.sinh(2 * s),
                            abs_tol=1e-13)
    fam = fm.boxed_example(4, 1.1)
    assert np.allclose(fam.sample(0.0).p, math.tan(1.1 / 4))
    for Theta in (0.0, math.pi / 2, 0.9 * math.pi):
        s = np.linspace(-0.8, 0.8, 9)
        F, Fp, dF = fm.boxed_example_closed_forms(3, Theta, s)
        fam = fm.boxed_example(3, Theta)
        for i, si in enumerate(s):
            f = f_theta(ThetaSystem(3, Theta), fam.sample(si).p)
            assert math.isclose(f.value, F[i], rel_tol=1e-12, abs_tol=1e-12)
            assert math.isclose(f.perp, Fp[i], rel_tol=1e-12, abs_tol=1e-12)
            assert np.allclose(f.grad[:2], dF[i], rtol=1e-12, atol=1e-12)


@settings(max_examples=20)
@given(admissible_n2())
def test_theta_system_satisfied(fam):
    assert max(fm.theta_ode_residuals(fam, S)) <= 1e-9


def test_theta_system_highdim():
    for fam in (fm.highdim_linear(1.3, 0.7, 0.4, -0.5, [0.8]),
                fm.subcritical_entire(4, fm.split_phase(4, 2.0), [0.3, -0.6]),
                fm.boxed_example(3, 0.9 * math.pi)):
        assert max(fm.theta_ode_residuals(fam, np.linspace(-0.8, 0.8, 17))) <= 1e-9


def test_finite_difference_second_derivative():
    fam = fm.n2_hyperbolic(1.1, 0.9, 0.2, 0.3)
    h = 1e-5
    for s in np.linspace(-2, 2, 9):
        fd = (fam.sample(s + h).p - 2 * fam.sample(s).p + fam.sample(s - h).p) / h ** 2
        exact = fam.sample(s).d2p
        assert np.allclose(fd, exact, rtol=1e-6, atol=1e-4)


@settings(max_examples=10)
@given(admissible_n2())
def test_matches_integration(fam):
    h = ThetaSystem(2, fam.theta).coefficients()
    ev = np.linspace(0, 2, 21)
    for sign in (1, -1):
        tr = integrate(h, fam.state(0.0), 2.0 * sign, s_eval=sign * ev)
        ok = tr.conditioned()
        exact = fam.sample(tr.s).p
        assert np.max(np.abs(tr.p[ok] - exact[ok]) / (1.0 + np.abs(exact[ok]))) <= 1e-7


def test_json_round_trip():
    for fam in (fm.n2_hyperbolic(1.2, 0.9, 0.3, -0.2), fm.n2_trig(1, 2, 0.1, 0.2),
                fm.highdim_linear(1, 1, 0, 0, [0.5]), fm.subcritical_entire(3, [0.2, 0.1, 0.5], [0.3]),
                fm.boxed_example(3, 0.5)):
        back = fm.family_from_dict(json.loads(fam.to_json()))
        assert back.to_dict() == fam.to_dict()
    with pytest.raises(InvalidInput):
        fm.family_from_dict({"variant": "Nope"})
    with pytest.raises(InvalidInput):
        fm.family_from_dict({"variant": "N2Hyperbolic", "psi": [0.1, 0.2], "theta": 1.0})


def test_invalid_parameters():
    with pytest.raises(InvalidInput):
        fm.n2_hyperbolic(-1, 1, 0, 0)
    with pytest.raises(InvalidInput):
        fm.split_phase(3, math.pi)

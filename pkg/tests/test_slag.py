import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadric_ansatz import families as fm
from quadric_ansatz.errors import AngleMismatch, NotApplicable
from quadric_ansatz.ode import SystemState
from quadric_ansatz.slag import (
    JoyceState,
    check_angle,
    continue_joyce,
    frame_determinant,
    graph_map,
    joyce_field,
    joyce_map,
    joyce_residual,
    quadric_point,
    required_theta,
    slag_residual,
    symplectic_pullback,
    write_point_cloud,
    zeta_of,
)
from quadric_ansatz.verify import Grid, constant_solution_sampler

EXP = fm.n2_hyperbolic(1, 1, math.pi / 4, math.pi / 4)
TANH = fm.n2_hyperbolic(1, 1, 0, 0)


def test_slag_residual_examples():
    psi = np.array([0.2, -0.4, 0.7])
    theta = 1.1
    sampler = constant_solution_sampler(np.tan(psi), math.tan(theta - psi.sum()))
    assert slag_residual(theta, sampler, Grid(3, count=7)).scaled_max <= 1e-14
    rep = slag_residual(0.0, TANH.sample, Grid(2, count=21))
    assert rep.max_abs_residual <= 1e-10


def test_graph_map_examples():
    g = graph_map(TANH.sample)
    pt = g(np.zeros(2), 0.7)
    assert np.allclose(pt[:2], 0) and np.isclose(pt[2], 0.7 + 1j * TANH.sample(0.7).dr)
    pt = g(np.array([1.0, 0.0]), 0.0)
    assert np.allclose(pt, [1.0, 0.0, 0.0], atol=1e-15)


def test_graph_is_lagrangian():
    rng = np.random.default_rng(5)
    for fam in (TANH, fm.highdim_linear(1.2, 0.8, 0.3, 0.1, [0.6])):
        for _ in range(10):
            x = rng.uniform(-2, 2, fam.n)
            s = rng.uniform(-2, 2)
            assert symplectic_pullback(fam.sample, x, s) <= 1e-9


def test_required_angle():
    assert math.isclose(required_theta(2), math.pi / 2)
    for n in range(1, 8):
        check_angle(n, required_theta(n))
    with pytest.raises(AngleMismatch) as info:
        check_angle(2, 0.0)
    assert math.isclose(info.value.theta_required, math.pi / 2)


def test_joyce_map_example():
    for s in (-1.0, 0.0, 0.8):
        js = joyce_map(EXP.state(s), EXP.theta)
        w = (-math.exp(s) + 1j * math.exp(-s)) / math.sqrt(2)
        assert np.allclose(js.w, w, atol=1e-13)
        assert np.isclose(js.beta, 1j * s + 0.5 * math.cosh(2 * s), atol=1e-13)
        assert math.isclose(js.t, s)


def test_joyce_map_rejections():
    with pytest.raises(AngleMismatch):
        joyce_map(TANH.state(0.3), 0.0)
    trig = fm.n2_trig(1, 1, 0, 0)
    with pytest.raises(NotApplicable):
        joyce_map(trig.state(0.2), math.pi / 2)


def test_joyce_residual_family():
    res = joyce_residual(EXP, EXP.theta, np.linspace(-2, 2, 41))
    assert res.absolute <= 1e-12 and res.samples == 41


@settings(max_examples=20)
@given(st.floats(0.6, 1.6), st.floats(0.6, 1.6), st.floats(-0.2, 0.2))
def test_joyce_residual_admissible(a, b, shift):
    l1 = math.atan(a / b)
    psi1 = min(math.pi / 4 + shift, l1)
    fam = fm.n2_hyperbolic(a, b, psi1, math.pi / 2 - psi1)
    if fam.violations():
        return
    assert joyce_residual(fam, fam.theta, np.linspace(-1.5, 1.5, 13)).scaled <= 1e-8


def test_quadric_point_examples():
    js = JoyceState(0.0, np.array([1 + 1j, 2.0]), 0.5 - 1j)
    assert np.allclose(quadric_point(js, np.zeros(2)), [0, 0, 0.5 - 1j])
    a = quadric_point(js, np.array([0.3, -1.2]))
    b = quadric_point(js, np.array([-0.3, 1.2]))
    assert np.allclose(a[:2], -b[:2]) and a[2] == b[2]


def test_correspondence():
    rng = np.random.default_rng(8)
    g = graph_map(EXP.sample)
    for _ in range(100):
        x = rng.uniform(-2, 2, 2)
        s = rng.uniform(-2, 2)
        st_ = EXP.state(s)
        q = quadric_point(joyce_map(st_, EXP.theta), zeta_of(st_, x))
        assert np.max(np.abs(q - 1j * g(x, s))) <= 1e-10 * (1 + np.max(np.abs(q)))


def test_continuation_matches_map_and_stays_special():
    fam = fm.n2_hyperbolic(1, 1, math.pi / 3, math.pi / 6)
    dom = fam.domain()
    assert math.isfinite(dom.hi) and dom.hi < 2
    js0 = joyce_map(fam.state(0.0), fam.theta)
    k = math.sqrt(fam.kappa)
    tr = continue_joyce(js0, 2.0 * k, t_eval=np.linspace(0, 2.0 * k, 41))
    assert len(tr) == 41
    for i, t in enumerate(tr.t):
        s = t / k
        if abs(s - dom.hi) < 0.05:
            continue
        js = joyce_map(fam.state(s), fam.theta)
        assert np.allclose(tr.w[i], js.w, atol=1e-8) and np.isclose(tr.beta[i], js.beta, atol=1e-8)
    zetas = np.random.default_rng(2).uniform(-2, 2, (10, 2))
    assert tr.frame_residual(zetas) <= 1e-7
    assert np.all(np.isfinite(tr.point_cloud(zetas)))


def test_frame_determinant_phase():
    js = joyce_map(EXP.state(0.4), EXP.theta)
    d = frame_determinant(js, np.array([0.3, -0.7]))
    assert abs(d.imag) <= 1e-12 * abs(d) and d.real > 0


def test_joyce_field_examples():
    js = JoyceState(0.0, np.array([1j, 2.0, -1.0]), 0.0)
    dw, db = joyce_field(js)
    assert np.allclose(dw, np.conj([-2.0, -1j, 2j])) and np.isclose(db, np.conj(-2j))


def test_point_cloud_csv(tmp_path):
    pts = np.array([[1 + 2j, 3 - 1j]])
    write_point_cloud(tmp_path / "pc.csv", pts)
    lines = (tmp_path / "pc.csv").read_text().splitlines()
    assert lines[0] == "re(z1),im(z1),re(z2),im(z2)"
    assert [float(v) for v in lines[1].split(",")] == [1, 2, 3, -1]

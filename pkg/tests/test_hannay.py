import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as si
from scipy import optimize as so

from hannaycosmo import desitter as ds
from hannaycosmo import dynamics as dyn
from hannaycosmo import fixed_points as fpm
from hannaycosmo import hannay as hn
from hannaycosmo import verify
from hannaycosmo.errors import ConeSingularityError, DomainError, SurfaceConstructionError, UndefinedAngleError
from hannaycosmo.integrate import Tolerances
from hannaycosmo.model import ModelParams

CAP_VALUE = math.pi * (math.cosh(1.0) - 1.0)


def test_cap_reference_value():
    assert CAP_VALUE == pytest.approx(1.7061381, abs=1e-7)


# ------------------------------------------------------------ action-angle

def test_action_angle_standard_oscillator():
    action, angle = hn.action_angle((1.0, 0.0), hn.QuadraticForm(1, 0, 1))
    assert angle == pytest.approx(math.pi / 2, abs=1e-15)
    assert action == pytest.approx(0.5, abs=1e-15)


def test_action_angle_errors():
    with pytest.raises(hn.UnsupportedRegimeError):
        hn.action_angle((1.0, 0.0), hn.QuadraticForm(1, 0, -1))
    with pytest.raises(UndefinedAngleError):
        hn.action_angle((0.0, 0.0), hn.QuadraticForm(1, 0, 1))


def test_frozen_angle_rate_and_action(rng):
    form = hn.QuadraticForm(2.0, 0.5, 1.0)
    w = form.omega
    y0 = rng.normal(size=2)
    t_end = 10 * 2 * math.pi / w
    ts = np.linspace(0, t_end, 2001)
    traj = dyn.integrate("oscillator", y0, form, (0, t_end), Tolerances(1e-12, 1e-14), t_eval=ts)
    aa = np.array([hn.action_angle(s, form) for s in traj.states])
    theta = np.unwrap(aa[:, 1])
    assert np.max(np.abs(theta - theta[0] - w * ts)) < 1e-8
    assert np.max(np.abs(aa[:, 0] - aa[0, 0])) < 1e-10


def test_shoelace_area_of_frozen_orbit(rng):
    form = hn.QuadraticForm(2.0, 0.5, 1.0)
    y0 = rng.normal(size=2)
    period = 2 * math.pi / form.omega
    ts = np.linspace(0, period, 20001)
    traj = dyn.integrate("oscillator", y0, form, (0, period), Tolerances(1e-12, 1e-14), t_eval=ts)
    q, p = traj.states[:-1, 0], traj.states[:-1, 1]
    area = 0.5 * abs(np.dot(q, np.roll(p, -1)) - np.dot(p, np.roll(q, -1)))
    assert area == pytest.approx(2 * math.pi * form.energy(*y0) / form.omega, abs=1e-6)


def test_fixed_point_form_sign():
    q = ModelParams(0, 0, 1, 0.5, 1)
    up = hn.quadratic_form_at(fpm.FixedPoint(0.0, math.pi / 2, fpm.PHASE_LOCKED), q)
    down = hn.quadratic_form_at(fpm.FixedPoint(0.0, -math.pi / 2, fpm.PHASE_LOCKED), q)
    assert (up.a, up.b, up.c) == pytest.approx((1.0, -0.5, 1.0), abs=1e-15)
    assert down.b == pytest.approx(0.5, abs=1e-15)
    assert up.omega == pytest.approx(math.sqrt(0.75), abs=1e-15)


# ------------------------------------------------------------ two-form and coordinates

def test_two_form_on_axis():
    w = hn.angle_two_form_minkowski(hn.to_minkowski(hn.QuadraticForm(2, 0, 2)))
    assert w[0] == pytest.approx(0.125, abs=1e-15)
    assert w[1:] == pytest.approx([0.0, 0.0], abs=1e-15)


def test_two_form_rejects_cone():
    with pytest.raises(ConeSingularityError):
        hn.angle_two_form(hn.QuadraticForm(1, 1, 1))


def test_two_form_scale_pullback(rng):
    for _ in range(200):
        f = verify.random_future_points(rng, 1)[0]
        u, v = rng.normal(size=3), rng.normal(size=3)
        lam = math.exp(rng.uniform(-2, 2))
        # W(F)(u, v) is the Hodge vector contracted with u x v
        w0 = hn.angle_two_form_minkowski(ds.MinkowskiPoint.from_array(f)) @ np.cross(u, v)
        w1 = hn.angle_two_form_minkowski(ds.MinkowskiPoint.from_array(lam * f)) @ np.cross(lam * u, lam * v)
        assert w1 == pytest.approx(w0, rel=1e-12, abs=1e-14)


def test_two_form_integral_is_surface_independent(rng):
    loop = verify.random_smooth_loop(rng, radius=(0.05, 0.06))
    base = hn.fan_base_point(loop)
    other = base * 1.3 + np.array([0.0, 0.02, -0.01])
    assert hn.hannay_from_form(loop, base=other) == pytest.approx(hn.hannay_from_form(loop, base=base), abs=1e-8)


def test_minkowski_coordinates():
    pt = hn.to_minkowski(hn.QuadraticForm(2, 1, 0))
    assert (pt.t_coord, pt.x_coord, pt.y_coord) == (1.0, 1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_minkowski_roundtrip(a, b, c):
    form = hn.QuadraticForm(a, b, c)
    back = hn.from_minkowski(hn.to_minkowski(form))
    assert (back.a, back.b, back.c) == pytest.approx((a, b, c), abs=1e-14 * (1 + abs(a) + abs(c)))


def test_on_shell_identity(rng):
    abc = rng.uniform(-3, 3, size=(1000, 3))
    txy = hn.abc_to_txy(abc)
    lhs = txy[:, 0] ** 2 - txy[:, 1] ** 2 - txy[:, 2] ** 2
    rhs = abc[:, 0] * abc[:, 2] - abc[:, 1] ** 2
    assert np.max(np.abs(lhs - rhs)) < 1e-13
    assert np.max(np.abs(hn.txy_to_abc(txy) - abc)) < 1e-15 * 8


# ------------------------------------------------------------ loops

def test_loop_validation():
    with pytest.raises(ConeSingularityError):
        hn.ParameterLoop.keyframes([[1, 0.99, 1], [2, 0, 1], [1, -0.99, 1]]).validate()
    with pytest.raises(DomainError):
        hn.ParameterLoop.from_json({"kind": "spiral"})
    with pytest.raises(DomainError):
        hn.ParameterLoop.keyframes([[1, 0, 1], [2, 0, 1]])


def test_from_json_kinds():
    cap = hn.ParameterLoop.from_json({"kind": "cap", "psi0": 1.0, "scale": 2.0, "orientation": -1})
    assert cap.orientation == -1
    assert cap.omega(0.3) == pytest.approx(2.0)
    kf = hn.ParameterLoop.from_json({"kind": "keyframes", "points": [[2, 0, 1], [1.5, 0.3, 1.2], [2.5, -0.2, 0.8]]})
    assert kf.point(0.0) == pytest.approx(kf.point(1.0), abs=1e-14)
    fo = hn.ParameterLoop.from_json({"kind": "fourier", "coeffs": {"mean": [2, 0, 2], "cos": [[0.1, 0, 0]]}})
    assert fo.form(0.0).a == pytest.approx(2.1)


def test_keyframe_loop_is_c1_closed():
    loop = hn.ParameterLoop.keyframes([[2, 0, 1], [1.5, 0.3, 1.2], [2.5, -0.2, 0.8], [2.2, 0.1, 1.1]])
    assert loop.tangent(0.0) == pytest.approx(loop.tangent(1.0), abs=1e-12)
    h = 1e-6
    fd = (loop.point(h) - loop.point(-h)) / (2 * h)
    assert fd == pytest.approx(loop.tangent(0.0), abs=1e-6)


# ------------------------------------------------------------ dynamical phase

def test_dynamical_phase_constant_form():
    assert hn.dynamical_phase(hn.ParameterLoop.cap(0.0, scale=2.0), 10.0) == pytest.approx(20.0, rel=1e-12)


def test_dynamical_phase_cap():
    assert hn.dynamical_phase(hn.ParameterLoop.cap(1.0, scale=1.7), 30.0) == pytest.approx(51.0, rel=1e-12)


@pytest.mark.parametrize("profile", ["smooth", "linear"])
def test_dynamical_phase_trapezoid_oracle(profile):
    loop = hn.ParameterLoop.keyframes([[2, 0, 1], [1.5, 0.3, 1.2], [2.5, -0.2, 0.8], [2.2, 0.1, 1.1]])
    u = np.linspace(0.0, 1.0, 1_000_001)
    s = u - np.sin(2 * np.pi * u) / (2 * np.pi) if profile == "smooth" else u
    pts = np.asarray(loop._point(s))
    w = np.sqrt(pts[:, 0] ** 2 - pts[:, 1] ** 2 - pts[:, 2] ** 2)
    oracle = 7.0 * si.trapezoid(w, u)
    assert hn.dynamical_phase(loop, 7.0, profile) == pytest.approx(oracle, rel=1e-9)


# ------------------------------------------------------------ geometric values

def test_cap_geometric_values():
    loop = hn.ParameterLoop.cap(1.0)
    assert hn.winding_number(loop) == 1
    assert hn.hannay_from_area(loop) == pytest.approx(CAP_VALUE, abs=1e-10)
    assert hn.hannay_from_form(loop) == pytest.approx(CAP_VALUE, abs=1e-10)
    assert hn.hannay_from_area(loop.reversed()) == pytest.approx(-CAP_VALUE, abs=1e-10)
    assert hn.hannay_from_form(loop.reversed()) == pytest.approx(-CAP_VALUE, abs=1e-10)


@pytest.mark.parametrize("psi0", [0.2, 0.7, 1.5])
def test_cap_scale_does_not_matter(psi0):
    ref = math.pi * (math.cosh(psi0) - 1)
    assert hn.hannay_from_area(hn.ParameterLoop.cap(psi0, scale=3.0)) == pytest.approx(ref, abs=1e-10)


def test_form_agrees_with_area_on_random_loops():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        loop = verify.random_smooth_loop(rng)
        worst = max(worst, abs(hn.hannay_from_form(loop) - hn.hannay_from_area(loop)))
    assert worst < 1e-6


def test_tiny_loop_scales_quadratically():
    eps = np.array([0.02, 0.01, 0.005])
    m = ds.boost_matrix(0.8, 0.4)
    vals = []
    for e in eps:
        # circle of radius e in a tangent plane at a point with psi = 0.8
        to_abc = lambda v: hn.txy_to_abc(1.2 * (np.atleast_2d(v) @ m.T))
        coeffs = {"mean": to_abc([1.0, 0, 0])[0], "cos": to_abc([0, e, 0]), "sin": to_abc([0, 0, e])}
        vals.append(hn.hannay_from_form(hn.ParameterLoop.fourier(coeffs)))
    slope = np.polyfit(np.log(eps), np.log(np.abs(vals)), 1)[0]
    assert slope == pytest.approx(2.0, abs=1e-3)


def _annulus_oracle(center_psi, radius):
    # area of the boosted cap computed in (psi, phi) with the sinh(psi) measure
    inv = np.linalg.inv(ds.boost_matrix(center_psi, 0.0))
    ch = math.cosh(radius)

    def g(psi, phi):
        x = np.array([math.cosh(psi), math.sinh(psi) * math.cos(phi), math.sinh(psi) * math.sin(phi)])
        return (inv @ x)[0] - ch

    def inner(phi):
        res = so.minimize_scalar(lambda s: g(s, phi), bounds=(center_psi - 2 * radius, center_psi + 2 * radius),
                                 method="bounded", options={"xatol": 1e-13})
        if res.fun >= 0:
            return 0.0
        lo = so.brentq(g, center_psi - 2 * radius, res.x, args=(phi,), xtol=1e-15)
        hi = so.brentq(g, res.x, center_psi + 2 * radius, args=(phi,), xtol=1e-15)
        return math.cosh(hi) - math.cosh(lo)

    def min_g(phi):
        return so.minimize_scalar(lambda s: g(s, phi), bounds=(center_psi - 2 * radius, center_psi + 2 * radius),
                                  method="bounded", options={"xatol": 1e-13}).fun

    edge = so.brentq(min_g, 0.0, 0.5, xtol=1e-15)
    val, _ = si.quad(inner, -edge, edge, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def test_small_circle_off_pole_matches_surface_quadrature():
    loop = hn.ParameterLoop.cap(0.1).boosted(2.0, 0.0)
    assert hn.winding_number(loop) == 0
    assert hn.hannay_from_area(loop) == pytest.approx(0.5 * _annulus_oracle(2.0, 0.1), abs=1e-8)


def test_point_loop_is_zero():
    assert hn.hannay_from_area(hn.ParameterLoop.cap(0.0)) == 0.0
    assert hn.hannay_from_form(hn.ParameterLoop.cap(0.0)) == 0.0


def test_loop_through_pole_is_rejected():
    loop = hn.ParameterLoop.cap(0.5).boosted(-0.5, 0.0)
    with pytest.raises(UndefinedAngleError):
        hn.hannay_from_area(loop)


def test_fan_outside_cone_is_rejected():
    loop = hn.ParameterLoop.cap(1.0)
    with pytest.raises(SurfaceConstructionError):
        hn.hannay_from_form(loop, base=np.array([1.0, 3.0, 0.0]))


# ------------------------------------------------------------ adiabatic evolution

def test_out_and_back_loop_vanishes():
    base = np.array([1.5, 0.2, 0.3])
    coeffs = {"mean": hn.txy_to_abc(base), "cos": [hn.txy_to_abc(np.array([0.0, 0.3, 0.1]))]}
    loop = hn.ParameterLoop.fourier(coeffs)
    assert abs(hn.hannay_from_area(loop)) < 1e-12
    short = hn.adiabatic_run(loop, 50.0, geometric=False).hannay_ode
    long = hn.adiabatic_run(loop, 200.0, geometric=False).hannay_ode
    assert abs(long) < abs(short) / 2
    assert abs(long) < 1e-2


def test_adiabatic_run_orientation():
    fwd = hn.adiabatic_run(hn.ParameterLoop.cap(1.0), 500.0)
    rev = hn.adiabatic_run(hn.ParameterLoop.cap(1.0).reversed(), 500.0)
    assert fwd.hannay_ode == pytest.approx(CAP_VALUE, rel=0.02)
    assert rev.hannay_ode == pytest.approx(-CAP_VALUE, rel=0.02)
    assert rev.hannay_area == pytest.approx(-fwd.hannay_area, abs=1e-12)
    assert fwd.hannay_ode == pytest.approx(fwd.theta_total - fwd.dynamical_phase, abs=1e-12)
    assert fwd.discrepancies["form_vs_area"] < 1e-10
    assert fwd.action_drift < 1e-3


def test_adiabatic_run_rejects_bad_input():
    with pytest.raises(UndefinedAngleError):
        hn.adiabatic_run(hn.ParameterLoop.cap(1.0), 10.0, state0=(0.0, 0.0))
    with pytest.raises(DomainError):
        hn.adiabatic_run(hn.ParameterLoop.cap(1.0), -1.0)


def test_trajectory_samples_per_period():
    res = hn.adiabatic_run(hn.ParameterLoop.cap(0.5, scale=2.0), 20.0, geometric=False, keep_trajectory=True)
    n = len(res.trajectory["t"])
    assert n >= hn.SAMPLES_PER_PERIOD * 2.0 * 20.0 / (2 * math.pi)
    assert np.all(np.abs(np.diff(res.trajectory["theta"])) < math.pi)


def test_convergence_study_table():
    study = hn.convergence_study(hn.ParameterLoop.cap(0.5), [60.0, 120.0, 240.0])
    assert study.reference == pytest.approx(math.pi * (math.cosh(0.5) - 1), abs=1e-10)
    assert study.error_monotone
    assert study.slope > 0.8
    rows = list(study.rows())
    assert len(rows) == 3
    with pytest.raises(DomainError):
        hn.convergence_study(hn.ParameterLoop.cap(0.5), [120.0, 60.0])

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hannaycosmo.errors import DomainError
from hannaycosmo.model import (
    ModelParams,
    PhaseState,
    SpinState,
    TwoModeOverlaps,
    atomic_current,
    eom_full,
    eom_josephson,
    hamiltonian_full,
    josephson_fields,
    params_from_overlaps,
    phase_to_spin,
    spin_eom,
    spin_hamiltonian,
    spin_to_phase,
)

finite = st.floats(-5, 5, allow_nan=False)
params_st = st.builds(ModelParams, finite, finite, finite, finite, finite)


def _random_params(rng):
    return ModelParams(*rng.uniform(-2, 2, 5))


def _energy_oracle(p, th, d, e, a, b, g):
    # term by term
    root = math.sqrt(1 - p * p)
    t1 = e * p
    t2 = g / 2 * p ** 2
    t3 = (d + b * p) * root * math.cos(th)
    t4 = a / 2 * (1 - p ** 2) * math.cos(th) ** 2
    return t1 + t2 + t3 + t4


@pytest.mark.parametrize("state, params, expected", [
    (PhaseState(0, math.pi / 2), ModelParams(0, 0, 0.7, -0.3, 1.2), 0.0),
    (PhaseState(0, 0), ModelParams(delta=1), 1.0),
    (PhaseState(0.5, 0), ModelParams(0.1, 0.2, 0.4, 0.3, 1.0), _energy_oracle(0.5, 0, 0.1, 0.2, 0.4, 0.3, 1.0)),
])
def test_hamiltonian_examples(state, params, expected):
    assert hamiltonian_full(state, params) == pytest.approx(expected, abs=1e-15)


def test_hamiltonian_reference_value():
    value = hamiltonian_full(PhaseState(0.5, 0.0), ModelParams(0.1, 0.2, 0.4, 0.3, 1.0))
    assert value == pytest.approx(0.5915064, abs=1e-7)


def test_state_domain():
    with pytest.raises(DomainError):
        PhaseState(1.0000001, 0.0)
    with pytest.raises(DomainError):
        SpinState(1.0, 0.1, 0.0)
    with pytest.raises(DomainError):
        ModelParams(delta=float("nan"))


def test_eom_vanishes_at_easy_axis_fixed_point():
    assert eom_full(PhaseState(0, math.pi / 2), ModelParams(0, 0, 1, 0.5, 1)) == pytest.approx((0, 0), abs=1e-16)


def test_eom_rejects_poles():
    with pytest.raises(DomainError):
        eom_full(PhaseState(1.0, 0.3), ModelParams(delta=1))


def test_eom_is_hamiltonian_gradient(rng):
    h = 1e-6
    worst = 0.0
    for _ in range(1000):
        q = _random_params(rng)
        p, th = rng.uniform(-0.95, 0.95), rng.uniform(-math.pi, math.pi)
        dh_dth = (hamiltonian_full(PhaseState(p, th + h), q) - hamiltonian_full(PhaseState(p, th - h), q)) / (2 * h)
        dh_dp = (hamiltonian_full(PhaseState(p + h, th), q) - hamiltonian_full(PhaseState(p - h, th), q)) / (2 * h)
        p_dot, th_dot = eom_full(PhaseState(p, th), q)
        worst = max(worst, abs(p_dot + dh_dth), abs(th_dot - dh_dp))
    assert worst < 1e-8


def test_two_eom_forms_agree(rng):
    for _ in range(500):
        q = _random_params(rng)
        s = PhaseState(rng.uniform(-0.99, 0.99), rng.uniform(-10, 10))
        assert eom_full(s, q) == pytest.approx(eom_josephson(s, q), abs=1e-14, rel=1e-14)


def test_linearized_phase_velocity():
    q = ModelParams(delta=0.2, epsilon=0.0, alpha=0.1, beta=0.0, gamma=0.5)
    p = 0.01
    _, th_dot = eom_full(PhaseState(p, 0.0), q)
    linear = -(q.delta + q.alpha - q.gamma) * p
    assert linear == pytest.approx(0.002)
    # remainder is third order in p
    assert abs(th_dot - linear) < 1e-5


@pytest.mark.parametrize("overlaps, expected", [
    (TwoModeOverlaps(k=1), (2, 0, 0, 0, 0)),
    (TwoModeOverlaps(u1=0.7, u2=0.7), (0, 0, 0, 0, 0.7)),
    (TwoModeOverlaps(1, 0.5, 0.2, 0.3, 0.1, 0.05, 0.02, 0.04), (0.47, 0.6, 0.08, 0.03, 0.16)),
])
def test_params_from_overlaps(overlaps, expected):
    assert params_from_overlaps(overlaps).as_array() == pytest.approx(expected, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=8, max_size=8), st.lists(finite, min_size=8, max_size=8),
       st.floats(-3, 3), st.floats(-3, 3))
def test_params_from_overlaps_linear(v1, v2, a, b):
    o1, o2 = TwoModeOverlaps(*v1), TwoModeOverlaps(*v2)
    lhs = params_from_overlaps(a * o1 + b * o2).as_array()
    rhs = a * params_from_overlaps(o1).as_array() + b * params_from_overlaps(o2).as_array()
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("state, expected", [
    (PhaseState(0, math.pi / 2), (0, 1, 0)),
    (PhaseState(1, 2.3), (0, 0, 1)),
    (PhaseState(0.6, 0), (0.8, 0, 0.6)),
])
def test_phase_to_spin(state, expected):
    assert phase_to_spin(state).as_array() == pytest.approx(expected, abs=1e-15)


def test_spin_roundtrip(rng):
    for _ in range(200):
        s = PhaseState(rng.uniform(-0.999, 0.999), rng.uniform(-math.pi, math.pi))
        back = spin_to_phase(phase_to_spin(s))
        assert back.p == pytest.approx(s.p, abs=1e-14)
        assert back.theta == pytest.approx(s.theta, abs=1e-12)
        assert np.linalg.norm(phase_to_spin(s).as_array()) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("spin, params, expected", [
    ((0, 1, 0), ModelParams(0, 0, 1.3, 0.4, -0.2), 0.0),
    ((1, 0, 0), ModelParams(alpha=2), 1.0),
])
def test_spin_hamiltonian_examples(spin, params, expected):
    assert spin_hamiltonian(SpinState(*spin), params) == pytest.approx(expected, abs=1e-15)


def test_spin_hamiltonian_term_by_term(rng):
    q = ModelParams(1, 0.2, 0.5, 0.3, 0.7)
    for _ in range(100):
        v = rng.normal(size=3)
        s = SpinState.from_vector(v, normalize=True)
        oracle = (1 * s.sx + 0.2 * s.sz + 0.25 * s.sx ** 2 + 0.3 * s.sx * s.sz + 0.35 * s.sz ** 2)
        assert spin_hamiltonian(s, q) == pytest.approx(oracle, abs=1e-14)


def test_spin_and_phase_energies_differ_by_constant(rng):
    q = _random_params(rng)
    offsets = []
    for _ in range(1000):
        s = PhaseState(rng.uniform(-1, 1), rng.uniform(-math.pi, math.pi))
        offsets.append(spin_hamiltonian(phase_to_spin(s), q) - hamiltonian_full(s, q))
    assert np.ptp(offsets) < 1e-12
    assert offsets[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("spin, params, expected", [
    ((0, 1, 0), ModelParams(0, 0, 1, 1.5, 1), (0, 0, 0)),
    ((0, -1, 0), ModelParams(0, 0, 1, 1.5, 1), (0, 0, 0)),
    ((0, 0, 1), ModelParams(delta=1), (0, -1, 0)),
])
def test_spin_eom_examples(spin, params, expected):
    assert spin_eom(SpinState(*spin), params) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(-1, 1), st.floats(-math.pi, math.pi))
def test_spin_eom_norm_preserving(q, p, th):
    s = phase_to_spin(PhaseState(p, th))
    assert abs(np.dot(s.as_array(), spin_eom(s, q))) < 1e-13


def test_spin_eom_matches_phase_flow(rng):
    # chain rule through the mapping
    for _ in range(200):
        q = _random_params(rng)
        p, th = rng.uniform(-0.9, 0.9), rng.uniform(-math.pi, math.pi)
        p_dot, th_dot = eom_full(PhaseState(p, th), q)
        r = math.sqrt(1 - p * p)
        dr = -p / r * p_dot
        expect = (dr * math.cos(th) - r * math.sin(th) * th_dot,
                  dr * math.sin(th) + r * math.cos(th) * th_dot, p_dot)
        assert spin_eom(phase_to_spin(PhaseState(p, th)), q) == pytest.approx(expect, abs=1e-12)


def test_josephson_fields_examples():
    jf = josephson_fields(PhaseState(0, math.pi / 2), ModelParams(0, 0, 1, 0.5, 1))
    assert (jf.e_j, jf.e_c) == pytest.approx((0, 0), abs=1e-16)
    jf = josephson_fields(PhaseState(0.4, 1.7), ModelParams(delta=1))
    assert (jf.e_j, jf.e_c) == (1.0, 0.0)
    p, th = 0.3, 1.0
    rc = math.sqrt(1 - p * p) * math.cos(th)
    jf = josephson_fields(PhaseState(p, th), ModelParams(0.1, 0.2, 0.4, 0.3, 1.0))
    assert jf.e_j == pytest.approx(0.1 + 0.3 * p + 0.4 * rc, abs=1e-15)
    assert jf.e_c == pytest.approx(0.2 + 1.0 * p + 0.3 * rc, abs=1e-15)


def test_atomic_current():
    assert atomic_current(0.0, 0.2, 0.1, 1000) == 0.0
    assert atomic_current(0.7, 0.2, 0.0, 50) == pytest.approx(50 * 0.2 * math.sin(0.7))
    assert atomic_current(math.pi / 4, 0.2, 0.1, 1000) == pytest.approx(1000 * (0.2 * math.sqrt(2) / 2 + 0.05))
    with pytest.raises(DomainError):
        atomic_current(0.1, 0.2, 0.1, -1)

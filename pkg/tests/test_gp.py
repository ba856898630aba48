import math
from dataclasses import astuple

import numpy as np
import pytest

from hannaycosmo import gp
from hannaycosmo.errors import DiscretizationError, DomainError

SYMMETRIC = {"m": 1.0, "omega_x": 0.3, "dx_offset": 0.0, "v0": 2.0, "d": 2.0,
             "sigma": 0.4, "centers": [-1.0, 1.0], "g": 0.05, "n_atoms": 1000}


@pytest.mark.parametrize("x, well, expected", [
    (0.0, gp.DoubleWell1D(v0=3.0, d=2.0), 3.0),
    (1.0, gp.DoubleWell1D(m=2.0, omega_x=1.5, v0=3.0, d=2.0), 0.5 * 2.0 * 1.5 ** 2 * 2.0 ** 2 / 4),
    (0.5, gp.DoubleWell1D(1.0, 1.0, 0.2, 2.0, 2.0), 0.5 * (0.5 - 0.2) ** 2 + 2.0 * math.cos(math.pi / 4) ** 2),
])
def test_potential_examples(x, well, expected):
    assert float(gp.potential_eval(x, well)) == pytest.approx(expected, abs=1e-15)


def test_well_validation():
    with pytest.raises(DomainError):
        gp.DoubleWell1D(d=0.0)
    with pytest.raises(DomainError):
        gp.DoubleWell1D(v0=-1.0)
    with pytest.raises(DomainError):
        gp.DoubleWell1D(m=0.0)


def test_grid_layout():
    grid = gp.Grid.around((-1.0, 1.0), 0.25, refine=16, margin=8)
    assert grid.n % 2 == 1
    assert grid.x[grid.n // 2] == pytest.approx(0.0, abs=1e-15)
    assert grid.x0 <= -1.0 - 8 * 0.25
    fine = grid.refined()
    assert (fine.x0, fine.x_end) == pytest.approx((grid.x0, grid.x_end))
    with pytest.raises(DiscretizationError):
        gp.Grid(0.0, 0.1, 10)


# ------------------------------------------------------------ modes

@pytest.mark.parametrize("sep", [2.0, 4.0, 10.0])
def test_modes_orthonormal(sep):
    modes = gp.gaussian_modes((-sep / 2, sep / 2), 1.0)
    assert modes.orthonormality_error() < 1e-10


def test_mirror_symmetry():
    modes = gp.gaussian_modes((-0.7, 0.7), 0.5)
    assert np.max(np.abs(modes.phi2 - modes.phi1[::-1])) < 1e-12


def test_far_apart_modes_are_untouched():
    sigma = 0.3
    modes = gp.gaussian_modes((0.0, 10 * sigma), sigma)
    assert abs(modes.meta["raw_overlap"]) < 1e-10
    x = modes.grid.x
    raw = np.exp(-x ** 2 / (2 * sigma ** 2)) / math.sqrt(sigma * math.sqrt(math.pi))
    assert np.max(np.abs(modes.phi1 - raw)) < 1e-9


@pytest.mark.parametrize("sep", [4.0, 6.0])
def test_modes_stay_localized(sep):
    modes = gp.gaussian_modes((-sep / 2, sep / 2), 1.0)
    x = modes.grid.x
    left = np.where(x < 0, modes.phi1 ** 2, 0.0)
    right = np.where(x > 0, modes.phi2 ** 2, 0.0)
    assert gp._integrate(left, modes.grid) >= 0.95
    assert gp._integrate(right, modes.grid) >= 0.95


def test_mode_grid_checks():
    with pytest.raises(DiscretizationError):
        gp.gaussian_modes((0.0, 1.0), 0.1, gp.Grid(-2.0, 0.05, 101))
    with pytest.raises(DiscretizationError):
        gp.gaussian_modes((0.0, 1.0), 0.1, gp.Grid(-0.3, 0.001, 1601))


# ------------------------------------------------------------ overlaps

def test_quartic_overlap_matches_gaussian_integral():
    sigma = 0.5
    modes = gp.gaussian_modes((-5.0, 5.0), sigma)
    ov = gp.overlap_integrals(modes, gp.DoubleWell1D(), g=1.0, n_atoms=1.0)
    # amplitude width sigma means a density standard deviation of sigma / sqrt(2)
    sigma_density = sigma / math.sqrt(2)
    oracle = 1 / (sigma_density * math.sqrt(2 * math.pi) * math.sqrt(2))
    assert oracle == pytest.approx(1 / (sigma * math.sqrt(2 * math.pi)), rel=1e-15)
    assert ov.u1 == pytest.approx(oracle, abs=1e-8)
    assert ov.u2 == pytest.approx(oracle, abs=1e-8)


def test_single_mode_energy_matches_closed_form():
    # kinetic 1/(4 m sigma^2) plus harmonic expectation m w^2/2 (sigma^2/2 + (x0 - offset)^2)
    sigma, m, w = 0.4, 1.3, 0.7
    well = gp.DoubleWell1D(m=m, omega_x=w, dx_offset=0.3, v0=0.0, d=1.0)
    modes = gp.gaussian_modes((-2.0, 2.0), sigma)
    ov = gp.overlap_integrals(modes, well, g=0.0, n_atoms=1.0)
    for x0, eps in ((-2.0, ov.eps1), (2.0, ov.eps2)):
        expected = 1 / (4 * m * sigma ** 2) + 0.5 * m * w ** 2 * (sigma ** 2 / 2 + (x0 - 0.3) ** 2)
        assert eps == pytest.approx(expected, abs=1e-8)


def test_far_apart_couplings_vanish():
    sigma = 0.3
    modes = gp.gaussian_modes((0.0, 10 * sigma), sigma)
    ov = gp.overlap_integrals(modes, gp.DoubleWell1D(v0=1.0, d=3 * sigma), g=0.2, n_atoms=100)
    bound = 1e-8 * ov.u1
    assert max(abs(ov.k), abs(ov.u12), abs(ov.u21), abs(ov.i_pair)) < bound


def test_symmetric_overlaps():
    build = gp.model_from_geometry(SYMMETRIC)
    ov = build.overlaps
    assert ov.eps1 == pytest.approx(ov.eps2, abs=1e-10)
    assert ov.u1 == pytest.approx(ov.u2, abs=1e-10)
    assert ov.u12 == pytest.approx(ov.u21, abs=1e-10)


def test_overlaps_reject_non_orthonormal_modes():
    modes = gp.gaussian_modes((-1.0, 1.0), 0.5)
    bad = gp.ModePair(modes.grid, 1.01 * modes.phi1, modes.phi2)
    with pytest.raises(DomainError):
        gp.overlap_integrals(bad, gp.DoubleWell1D(), 1.0, 1.0)
    with pytest.raises(DomainError):
        gp.overlap_integrals(modes, gp.DoubleWell1D(), 1.0, -1.0)


def test_grid_doubling_converges():
    sigma, centers = SYMMETRIC["sigma"], SYMMETRIC["centers"]
    well = gp.DoubleWell1D(1.0, 0.3, 0.1, 2.0, 2.0)
    grid = gp.Grid.around(centers, sigma)
    coarse = gp.overlap_integrals(gp.gaussian_modes(centers, sigma, grid), well, 0.05, 1000)
    fine = gp.overlap_integrals(gp.gaussian_modes(centers, sigma, grid.refined()), well, 0.05, 1000)
    assert np.max(np.abs(np.array(astuple(coarse)) - np.array(astuple(fine)))) < 1e-8


# ------------------------------------------------------------ model building

def test_symmetric_geometry_gives_zero_bias():
    params = gp.model_from_geometry(SYMMETRIC).params
    assert abs(params.epsilon) < 1e-10
    assert abs(params.beta) < 1e-10
    assert params.gamma != 0.0


def test_zero_coupling():
    spec = dict(SYMMETRIC, g=0.0)
    build = gp.model_from_geometry(spec)
    p = build.params
    assert (p.alpha, p.beta, p.gamma) == (0.0, 0.0, 0.0)
    assert p.delta == 2 * build.overlaps.k


def test_model_is_bit_reproducible():
    a = gp.model_from_geometry(SYMMETRIC)
    b = gp.model_from_geometry(dict(SYMMETRIC))
    assert a.params.as_array().tobytes() == b.params.as_array().tobytes()
    assert a.provenance == b.provenance
    assert a.provenance["ansatz"] == "gaussian+loewdin"


def test_geometry_validation():
    with pytest.raises(DomainError):
        gp.model_from_geometry({"centers": [-1, 1]})
    with pytest.raises(DiscretizationError):
        gp.model_from_geometry(dict(SYMMETRIC, grid={"x0": -2.0, "dx": 0.5, "n": 9}))

"""Seeded identity sweeps over the geometry modules.

Every check returns a :class:`Check` holding the worst residual, the
tolerance it was judged against and the verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import desitter as ds
from . import hannay as hn


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float
    samples: int

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tolerance)


def random_future_points(rng, n: int, omega=(0.5, 2.0), psi_max: float = 2.0) -> np.ndarray:
    """(T, X, Y) rows spread over hyperboloids of radius omega in the given range."""
    w = np.exp(rng.uniform(math.log(omega[0]), math.log(omega[1]), n))
    psi = rng.uniform(0.0, psi_max, n)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return w[:, None] * np.column_stack([np.cosh(psi), np.sinh(psi) * np.cos(phi), np.sinh(psi) * np.sin(phi)])


def random_smooth_loop(rng, harmonics: int = 3, omega0=(0.5, 2.0), psi_c=(0.0, 2.0),
                       radius=(0.05, 0.3)) -> hn.ParameterLoop:
    """Random Fourier loop around a random point of the future cone.

    The loop is ``omega0 * M (e0 + delta(s))`` with M a boost taking the T axis
    to the base direction and |delta| well inside the unit hyperboloid's
    tangent ball, so omega stays near omega0.
    """
    w0 = rng.uniform(*omega0)
    m = ds.boost_matrix(rng.uniform(*psi_c), rng.uniform(0.0, 2.0 * math.pi))
    r = rng.uniform(*radius)
    cos_c = np.zeros((harmonics, 3))
    sin_c = np.zeros((harmonics, 3))
    cos_c[0] = [0.0, r, 0.0]
    sin_c[0] = [0.0, 0.0, r]
    for k in range(1, harmonics):
        cos_c[k] = rng.normal(scale=0.25 * r / (k + 1), size=3)
        sin_c[k] = rng.normal(scale=0.25 * r / (k + 1), size=3)
    mean = np.array([1.0, 0.0, 0.0])
    to_abc = lambda v: hn.txy_to_abc(w0 * (np.atleast_2d(v) @ m.T))
    coeffs = {"mean": to_abc(mean)[0], "cos": to_abc(cos_c), "sin": to_abc(sin_c)}
    return hn.ParameterLoop.fourier(coeffs).validate()


def smooth_scale(rng, amplitude: float = 0.4):
    """Random smooth positive periodic function and its derivative."""
    a = rng.uniform(-amplitude, amplitude, 2)
    shift = rng.uniform(0.0, 2.0 * math.pi)
    two_pi = 2.0 * math.pi

    def lam(s):
        return math.exp(a[0] * math.sin(two_pi * s + shift) + a[1] * math.cos(2 * two_pi * s))

    def dlam(s):
        return lam(s) * (a[0] * two_pi * math.cos(two_pi * s + shift)
                         - a[1] * 2 * two_pi * math.sin(2 * two_pi * s))

    return lam, dlam


# ------------------------------------------------------------ individual sweeps

def check_two_form_identity(rng, n: int = 1000, fault: float = 1.0, tol: float = 1e-12) -> Check:
    """W expressed in (T, X, Y) against half the hyperboloid curvature form."""
    pts = random_future_points(rng, n)
    worst = 0.0
    for v in pts:
        pt = ds.MinkowskiPoint.from_array(v)
        w = fault * hn.angle_two_form_minkowski(pt)
        r = ds.curvature_form_minkowski(pt)
        worst = max(worst, float(np.max(np.abs(w - 0.5 * r))))
    return Check("two_form_identity", worst, tol, n)


def check_embedding(rng, n: int = 200, tol: float = 1e-12) -> Check:
    worst = 0.0
    for _ in range(n):
        t = rng.uniform(-2.0, 2.0)
        ep = ds.embed(t, ds.HyperboloidPoint(rng.uniform(0, 2.0), rng.uniform(0, 2 * math.pi)))
        worst = max(worst, abs(ep.constraint_residual) / max(1.0, ep.z_mink ** 2))
    return Check("embedding_constraint", worst, tol, n)


def check_metric_pullback(rng, n: int = 100, tol: float = 1e-10) -> Check:
    worst = 0.0
    for _ in range(n):
        worst = max(worst, ds.flrw_pullback_residual(rng.uniform(-1.5, 1.5), rng.uniform(0, 1.5),
                                                     rng.uniform(0, 2 * math.pi)))
    return Check("flrw_pullback", worst, tol, n)


def _curvature_point(rng):
    sign = rng.choice([-1.0, 1.0])
    return sign * rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5), rng.uniform(0, 2 * math.pi)


def check_curvature(rng, n: int = 50) -> list[Check]:
    scal = ric = riem = 0.0
    for _ in range(n):
        t, psi, phi = _curvature_point(rng)
        rep = ds.curvature_checks(t, psi, phi=phi)
        scal = max(scal, rep.scalar_residual)
        ric = max(ric, rep.ricci_residual)
        riem = max(riem, rep.riemann_residual)
    return [Check("scalar_curvature", scal, 1e-5, n), Check("ricci", ric, 1e-5, n),
            Check("riemann_maximal_symmetry", riem, 1e-4, n)]


def check_cartan(rng, n: int = 200, tol: float = 1e-10) -> list[Check]:
    tors = curv = 0.0
    for _ in range(n):
        f = ds.hyperboloid_forms(ds.HyperboloidPoint(rng.uniform(0, 3.0), rng.uniform(0, 2 * math.pi)),
                                 a=rng.uniform(0.5, 2.0))
        tors = max(tors, f.torsion_residual)
        curv = max(curv, f.curvature_residual)
    return [Check("cartan_torsion", tors, tol, n), Check("cartan_curvature", curv, tol, n)]


def check_conformal(rng, n: int = 100, tol: float = 1e-10) -> list[Check]:
    metric = roundtrip = 0.0
    for _ in range(n):
        cp = ds.ConformalPoint(rng.uniform(-1.3, 1.3), rng.uniform(0.05, math.pi - 0.05),
                               rng.uniform(0, 2 * math.pi))
        metric = max(metric, ds.conformal_pullback_residual(cp) / ds.conformal_factor(cp.tau))
        back = ds.conformal_chart(ds.conformal_to_embedding(cp))
        dphi = (back.phi - cp.phi + math.pi) % (2 * math.pi) - math.pi
        roundtrip = max(roundtrip, abs(back.tau - cp.tau), abs(back.psi_c - cp.psi_c), abs(dphi))
    return [Check("conformal_metric", metric, tol, n), Check("conformal_roundtrip", roundtrip, 1e-12, n)]


def check_loop_invariance(rng, n_loops: int = 5, tol: float = 1e-8) -> list[Check]:
    boost = scale = orient = 0.0
    for _ in range(n_loops):
        loop = random_smooth_loop(rng)
        ref = hn.hannay_from_area(loop)
        b = loop.boosted(rng.uniform(-2.0, 2.0), rng.uniform(0, 2 * math.pi))
        boost = max(boost, abs(hn.hannay_from_area(b) - ref))
        scale = max(scale, abs(hn.hannay_from_area(loop.rescaled(*smooth_scale(rng))) - ref))
        orient = max(orient, abs(hn.hannay_from_area(loop.reversed()) + ref))
    return [Check("boost_invariance", boost, tol, n_loops), Check("scale_invariance", scale, tol, n_loops),
            Check("orientation_antisymmetry", orient, tol, n_loops)]


def geometry_sweep(seed: int = 0, points: int = 1000, inject_fault: bool = False) -> list[Check]:
    """All geometry identities, each drawn from its own seeded stream."""
    streams = np.random.SeedSequence(seed).spawn(7)
    rngs = [np.random.default_rng(s) for s in streams]
    checks = [
        check_two_form_identity(rngs[0], points, fault=1.01 if inject_fault else 1.0),
        check_embedding(rngs[1]),
        check_metric_pullback(rngs[2]),
        *check_curvature(rngs[3]),
        *check_cartan(rngs[4]),
        *check_conformal(rngs[5]),
        *check_loop_invariance(rngs[6]),
    ]
    return checks

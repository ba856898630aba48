"""Numerical differential geometry of 2+1 de Sitter space.

Conventions
-----------
* Ambient Minkowski-4 metric ``-dT^2 + dX^2 + dY^2 + dZ^2``; de Sitter is the
  hyperboloid ``-T^2 + X^2 + Y^2 + Z^2 = 1``.
* FLRW chart ``(t, psi, phi)`` with scale factor ``a(t) = sinh t``.
* Riemann tensor ``R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb``,
  Ricci ``R_bd = R^a_bad``; with this sign de Sitter has ``R = 6``.
* On the unit hyperboloid the connection form is ``w^2_1 = cosh(psi) dphi``
  (``w^1_2 = -w^2_1``) and the curvature form ``R^2_1 = sinh(psi) dpsi^dphi``.
* 2-forms on (T, X, Y) space are stored as ``(w_xy, w_yt, w_tx)``, the
  coefficients of ``dX^dY, dY^dT, dT^dX``; evaluated on tangent vectors
  ``u, v`` they give ``w . (u x v)`` with vectors ordered (T, X, Y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartError, ConeSingularityError, DomainError

FD_STEP = 1e-4
# first derivatives of the embedding are roundoff-limited at FD_STEP; truncation is still
# below 1e-12 here
PULLBACK_STEP = 2e-3
# sec(tau) has steep high derivatives, so the conformal chart balances at a smaller step
CONFORMAL_STEP = 3e-4
MAX_RAPIDITY = 20.0
MINKOWSKI4 = np.diag([-1.0, 1.0, 1.0, 1.0])


@dataclass(frozen=True)
class EmbeddingPoint:
    t_mink: float
    x_mink: float
    y_mink: float
    z_mink: float

    def __post_init__(self):
        r = self.constraint_residual
        if not abs(r) <= 1e-12 * max(1.0, self.z_mink ** 2, self.t_mink ** 2):
            raise DomainError(f"point is off the de Sitter hyperboloid (residual {r:.3e})")

    @property
    def constraint_residual(self) -> float:
        return -self.t_mink ** 2 + self.x_mink ** 2 + self.y_mink ** 2 + self.z_mink ** 2 - 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.t_mink, self.x_mink, self.y_mink, self.z_mink])


@dataclass(frozen=True)
class HyperboloidPoint:
    """Point (psi, phi) of the unit hyperboloid; phi is wrapped into [0, 2 pi)."""

    psi: float
    phi: float = 0.0
    at_pole: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.psi) and self.psi >= 0.0):
            raise DomainError("psi must be finite and non-negative")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    def unit_vector(self) -> np.ndarray:
        """(T~, X~, Y~) on the unit hyperboloid."""
        sh = math.sinh(self.psi)
        return np.array([math.cosh(self.psi), sh * math.cos(self.phi), sh * math.sin(self.phi)])


@dataclass(frozen=True)
class MinkowskiPoint:
    """Point (T, X, Y) of 2+1 Minkowski space (the oscillator parameter space)."""

    t_coord: float
    x_coord: float
    y_coord: float

    @property
    def interval(self) -> float:
        return self.t_coord ** 2 - self.x_coord ** 2 - self.y_coord ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.t_coord, self.x_coord, self.y_coord])

    @classmethod
    def from_array(cls, v) -> "MinkowskiPoint":
        return cls(*(float(x) for x in v))


@dataclass(frozen=True)
class MetricAt:
    labels: tuple
    components: np.ndarray

    @property
    def signature(self) -> tuple:
        ev = np.linalg.eigvalsh(self.components)
        return tuple(int(np.sign(x)) for x in ev)


def embed(t: float, hp: HyperboloidPoint) -> EmbeddingPoint:
    """FLRW slice coordinates -> 4D embedding (T, X, Y, Z)."""
    sh = math.sinh(t)
    tt, xx, yy = sh * hp.unit_vector()
    return EmbeddingPoint(tt, xx, yy, math.cosh(t))


def _embed_array(x):
    t, psi, phi = x
    sh = math.sinh(t)
    return np.array([sh * math.cosh(psi), sh * math.sinh(psi) * math.cos(phi),
                     sh * math.sinh(psi) * math.sin(phi), math.cosh(t)])


def flrw_metric(t: float, psi: float) -> MetricAt:
    a2 = math.sinh(t) ** 2
    return MetricAt(("t", "psi", "phi"), np.diag([-1.0, a2, a2 * math.sinh(psi) ** 2]))


def scale_factor(t: float) -> float:
    return math.sqrt(flrw_metric(t, 1.0).components[1, 1])


# ------------------------------------------------------------ finite differences

def _central(f, x, k, h):
    e = np.zeros_like(x)
    e[k] = h
    return (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h)


def derivative(f, x, k, h=FD_STEP):
    """Richardson-extrapolated central difference of ``f`` along coordinate ``k``."""
    x = np.asarray(x, dtype=float)
    return (4.0 * _central(f, x, k, 0.5 * h) - _central(f, x, k, h)) / 3.0


def induced_metric(x, embedding=_embed_array, h=FD_STEP) -> np.ndarray:
    """Pull back the ambient Minkowski metric through ``embedding`` at chart point x."""
    jac = np.column_stack([derivative(embedding, x, k, h) for k in range(len(x))])
    return jac.T @ MINKOWSKI4 @ jac


def _flrw_components(x):
    return flrw_metric(x[0], x[1]).components


def christoffel(metric, x, h=FD_STEP) -> np.ndarray:
    """G^a_bc at x from finite differences of ``metric(x)``; indexed [a, b, c]."""
    x = np.asarray(x, dtype=float)
    g_inv = np.linalg.inv(metric(x))
    dg = np.array([derivative(metric, x, k, h) for k in range(x.size)])  # dg[k, i, j] = d_k g_ij
    lowered = 0.5 * (np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg)
    # lowered[d, b, c] = (d_b g_dc + d_c g_db - d_d g_bc) / 2
    return np.einsum("ad,dbc->abc", g_inv, lowered)


def riemann(metric, x, h=FD_STEP) -> np.ndarray:
    """R^a_bcd at x; derivatives of the Christoffels are nested finite differences."""
    x = np.asarray(x, dtype=float)
    gam = christoffel(metric, x, h)
    dgam = np.array([derivative(lambda y: christoffel(metric, y, h), x, k, h)
                     for k in range(x.size)])  # dgam[k, a, b, c] = d_k G^a_bc
    term1 = np.einsum("cadb->abcd", dgam)           # d_c G^a_db
    term2 = np.einsum("dacb->abcd", dgam)           # d_d G^a_cb
    term3 = np.einsum("ace,edb->abcd", gam, gam)
    term4 = np.einsum("ade,ecb->abcd", gam, gam)
    return term1 - term2 + term3 - term4


@dataclass(frozen=True)
class CurvatureReport:
    scalar: float
    scalar_residual: float
    ricci_residual: float
    riemann_residual: float


def curvature_checks(t: float, psi: float, h: float = FD_STEP, phi: float = 0.0) -> CurvatureReport:
    """Residuals of R = 6, Ricci = 2g and maximal symmetry for the FLRW chart."""
    if abs(math.sinh(t)) <= 0.1 or psi <= 0.1:
        raise ChartError("curvature checks need |sinh t| > 0.1 and psi > 0.1")
    if not 1e-5 <= h <= 1e-3:
        raise DomainError("finite-difference step must lie in [1e-5, 1e-3]")
    x = np.array([t, psi, phi])
    g = _flrw_components(x)
    g_inv = np.linalg.inv(g)
    r_up = riemann(_flrw_components, x, h)
    r_low = np.einsum("ae,ebcd->abcd", g, r_up)
    ricci = np.einsum("abad->bd", r_up)
    scalar = float(np.einsum("bd,bd->", g_inv, ricci))
    symmetric = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    return CurvatureReport(
        scalar=scalar,
        scalar_residual=abs(scalar - 6.0),
        ricci_residual=float(np.max(np.abs(ricci - 2.0 * g))),
        riemann_residual=float(np.max(np.abs(r_low - symmetric))),
    )


# ------------------------------------------------------------ tetrad forms

@dataclass(frozen=True)
class HyperboloidForms:
    """Tetrad data on a hyperboloid slice in the (dpsi, dphi) basis.

    ``e1, e2, connection`` are 1-form coefficient pairs; ``curvature`` is the
    dpsi^dphi coefficient of R^2_1. ``connection`` is w^2_1.
    """

    e1: tuple
    e2: tuple
    connection: tuple
    curvature: float
    torsion_residual: float
    curvature_residual: float


def _vielbein(x, a):
    psi = x[0]
    return np.array([[a, 0.0], [0.0, a * math.sinh(psi)]])


def _connection21(x):
    return np.array([0.0, math.cosh(x[0])])


def _curvature21(x):
    return math.sinh(x[0])


def _d_one_form(form, x, h):
    # d(f_psi dpsi + f_phi dphi) = (d_psi f_phi - d_phi f_psi) dpsi^dphi
    return derivative(lambda y: form(y)[1], x, 0, h) - derivative(lambda y: form(y)[0], x, 1, h)


def _wedge(alpha, beta):
    return alpha[0] * beta[1] - alpha[1] * beta[0]


def hyperboloid_forms(hp: HyperboloidPoint, a: float = 1.0, h: float = PULLBACK_STEP) -> HyperboloidForms:
    x = np.array([hp.psi, hp.phi])
    e = _vielbein(x, a)
    w21 = _connection21(x)
    de1 = _d_one_form(lambda y: _vielbein(y, a)[0], x, h)
    de2 = _d_one_form(lambda y: _vielbein(y, a)[1], x, h)
    torsion = max(abs(de1 + _wedge(-w21, e[1])), abs(de2 + _wedge(w21, e[0])))
    # omega^omega vanishes identically for a single rotation generator in 2D
    curv = abs(_d_one_form(_connection21, x, h) - _curvature21(x))
    return HyperboloidForms(tuple(e[0]), tuple(e[1]), tuple(w21), _curvature21(x),
                            float(torsion), float(curv))


# ------------------------------------------------------------ Minkowski 2-forms

def curvature_form_minkowski(pt) -> np.ndarray:
    """Coefficients (w_xy, w_yt, w_tx) of R^2_1 written on (T, X, Y) space."""
    v = pt.as_array() if isinstance(pt, MinkowskiPoint) else np.asarray(pt, dtype=float)
    interval = v[..., 0] ** 2 - v[..., 1] ** 2 - v[..., 2] ** 2
    if np.any(interval <= 0):
        raise ConeSingularityError("curvature form is singular on and outside the light cone")
    return v / interval[..., None] ** 1.5


def evaluate_two_form(coeffs, u, v) -> float:
    """Value of a 2-form with Hodge-vector coefficients on the pair (u, v)."""
    return float(np.dot(coeffs, np.cross(u, v)))


def pullback_to_chart(form_fn, chart, x, h=PULLBACK_STEP) -> float:
    """dx0^dx1 coefficient of a 2-form pulled back through ``chart(x)``."""
    x = np.asarray(x, dtype=float)
    u = derivative(chart, x, 0, h)
    v = derivative(chart, x, 1, h)
    return evaluate_two_form(form_fn(chart(x)), u, v)


def hyperboloid_chart(x, omega=1.0):
    """(psi, phi) -> (T, X, Y) on the hyperboloid of radius omega."""
    psi, phi = x
    sh = math.sinh(psi)
    return omega * np.array([math.cosh(psi), sh * math.cos(phi), sh * math.sin(phi)])


# ------------------------------------------------------------ symmetries

def boost_matrix(rapidity: float, axis: float = 0.0) -> np.ndarray:
    """SO(2,1) boost acting on (T, X, Y) along the direction at angle ``axis`` in the X-Y plane."""
    if not abs(rapidity) < MAX_RAPIDITY:
        raise DomainError(f"|rapidity| must be < {MAX_RAPIDITY}")
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    n = np.array([math.cos(axis), math.sin(axis)])
    m = np.eye(3)
    m[0, 0] = ch
    m[0, 1:] = sh * n
    m[1:, 0] = sh * n
    m[1:, 1:] = np.eye(2) + (ch - 1.0) * np.outer(n, n)
    return m


def lorentz_boost(pt, rapidity: float, axis: float = 0.0):
    """Boost a MinkowskiPoint or an array of (T, X, Y) rows."""
    m = boost_matrix(rapidity, axis)
    if isinstance(pt, MinkowskiPoint):
        return MinkowskiPoint.from_array(m @ pt.as_array())
    return np.asarray(pt, dtype=float) @ m.T


def scale_map(pt, lam):
    if isinstance(pt, MinkowskiPoint):
        return MinkowskiPoint.from_array(lam * pt.as_array())
    return np.asarray(lam)[..., None] * np.asarray(pt, dtype=float) if np.ndim(lam) else lam * np.asarray(pt)


def project_to_hyperboloid(pt) -> tuple[HyperboloidPoint, float]:
    """Radial projection of a future-cone point onto the unit hyperboloid.

    Returns the hyperbolic coordinates and the scale omega = sqrt(T^2-X^2-Y^2).
    At the pole phi is reported as 0 with ``at_pole`` set.
    """
    t, x, y = pt.as_array() if isinstance(pt, MinkowskiPoint) else np.asarray(pt, dtype=float)
    interval = t * t - x * x - y * y
    if not (t > 0 and interval > 0):
        raise ConeSingularityError("point is not inside the future cone; the adiabatic angle diverges here")
    omega = math.sqrt(interval)
    rho = math.hypot(x, y)
    psi = math.asinh(rho / omega)
    if rho == 0.0:
        return HyperboloidPoint(psi, 0.0, at_pole=True), omega
    return HyperboloidPoint(psi, math.atan2(y, x)), omega


# ------------------------------------------------------------ conformal chart

@dataclass(frozen=True)
class ConformalPoint:
    tau: float
    psi_c: float
    phi: float


def conformal_factor(tau: float) -> float:
    """1/cos^2(tau); the figure's cos^-1 is read as the secant."""
    return 1.0 / math.cos(tau) ** 2


def conformal_metric(tau: float, psi_c: float) -> MetricAt:
    f = conformal_factor(tau)
    return MetricAt(("tau", "psi_c", "phi"), f * np.diag([-1.0, 1.0, math.sin(psi_c) ** 2]))


def conformal_chart(ep: EmbeddingPoint) -> ConformalPoint:
    """(T, X, Y, Z) -> (tau, psi_c, phi) with T = tan tau, r = sec tau sin psi_c, Z = sec tau cos psi_c."""
    tau = math.atan(ep.t_mink)
    r = math.hypot(ep.x_mink, ep.y_mink)
    psi_c = math.atan2(r, ep.z_mink)
    phi = math.atan2(ep.y_mink, ep.x_mink) % (2 * math.pi) if r > 0 else 0.0
    return ConformalPoint(tau, psi_c, phi)


def _conformal_array(x):
    tau, psi_c, phi = x
    sec = 1.0 / math.cos(tau)
    r = sec * math.sin(psi_c)
    return np.array([math.tan(tau), r * math.cos(phi), r * math.sin(phi), sec * math.cos(psi_c)])


def conformal_to_embedding(cp: ConformalPoint) -> EmbeddingPoint:
    if not abs(cp.tau) < 0.5 * math.pi:
        raise ChartError("conformal time must satisfy |tau| < pi/2")
    return EmbeddingPoint(*_conformal_array((cp.tau, cp.psi_c, cp.phi)))


def conformal_pullback_residual(cp: ConformalPoint, h: float = CONFORMAL_STEP) -> float:
    """Max difference between the stated conformal metric and the induced one."""
    x = np.array([cp.tau, cp.psi_c, cp.phi])
    return float(np.max(np.abs(induced_metric(x, _conformal_array, h) - conformal_metric(cp.tau, cp.psi_c).components)))


def flrw_pullback_residual(t: float, psi: float, phi: float, h: float = PULLBACK_STEP) -> float:
    x = np.array([t, psi, phi])
    return float(np.max(np.abs(induced_metric(x, _embed_array, h) - flrw_metric(t, psi).components)))

"""Hannay angle of the generalized harmonic oscillator, computed three ways.

The oscillator is ``H = (a q^2 + 2 b q p + c p^2) / 2`` with frequency
``omega = sqrt(a c - b^2)``. Its parameter space is treated as 2+1 Minkowski
space through ``T = (a + c)/2, X = (a - c)/2, Y = b`` so that
``omega^2 = T^2 - X^2 - Y^2``.

* :func:`adiabatic_run` integrates the slowly driven linear flow and reads off
  the angle shift beyond the dynamical phase.
* :func:`hannay_from_form` integrates the angle 2-form over a fan surface.
* :func:`hannay_from_area` projects the loop onto the unit hyperboloid and
  computes half the enclosed hyperbolic area as a holonomy line integral.

Sign convention: loops traversed with increasing azimuth phi (counterclockwise
in the X-Y plane) have a positive angle.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as spi
from scipy.interpolate import CubicSpline

from .desitter import MinkowskiPoint, boost_matrix
from .errors import (
    ConeSingularityError,
    DomainError,
    SurfaceConstructionError,
    UndefinedAngleError,
)
from .integrate import Tolerances, dopri5

OMEGA_MIN = 0.05
SAMPLES_PER_PERIOD = 32
QUAD_EPS = 1e-13


class UnsupportedRegimeError(DomainError):
    """Action-angle variables need c > 0 and omega^2 > 0."""


@dataclass(frozen=True)
class QuadraticForm:
    """Coefficients of ``H = (a q^2 + 2 b q p + c p^2) / 2``."""

    a: float
    b: float
    c: float

    @property
    def omega_sq(self) -> float:
        return self.a * self.c - self.b * self.b

    @property
    def omega(self) -> float:
        w2 = self.omega_sq
        if not w2 > 0:
            raise UnsupportedRegimeError(f"omega^2 = {w2!r} is not positive")
        return math.sqrt(w2)

    def energy(self, q: float, p: float) -> float:
        return 0.5 * (self.a * q * q + 2.0 * self.b * q * p + self.c * p * p)

    def to_minkowski(self) -> MinkowskiPoint:
        return to_minkowski(self)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


def to_minkowski(form: QuadraticForm) -> MinkowskiPoint:
    return MinkowskiPoint(0.5 * (form.a + form.c), 0.5 * (form.a - form.c), form.b)


def from_minkowski(pt: MinkowskiPoint) -> QuadraticForm:
    return QuadraticForm(pt.t_coord + pt.x_coord, pt.y_coord, pt.t_coord - pt.x_coord)


def abc_to_txy(v):
    v = np.asarray(v, dtype=float)
    a, b, c = v[..., 0], v[..., 1], v[..., 2]
    return np.stack([0.5 * (a + c), 0.5 * (a - c), b], axis=-1)


def txy_to_abc(v):
    v = np.asarray(v, dtype=float)
    t, x, y = v[..., 0], v[..., 1], v[..., 2]
    return np.stack([t + x, y, t - x], axis=-1)


def quadratic_form_at(fp, params) -> QuadraticForm:
    """Local oscillator form at a fixed point, with q = theta - theta_bar and p = p - p_bar.

    At (0, +pi/2) this gives b = -beta; the sign flips at -pi/2.
    """
    from .fixed_points import hessian

    h = hessian(fp.p_bar, fp.theta_bar, params)
    return QuadraticForm(a=float(h[1, 1]), b=float(h[0, 1]), c=float(h[0, 0]))


def action_angle(state, form: QuadraticForm) -> tuple[float, float]:
    """(I, Theta) with I = H/omega and Theta = atan2(omega q, c p + b q).

    Under the frozen flow Theta grows at rate exactly omega.
    """
    q, p = float(state[0]), float(state[1])
    if not form.c > 0:
        raise UnsupportedRegimeError(f"c = {form.c!r} must be positive")
    w = form.omega
    if q == 0.0 and p == 0.0:
        raise UndefinedAngleError("the angle is undefined at the origin")
    return form.energy(q, p) / w, math.atan2(w * q, form.c * p + form.b * q)


def angle_two_form(form: QuadraticForm) -> np.ndarray:
    """Coefficients of W in the (db^dc, dc^da, da^db) basis."""
    w2 = form.omega_sq
    if not w2 > 0:
        raise ConeSingularityError("the angle 2-form is singular for omega^2 <= 0")
    return form.as_array() / (4.0 * w2 ** 1.5)


# (a, b, c) = M (T, X, Y) with M = [[1, 1, 0], [0, 0, 1], [1, -1, 0]]. A Hodge vector
# pulls back with the cofactor matrix, w' = det(M) M^-1 w; det(M) = 2.
_HODGE_PULLBACK = np.array([[1.0, 0.0, 1.0], [1.0, 0.0, -1.0], [0.0, 2.0, 0.0]])


def angle_two_form_minkowski(pt: MinkowskiPoint) -> np.ndarray:
    """W pulled back to (T, X, Y), as coefficients of (dX^dY, dY^dT, dT^dX)."""
    return _HODGE_PULLBACK @ angle_two_form(from_minkowski(pt))


# ------------------------------------------------------------ loops

def _fd(func, s, h=1e-5):
    return (func(s + h) - func(s - h)) / (2.0 * h)


class ParameterLoop:
    """Closed curve s in [0, 1) -> (T, X, Y), periodic with period 1.

    Build with :meth:`cap`, :meth:`keyframes`, :meth:`fourier` or
    :meth:`from_json`. ``point(s)`` and ``tangent(s)`` return (T, X, Y)
    arrays; ``form(s)`` returns the :class:`QuadraticForm`.
    """

    def __init__(self, point, tangent=None, breakpoints=(), omega_min: float = OMEGA_MIN,
                 orientation: int = 1, kind: str = "custom", meta=None):
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self._point = point
        self._tangent = tangent or (lambda s: _fd(point, s))
        self.breakpoints = tuple(sorted(float(b) % 1.0 for b in breakpoints))
        self.omega_min = float(omega_min)
        self.orientation = orientation
        self.kind = kind
        self.meta = dict(meta or {})

    def _s(self, s):
        return s if self.orientation == 1 else 1.0 - s

    def point(self, s) -> np.ndarray:
        return np.asarray(self._point(np.mod(self._s(s), 1.0)), dtype=float)

    def tangent(self, s) -> np.ndarray:
        return self.orientation * np.asarray(self._tangent(np.mod(self._s(s), 1.0)), dtype=float)

    def form(self, s) -> QuadraticForm:
        return from_minkowski(MinkowskiPoint.from_array(self.point(s)))

    def omega(self, s) -> float:
        t, x, y = self.point(s)
        return math.sqrt(max(t * t - x * x - y * y, 0.0))

    def sample(self, n: int = 512) -> np.ndarray:
        return np.array([self.point(s) for s in np.arange(n) / n])

    def intervals(self):
        """Sub-intervals of [0, 1] between breakpoints (in traversal order)."""
        cuts = sorted({0.0, 1.0, *(self._s(b) % 1.0 for b in self.breakpoints)})
        return list(zip(cuts[:-1], cuts[1:]))

    def validate(self, n: int = 2048) -> "ParameterLoop":
        pts = self.sample(n)
        if not np.all(np.isfinite(pts)):
            raise ConeSingularityError("loop has non-finite points")
        w2 = pts[:, 0] ** 2 - pts[:, 1] ** 2 - pts[:, 2] ** 2
        c = pts[:, 0] - pts[:, 1]
        if np.any(pts[:, 0] <= 0) or np.any(w2 < self.omega_min ** 2) or np.any(c <= 0):
            k = int(np.argmin(w2))
            raise ConeSingularityError(
                f"loop leaves the region omega >= {self.omega_min:g}, c > 0 "
                f"(min omega^2 = {w2[k]:.3e} at s = {k / n:.4f})")
        return self

    # constructors -------------------------------------------------------

    @classmethod
    def cap(cls, psi0: float, scale: float = 1.0, orientation: int = 1, **kw) -> "ParameterLoop":
        """Circle of constant hyperbolic radius psi0 around the T axis, omega = scale."""
        if not (psi0 >= 0 and scale > 0):
            raise DomainError("cap loop needs psi0 >= 0 and scale > 0")
        ch, sh = math.cosh(psi0), math.sinh(psi0)
        two_pi = 2.0 * math.pi

        def point(s):
            return scale * np.array([ch, sh * math.cos(two_pi * s), sh * math.sin(two_pi * s)])

        def tangent(s):
            return scale * two_pi * sh * np.array([0.0, -math.sin(two_pi * s), math.cos(two_pi * s)])

        return cls(point, tangent, orientation=orientation, kind="cap",
                   meta={"psi0": psi0, "scale": scale}, **kw)

    @classmethod
    def keyframes(cls, points, orientation: int = 1, **kw) -> "ParameterLoop":
        """Periodic cubic spline through (a, b, c) keyframes at s = k/n."""
        abc = np.asarray(points, dtype=float)
        if abc.ndim != 2 or abc.shape[1] != 3 or len(abc) < 3:
            raise DomainError("keyframes need at least three [a, b, c] rows")
        txy = abc_to_txy(abc)
        knots = np.linspace(0.0, 1.0, len(abc) + 1)
        spline = CubicSpline(knots, np.vstack([txy, txy[:1]]), bc_type="periodic")
        deriv = spline.derivative()
        return cls(spline, deriv, breakpoints=knots[:-1], orientation=orientation,
                   kind="keyframes", meta={"points": abc.tolist()}, **kw)

    @classmethod
    def fourier(cls, coeffs, orientation: int = 1, **kw) -> "ParameterLoop":
        """Truncated Fourier series in (a, b, c).

        ``coeffs`` has keys ``mean`` ([a, b, c]), ``cos`` and ``sin`` (lists of
        [a, b, c] rows for harmonics 1, 2, ...).
        """
        mean = np.asarray(coeffs["mean"], dtype=float)
        cos_c = np.asarray(coeffs.get("cos", []), dtype=float).reshape(-1, 3)
        sin_c = np.asarray(coeffs.get("sin", []), dtype=float).reshape(-1, 3)
        n = max(len(cos_c), len(sin_c))
        cos_c = np.vstack([cos_c, np.zeros((n - len(cos_c), 3))])
        sin_c = np.vstack([sin_c, np.zeros((n - len(sin_c), 3))])
        k = np.arange(1, n + 1)
        two_pi = 2.0 * math.pi

        def point(s):
            ang = two_pi * k * s
            return abc_to_txy(mean + np.cos(ang) @ cos_c + np.sin(ang) @ sin_c)

        def tangent(s):
            ang = two_pi * k * s
            return abc_to_txy(two_pi * ((k * np.cos(ang)) @ sin_c - (k * np.sin(ang)) @ cos_c))

        return cls(point, tangent, orientation=orientation, kind="fourier",
                   meta={"coeffs": {"mean": mean.tolist(), "cos": cos_c.tolist(), "sin": sin_c.tolist()}},
                   **kw)

    @classmethod
    def from_json(cls, spec: dict) -> "ParameterLoop":
        kind = spec.get("kind")
        orientation = int(spec.get("orientation", 1))
        omega_min = float(spec.get("omega_min", OMEGA_MIN))
        if kind == "cap":
            loop = cls.cap(float(spec["psi0"]), float(spec.get("scale", 1.0)), orientation)
        elif kind == "keyframes":
            loop = cls.keyframes(spec["points"], orientation)
        elif kind == "fourier":
            loop = cls.fourier(spec["coeffs"], orientation)
        else:
            raise DomainError(f"unknown loop kind {kind!r}")
        loop.omega_min = omega_min
        return loop

    # derived loops ------------------------------------------------------

    def _derived(self, point, tangent, kind):
        # the new loop already includes our orientation
        return ParameterLoop(point, tangent, breakpoints=[self._s(b) % 1.0 for b in self.breakpoints],
                             omega_min=self.omega_min, kind=kind, meta=self.meta)

    def reversed(self) -> "ParameterLoop":
        return ParameterLoop(self._point, self._tangent, self.breakpoints, self.omega_min,
                             -self.orientation, self.kind, self.meta)

    def boosted(self, rapidity: float, axis: float = 0.0) -> "ParameterLoop":
        m = boost_matrix(rapidity, axis)
        return self._derived(lambda s: m @ self.point(s), lambda s: m @ self.tangent(s), self.kind + "+boost")

    def rescaled(self, lam, dlam=None) -> "ParameterLoop":
        """Pointwise scaling by a smooth positive periodic function lam(s)."""
        dlam = dlam or (lambda s: _fd(lam, s))
        return self._derived(lambda s: lam(s) * self.point(s),
                             lambda s: dlam(s) * self.point(s) + lam(s) * self.tangent(s),
                             self.kind + "+scale")


# ------------------------------------------------------------ traversal profile

def _profile(name):
    if name == "smooth":
        # zero traversal speed at the loop start: the drive switches on and off smoothly
        return (lambda u: u - math.sin(2.0 * math.pi * u) / (2.0 * math.pi),
                lambda u: 1.0 - math.cos(2.0 * math.pi * u))
    if name == "linear":
        return (lambda u: u, lambda u: 1.0)
    raise ValueError(f"unknown traversal profile {name!r}")


def _adaptive_simpson(f, a, b, rel_tol=1e-10, max_depth=50):
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, a, b)
    # coarse seed so that a tolerance relative to the total is meaningful
    scale = abs(whole) if whole != 0 else 1.0
    tol = rel_tol * scale
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(flo, flm, fmid, lo, mid)
        right = simpson(fmid, frm, fhi, mid, hi)
        diff = left + right - est
        if depth >= max_depth or (abs(diff) <= 15.0 * eps and depth >= 4):
            total += left + right + diff / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return total


def dynamical_phase(loop: ParameterLoop, loop_time: float, profile: str = "smooth",
                    rel_tol: float = 1e-10) -> float:
    """Integral of omega along the traversal over [0, loop_time]."""
    loop.validate()
    if not loop_time > 0:
        raise DomainError("loop_time must be positive")
    sigma, _ = _profile(profile)
    return loop_time * _adaptive_simpson(lambda u: loop.omega(sigma(u)), 0.0, 1.0, rel_tol)


# ------------------------------------------------------------ adiabatic evolution

@dataclass
class HannayResult:
    theta_total: float
    dynamical_phase: float
    hannay_ode: float
    hannay_form: float
    hannay_area: float
    action_drift: float
    loop_time: float
    steps: int = 0
    discrepancies: dict = field(default_factory=dict)
    trajectory: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        self.discrepancies = {
            "ode_vs_area": abs(self.hannay_ode - self.hannay_area),
            "ode_vs_form": abs(self.hannay_ode - self.hannay_form),
            "form_vs_area": abs(self.hannay_form - self.hannay_area),
        }


def _max_omega(loop, n=512):
    pts = loop.sample(n)
    return float(np.sqrt(np.max(pts[:, 0] ** 2 - pts[:, 1] ** 2 - pts[:, 2] ** 2)))


def adiabatic_run(loop: ParameterLoop, loop_time: float, state0=(1.0, 0.0),
                  tolerances: Tolerances | None = None, profile: str = "smooth",
                  geometric: bool = True, keep_trajectory: bool = False) -> HannayResult:
    """Drive the oscillator once around ``loop`` in time ``loop_time``.

    The unwrapped angle is sampled at least 32 times per local period.
    ``hannay_ode = Theta(T) - Theta(0) - int omega dt``. With ``geometric``
    the two geometric values are filled in for comparison (otherwise NaN).
    ``keep_trajectory`` stores the samples (t, q, p, theta, action).
    """
    loop.validate()
    if not loop_time > 0:
        raise DomainError("loop_time must be positive")
    q0, p0 = float(state0[0]), float(state0[1])
    if q0 == 0.0 and p0 == 0.0:
        raise UndefinedAngleError("state0 must be off the origin")
    sigma, _ = _profile(profile)
    tol = tolerances or Tolerances(rel_tol=1e-12, abs_tol=1e-14)

    def abc(t):
        t_, x_, y_ = loop.point(sigma(t / loop_time))
        return t_ + x_, y_, t_ - x_

    def rhs(t, y):
        a, b, c = abc(t)
        return np.array([b * y[0] + c * y[1], -(a * y[0] + b * y[1])])

    n = int(math.ceil(SAMPLES_PER_PERIOD * _max_omega(loop) * loop_time / (2.0 * math.pi))) + 1
    ts = np.linspace(0.0, loop_time, max(n, 64))
    ts, ys, stats = dopri5(rhs, (0.0, loop_time), np.array([q0, p0]), t_eval=ts, tol=tol)

    coeffs = np.array([abc(t) for t in ts])
    a, b, c = coeffs.T
    w = np.sqrt(a * c - b * b)
    q, p = ys[:, 0], ys[:, 1]
    theta = np.unwrap(np.arctan2(w * q, c * p + b * q))
    action = 0.5 * (a * q * q + 2 * b * q * p + c * p * p) / w
    theta_total = float(theta[-1] - theta[0])
    dyn = dynamical_phase(loop, loop_time, profile)
    return HannayResult(
        theta_total=theta_total,
        dynamical_phase=dyn,
        hannay_ode=theta_total - dyn,
        hannay_form=hannay_from_form(loop) if geometric else math.nan,
        hannay_area=hannay_from_area(loop) if geometric else math.nan,
        action_drift=float(abs(action[-1] - action[0]) / action[0]),
        loop_time=float(loop_time),
        steps=stats.steps,
        trajectory={"t": ts, "q": q, "p": p, "theta": theta, "action": action} if keep_trajectory else None,
    )


# ------------------------------------------------------------ geometric values

def _quad(f, a, b, **kw):
    val, _ = spi.quad(f, a, b, epsabs=QUAD_EPS, epsrel=1e-12, limit=400, **kw)
    return val


def _is_point_loop(loop, n=64):
    return all(np.max(np.abs(loop.tangent(s))) == 0.0 for s in np.arange(n) / n)


def winding_number(loop: ParameterLoop, n: int = 4096) -> int:
    """Signed number of turns of the azimuth phi(s) about the pole."""
    pts = np.array([loop.point(s) for s in np.linspace(0.0, 1.0, n + 1)])
    phi = np.unwrap(np.arctan2(pts[:, 2], pts[:, 1]))
    turn = phi[-1] - phi[0]
    return int(round(turn / (2.0 * math.pi)))


def hannay_from_area(loop: ParameterLoop) -> float:
    """Half the signed hyperbolic area enclosed by the projected loop.

    Evaluated as 1/2 [ oint cosh(psi) dphi - 2 pi w ], which equals
    1/2 oint (cosh(psi) - 1) dphi; the second form has no cancellation.
    """
    loop.validate()
    if _is_point_loop(loop):
        return 0.0

    def integrand(s):
        t, x, y = loop.point(s)
        dt, dx, dy = loop.tangent(s)
        rho2 = x * x + y * y
        if rho2 == 0.0:
            raise UndefinedAngleError("loop passes through the pole psi = 0 where phi is undefined")
        w = math.sqrt(t * t - rho2)
        # cosh(psi) - 1 = (T - w)/w = rho^2 / (w (T + w))
        return (x * dy - y * dx) / (w * (t + w))

    pts = loop.sample(4096)
    if np.any(pts[:, 1] ** 2 + pts[:, 2] ** 2 < 1e-24 * pts[:, 0] ** 2):
        raise UndefinedAngleError("loop passes through the pole psi = 0 where phi is undefined")
    return 0.5 * sum(_quad(integrand, lo, hi) for lo, hi in loop.intervals())


def fan_base_point(loop: ParameterLoop, n: int = 512) -> np.ndarray:
    """Loop centroid pushed along its ray to the loop's mean omega."""
    pts = loop.sample(n)
    centroid = pts.mean(axis=0)
    w2 = centroid[0] ** 2 - centroid[1] ** 2 - centroid[2] ** 2
    if not (centroid[0] > 0 and w2 > 0):
        raise SurfaceConstructionError("loop centroid is outside the future cone")
    mean_w = float(np.mean(np.sqrt(pts[:, 0] ** 2 - pts[:, 1] ** 2 - pts[:, 2] ** 2)))
    return centroid / math.sqrt(w2) * mean_w


def hannay_from_form(loop: ParameterLoop, base=None, n_check: int = 64) -> float:
    """Integral of the angle 2-form over the fan F(s, u) = B + u (L(s) - B).

    Because W is proportional to F / omega^3 and F . ((L - B) x L') = B . (L x L'),
    the integrand reduces to ``u B.(L x L') / (2 omega(F)^3)`` in (T, X, Y).
    """
    loop.validate()
    base = fan_base_point(loop) if base is None else np.asarray(base, dtype=float)
    minkowski = np.array([1.0, -1.0, -1.0])

    # the future cone is convex, so a fan from an interior base stays inside;
    # check anyway in case a custom base point is supplied
    for s in np.arange(n_check) / n_check:
        seg = base + np.linspace(0, 1, 17)[:, None] * (loop.point(s) - base)
        if np.any(seg[:, 0] <= 0) or np.any(seg ** 2 @ minkowski <= 0):
            raise SurfaceConstructionError("fan surface crosses the cone omega^2 = 0")

    def outer(s):
        ls = loop.point(s)
        flux = float(np.dot(base, np.cross(ls, loop.tangent(s))))
        if flux == 0.0:
            return 0.0
        d = ls - base
        # omega(F)^2 = A + 2 B u + C u^2
        qa = base @ (minkowski * base)
        qb = base @ (minkowski * d)
        qc = d @ (minkowski * d)
        inner = _quad(lambda u: u / (qa + 2.0 * qb * u + qc * u * u) ** 1.5, 0.0, 1.0)
        return 0.5 * flux * inner

    return sum(_quad(outer, lo, hi) for lo, hi in loop.intervals())


# ------------------------------------------------------------ convergence

@dataclass
class ConvergenceStudy:
    loop_times: np.ndarray
    hannay_ode: np.ndarray
    reference: float
    errors: np.ndarray
    action_drift: np.ndarray
    slope: float

    @property
    def error_monotone(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))

    @property
    def drift_monotone(self) -> bool:
        return bool(np.all(np.diff(self.action_drift) < 0))

    def rows(self):
        for i in range(self.loop_times.size):
            yield (self.loop_times[i], self.hannay_ode[i], self.errors[i], self.action_drift[i])


def _workers():
    try:
        return max(1, int(os.environ.get("HC_THREADS", "1")))
    except ValueError:
        return 1


def convergence_study(loop: ParameterLoop, loop_times, state0=(1.0, 0.0),
                      profile: str = "smooth", tolerances: Tolerances | None = None) -> ConvergenceStudy:
    """Run the adiabatic evolution for each loop time and fit the error order.

    ``slope`` is minus the least-squares slope of log(error) against log(T),
    so first-order convergence gives a slope near 1.
    """
    times = np.asarray(loop_times, dtype=float)
    if times.size < 2 or np.any(np.diff(times) <= 0):
        raise DomainError("loop_times must be strictly increasing with at least two entries")
    reference = hannay_from_area(loop)

    def run(t):
        return adiabatic_run(loop, t, state0, tolerances, profile, geometric=False)

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(run, times))  # map keeps input order
    ode = np.array([r.hannay_ode for r in results])
    errors = np.abs(ode - reference)
    drift = np.array([r.action_drift for r in results])
    slope = -float(np.polyfit(np.log(times), np.log(errors), 1)[0])
    return ConvergenceStudy(times, ode, reference, errors, drift, slope)

"""Fixed points of the two-mode flow, their Bogoliubov frequencies and the critical surface."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularSystemError
from .model import ModelParams, PhaseState, eom_raw, josephson_fields

RESIDUAL_TOL = 1e-10
DEGENERATE_DET = 1e-12
ROOT_GRID = 2000

PHASE_LOCKED = "phase_locked"
REAL_PHASE = "real_phase"
CENTER = "center"
SADDLE = "saddle"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class FixedPoint:
    """A stationary point (p_bar, theta_bar) of the (p, theta) flow.

    ``omega_or_lyapunov`` holds the oscillation frequency for a center, the
    exponential growth rate for a saddle and 0 for degenerate points.
    """

    p_bar: float
    theta_bar: float
    kind: str
    stability: str = DEGENERATE
    omega_or_lyapunov: float = 0.0
    residual: float = 0.0

    @property
    def spin(self) -> np.ndarray:
        root = math.sqrt(max(0.0, 1.0 - self.p_bar ** 2))
        return np.array([root * math.cos(self.theta_bar), root * math.sin(self.theta_bar), self.p_bar])

    @property
    def is_pole(self) -> bool:
        return abs(self.p_bar) >= 1.0


@dataclass(frozen=True)
class BogoliubovResult:
    stability: str
    rate: float
    det: float


def hessian(p: float, theta: float, params: ModelParams) -> np.ndarray:
    """Analytic Hessian of the (p, theta) Hamiltonian, ordered (p, theta)."""
    if not abs(p) < 1.0:
        raise DomainError(f"Hessian needs |p| < 1, got {p!r}")
    q = params
    s = math.sqrt(1.0 - p * p)
    ds = -p / s
    d2s = -1.0 / s ** 3
    c, n = math.cos(theta), math.sin(theta)
    tunnel = q.delta + q.beta * p
    h_pp = q.gamma + 2.0 * q.beta * ds * c + tunnel * d2s * c - q.alpha * c * c
    h_tt = -tunnel * s * c - q.alpha * s * s * math.cos(2.0 * theta)
    h_pt = -q.beta * s * n - tunnel * ds * n + q.alpha * p * math.sin(2.0 * theta)
    return np.array([[h_pp, h_pt], [h_pt, h_tt]])


def linearization_matrix(p: float, theta: float, params: ModelParams) -> np.ndarray:
    """Jacobian of (p_dot, theta_dot) with respect to (p, theta)."""
    h = hessian(p, theta, params)
    return np.array([[-h[0, 1], -h[1, 1]], [h[0, 0], h[0, 1]]])


def _pole_field(p_bar: float, params: ModelParams) -> float:
    # A pole is stationary for the spin flow iff the x-field Delta' vanishes there.
    return params.delta + params.beta * math.copysign(1.0, p_bar)


def fixed_point_residual(p_bar: float, theta_bar: float, params: ModelParams) -> float:
    if abs(p_bar) >= 1.0:
        return abs(_pole_field(p_bar, params))
    return float(np.hypot(*eom_raw(p_bar, theta_bar, params)))


def bogoliubov_frequency(params: ModelParams, fp: FixedPoint) -> BogoliubovResult:
    """Classify a fixed point from the determinant of the local Hessian.

    A positive determinant gives a center with frequency sqrt(det); a negative
    one gives a saddle with growth rate sqrt(-det); |det| < 1e-12 marks mode
    softening. Pole points |p_bar| = 1 are reported degenerate without
    classification.
    """
    residual = fixed_point_residual(fp.p_bar, fp.theta_bar, params)
    if residual >= RESIDUAL_TOL:
        raise DomainError(f"not a fixed point: residual {residual:.3e} >= {RESIDUAL_TOL:g}")
    if fp.is_pole:
        return BogoliubovResult(DEGENERATE, 0.0, 0.0)
    h = hessian(fp.p_bar, fp.theta_bar, params)
    det = float(h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0])
    if abs(det) < DEGENERATE_DET:
        return BogoliubovResult(DEGENERATE, 0.0, det)
    if det > 0:
        return BogoliubovResult(CENTER, math.sqrt(det), det)
    return BogoliubovResult(SADDLE, math.sqrt(-det), det)


def _classified(p_bar, theta_bar, kind, params) -> FixedPoint:
    residual = fixed_point_residual(p_bar, theta_bar, params)
    fp = FixedPoint(p_bar, theta_bar, kind, residual=residual)
    b = bogoliubov_frequency(params, fp)
    return FixedPoint(p_bar, theta_bar, kind, b.stability, b.rate, residual)


def fixed_points_phase_locked(params: ModelParams) -> list[FixedPoint]:
    """Solutions of E_J = E_C = 0 (the branch with sin(theta_bar) != 0 in general).

    Returns the pair theta_bar = +/- arccos(...) when feasible, a single point
    when the two branches coincide, and an empty list when infeasible.
    """
    q = params
    den = q.alpha * q.gamma - q.beta ** 2
    if den == 0.0:
        raise SingularSystemError("alpha*gamma == beta**2: phase-locked solution is singular")
    p_bar = (q.beta * q.delta - q.alpha * q.epsilon) / den + 0.0  # no signed zeros in reports
    rc = (q.beta * q.epsilon - q.gamma * q.delta) / den
    if abs(p_bar) > 1.0:
        return []
    root = math.sqrt(1.0 - p_bar * p_bar)
    if root == 0.0:
        if abs(rc) > 0.0:
            return []
        # pole: theta is meaningless; report once
        return [_classified(math.copysign(1.0, p_bar), 0.0, PHASE_LOCKED, q)]
    cos_t = rc / root
    if abs(cos_t) > 1.0:
        return []
    theta = math.acos(cos_t)
    thetas = [theta] if theta in (0.0, math.pi) else [theta, -theta]
    out = []
    for th in thetas:
        fp = _classified(p_bar, th, PHASE_LOCKED, q)
        jf = josephson_fields(PhaseState(p_bar, th), q)
        if max(abs(jf.e_j), abs(jf.e_c)) >= RESIDUAL_TOL:
            continue
        out.append(fp)
    return out


def _real_phase_reduced(u, sign, q: ModelParams):
    # theta_dot at theta in {0, pi} multiplied by sqrt(1 - p^2) = cos u, with p = sin u.
    # Smooth and bounded on [-pi/2, pi/2]; same interior roots as the original equation.
    su, cu = np.sin(u), np.cos(u)
    return (q.epsilon * cu + (q.gamma - q.alpha) * su * cu
            + sign * (q.beta * np.cos(2.0 * u) - q.delta * su))


def _bisect(f, lo, hi, flo):
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid


def fixed_points_real_phase(params: ModelParams, grid: int = ROOT_GRID) -> list[FixedPoint]:
    """Fixed points with theta_bar in {0, pi}.

    Roots of ``eps + (gamma-alpha) p +/- [beta(1-2p^2) - Delta p]/sqrt(1-p^2)``
    are bracketed by sign changes on a ``grid``-cell mesh in p = sin(u) and
    refined by bisection to machine precision. Poles |p| = 1 that are
    stationary for the spin flow are appended as degenerate points.
    """
    q = params
    out: list[FixedPoint] = []
    u = np.linspace(-0.5 * math.pi, 0.5 * math.pi, grid + 1)
    for sign, theta_bar in ((1.0, 0.0), (-1.0, math.pi)):
        g = _real_phase_reduced(u, sign, q)
        for end in (0, grid):
            if abs(g[end]) < RESIDUAL_TOL:
                g[end] = 0.0  # stationary pole, handled below
        f = lambda x, s=sign: float(_real_phase_reduced(x, s, q))
        roots = []
        # endpoint nodes are poles: they never count as interior roots
        for k in range(1, grid):
            if g[k] == 0.0:
                roots.append(u[k])
        for k in range(grid):
            a, b = g[k], g[k + 1]
            if a == 0.0 or b == 0.0:
                continue
            if (a > 0) != (b > 0):
                roots.append(_bisect(f, u[k], u[k + 1], a))
        for r in sorted(roots):
            out.append(_classified(math.sin(r), theta_bar, REAL_PHASE, q))
    for pole in (-1.0, 1.0):
        if abs(_pole_field(pole, q)) < RESIDUAL_TOL:
            out.append(FixedPoint(pole, 0.0, REAL_PHASE, DEGENERATE, 0.0,
                                  abs(_pole_field(pole, q))))
    return out


def all_fixed_points(params: ModelParams, dedupe_tol: float = 1e-9) -> list[FixedPoint]:
    """Union of both families, with coincident points (in spin space) merged."""
    pts = list(fixed_points_real_phase(params))
    try:
        pts += fixed_points_phase_locked(params)
    except SingularSystemError:
        pass
    unique: list[FixedPoint] = []
    for fp in pts:
        if all(np.linalg.norm(fp.spin - other.spin) > dedupe_tol for other in unique):
            unique.append(fp)
    return unique


AXES = ("alpha", "beta", "gamma")


@dataclass
class CriticalScan:
    """omega^2 = alpha*gamma - beta^2 sampled on a grid, with its zero level set.

    ``omega_sq`` and ``on_surface`` are indexed [alpha, beta, gamma];
    ``zero_set`` holds (alpha, beta, gamma) points where omega^2 vanishes,
    found by linear interpolation along grid edges that change sign.
    """

    axes: dict
    omega_sq: np.ndarray
    on_surface: np.ndarray
    zero_set: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))

    @property
    def cell_diagonal(self) -> float:
        steps = [(v[1] - v[0]) if len(v) > 1 else 0.0 for v in self.axes.values()]
        return float(np.sqrt(np.sum(np.square(steps))))

    def rows(self):
        """Yield (alpha, beta, gamma, omega_sq, on_surface) in C order."""
        a, b, g = (self.axes[name] for name in AXES)
        for i, j, k in np.ndindex(self.omega_sq.shape):
            yield a[i], b[j], g[k], self.omega_sq[i, j, k], bool(self.on_surface[i, j, k])


def _axis_values(spec, n):
    if np.isscalar(spec):
        return np.array([float(spec)])
    lo, hi = spec
    if n < 2:
        raise DomainError("resolution must be at least 2 per scanned axis")
    return np.linspace(float(lo), float(hi), int(n))


def critical_surface_scan(region: dict, resolution, zero_tol: float = 1e-12) -> CriticalScan:
    """Sample omega^2 = alpha*gamma - beta^2 over a box and extract its zero set.

    Parameters
    ----------
    region : dict
        ``{"alpha": (lo, hi) | value, "beta": ..., "gamma": ...}``; scalar
        entries pin an axis.
    resolution : int or dict
        Nodes per scanned axis (>= 2).
    """
    axes = {}
    for name in AXES:
        spec = region[name]
        if not np.isscalar(spec) and not all(math.isfinite(float(x)) for x in spec):
            raise DomainError(f"non-finite bounds for {name}")
        n = resolution[name] if isinstance(resolution, dict) else resolution
        axes[name] = _axis_values(spec, n)
    A, B, G = np.meshgrid(axes["alpha"], axes["beta"], axes["gamma"], indexing="ij")
    w2 = A * G - B * B
    on = np.abs(w2) <= zero_tol
    pts = [np.stack([A[on], B[on], G[on]], axis=1)]
    grids = np.stack([A, B, G], axis=-1)
    for ax in range(3):
        if w2.shape[ax] < 2:
            continue
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        a, b = w2[lo], w2[hi]
        change = (a * b < 0) & (np.abs(a) > zero_tol) & (np.abs(b) > zero_tol)
        if not np.any(change):
            continue
        frac = (a / (a - b))[change][:, None]
        pa, pb = grids[lo][change], grids[hi][change]
        pts.append(pa + frac * (pb - pa))
        # flag whichever endpoint of a crossing edge lies closer to the zero
        closer_lo = np.zeros_like(on)
        closer_hi = np.zeros_like(on)
        closer_lo[lo] = change & (np.abs(a) <= np.abs(b))
        closer_hi[hi] = change & (np.abs(b) < np.abs(a))
        on |= closer_lo | closer_hi
    zero_set = np.concatenate(pts, axis=0) if pts else np.empty((0, 3))
    return CriticalScan(axes=axes, omega_sq=w2, on_surface=on, zero_set=zero_set)

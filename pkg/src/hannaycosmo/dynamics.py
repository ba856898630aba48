"""Time integration of the (p, theta), spin and linear-oscillator flows.

Schedules map time to a parameter object (``ModelParams`` or a quadratic
form); flows turn a parameter object into a vector field. Every trajectory
carries its conservation diagnostics so drifts are measured, not hidden.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, field

import numpy as np
from scipy import ndimage
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import fixed_points as fpm
from .errors import DomainError, IntegrationError, PoleError
from .integrate import StepStats, Tolerances, dopri5
from .model import (
    ModelParams,
    PhaseState,
    SpinState,
    eom_raw,
    hamiltonian_arrays,
    phase_to_spin,
    spin_energy_array,
    spin_rhs,
)

# the (p, theta) flow is not trusted closer than this to |p| = 1
POLE_MARGIN = 1e-10


class Schedule:
    """A time-dependent parameter value ``t -> value``.

    Use the constructors :meth:`constant`, :meth:`keyframes` (periodic cubic
    spline, C2 closure) or :meth:`closed_form`.
    """

    def __init__(self, func, period=None, kind="closed_form"):
        self._func = func
        self.period = period
        self.kind = kind

    def __call__(self, t):
        return self._func(t)

    @classmethod
    def constant(cls, value):
        return cls(lambda t: value, None, "constant")

    @classmethod
    def closed_form(cls, func, period=None):
        return cls(func, period, "closed_form")

    @classmethod
    def keyframes(cls, values, period: float):
        """Periodic cubic spline through equally spaced keyframes over one period.

        ``values`` lists the keyframes at t = 0, period/n, ...; the first is
        not repeated at the end.
        """
        values = list(values)
        if len(values) < 3:
            raise ValueError("need at least three keyframes for a periodic spline")
        kind = type(values[0])
        data = np.array([astuple(v) for v in values], dtype=float)
        data = np.vstack([data, data[:1]])
        times = np.linspace(0.0, period, len(values) + 1)
        spline = CubicSpline(times, data, bc_type="periodic")

        def func(t):
            return kind(*spline(np.mod(t, period)))

        return cls(func, period, "keyframes")


@dataclass
class Trajectory:
    """Sampled solution of one flow with per-sample diagnostics."""

    flow: str
    t: np.ndarray
    states: np.ndarray
    columns: tuple
    diagnostics: dict = field(default_factory=dict)
    stats: StepStats = field(default_factory=StepStats)
    complete: bool = True

    def __post_init__(self):
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        for name, values in self.diagnostics.items():
            if len(values) != len(self.t):
                raise ValueError(f"diagnostic {name!r} has the wrong length")

    def __len__(self):
        return self.t.size

    @property
    def header(self):
        return ("t",) + tuple(self.columns) + tuple(self.diagnostics)

    def rows(self):
        diag = [self.diagnostics[k] for k in self.diagnostics]
        for i in range(self.t.size):
            yield (self.t[i], *self.states[i], *(d[i] for d in diag))


class Flow:
    """Vector field family indexed by a parameter value."""

    name = ""
    columns: tuple = ()

    def to_vector(self, state):
        raise NotImplementedError

    def rhs(self, y, value):
        raise NotImplementedError

    def diagnostics(self, t, states, schedule):
        return {}


class PhaseFlow(Flow):
    name = "phase"
    columns = ("p", "theta")

    def to_vector(self, state):
        if isinstance(state, PhaseState):
            return np.array([state.p, state.theta])
        return np.asarray(state, dtype=float)

    def rhs(self, y, value):
        # the chart degenerates near the poles; treat that band as outside
        if 1.0 - abs(y[0]) < POLE_MARGIN:
            raise DomainError(f"p={y[0]!r} within {POLE_MARGIN:g} of a pole")
        return np.array(eom_raw(y[0], y[1], value))

    def diagnostics(self, t, states, schedule):
        energy = np.array([float(hamiltonian_arrays(s[0], s[1], schedule(tt)))
                           for tt, s in zip(t, states)])
        return {"energy": energy}


class SpinFlow(Flow):
    name = "spin"
    columns = ("sx", "sy", "sz")

    def to_vector(self, state):
        if isinstance(state, SpinState):
            return state.as_array()
        if isinstance(state, PhaseState):
            return phase_to_spin(state).as_array()
        return np.asarray(state, dtype=float)

    def rhs(self, y, value):
        return spin_rhs(y, value)

    def diagnostics(self, t, states, schedule):
        energy = np.array([float(spin_energy_array(s, schedule(tt))) for tt, s in zip(t, states)])
        return {"energy": energy, "norm": np.linalg.norm(states, axis=1)}


class OscillatorFlow(Flow):
    """q_dot = b q + c p, p_dot = -(a q + b p) for H = (a q^2 + 2 b q p + c p^2)/2."""

    name = "oscillator"
    columns = ("q", "p")

    def to_vector(self, state):
        return np.asarray(state, dtype=float)

    def rhs(self, y, value):
        q, p = y
        return np.array([value.b * q + value.c * p, -(value.a * q + value.b * p)])

    def diagnostics(self, t, states, schedule):
        forms = [schedule(tt) for tt in t]
        q, p = states[:, 0], states[:, 1]
        a = np.array([f.a for f in forms])
        b = np.array([f.b for f in forms])
        c = np.array([f.c for f in forms])
        energy = 0.5 * (a * q * q + 2 * b * q * p + c * p * p)
        w2 = a * c - b * b
        out = {"energy": energy}
        if np.all(w2 > 0) and np.all(c > 0):
            w = np.sqrt(w2)
            out["action"] = energy / w
            out["angle"] = np.arctan2(w * q, c * p + b * q)
        return out


FLOWS = {"phase": PhaseFlow(), "spin": SpinFlow(), "oscillator": OscillatorFlow()}


def _resolve(flow):
    return FLOWS[flow] if isinstance(flow, str) else flow


def integrate(flow, state0, schedule, t_span, tolerances: Tolerances | None = None,
              t_eval=None, n_samples: int | None = None) -> Trajectory:
    """Integrate ``flow`` from ``state0`` under a parameter schedule.

    Parameters
    ----------
    flow : {"phase", "spin", "oscillator"} or Flow
    state0 : PhaseState, SpinState or array_like
    schedule : Schedule or a fixed parameter value
    t_span : (t0, t1)
    tolerances : Tolerances, optional
        Defaults to rel_tol 1e-10, abs_tol 1e-12.
    t_eval, n_samples :
        Output times, or a count of equally spaced ones. If neither is given
        the accepted step endpoints are returned.

    Raises
    ------
    PoleError
        The (p, theta) flow reached |p| = 1; ``err.partial`` holds the
        samples produced before.
    IntegrationError
        Step size underflow.
    """
    flow = _resolve(flow)
    if not isinstance(schedule, Schedule):
        schedule = Schedule.constant(schedule)
    y0 = flow.to_vector(state0)
    if t_eval is None and n_samples is not None:
        t_eval = np.linspace(t_span[0], t_span[1], int(n_samples))
    f = lambda t, y: flow.rhs(y, schedule(t))
    try:
        ts, ys, stats = dopri5(f, t_span, y0, t_eval=t_eval, tol=tolerances)
    except PoleError as exc:
        ts, ys = exc.partial
        exc.trajectory = Trajectory(flow.name, ts, ys, flow.columns,
                                    flow.diagnostics(ts, ys, schedule), complete=False)
        raise
    return Trajectory(flow.name, ts, ys, flow.columns, flow.diagnostics(ts, ys, schedule), stats)


@dataclass(frozen=True)
class DriftReport:
    kind: str
    initial: float
    max_abs: float
    rms_abs: float
    max_rel: float


_ALIASES = {"population": "norm"}


def conservation_report(traj: Trajectory, kind: str) -> DriftReport:
    """Max and RMS drift of a conserved diagnostic relative to its initial value.

    ``kind`` is one of the trajectory's diagnostics (``energy``, ``norm``,
    ``action``); ``population`` is accepted for the spin norm
    |psi1|^2 + |psi2|^2.
    """
    key = _ALIASES.get(kind, kind)
    if key not in traj.diagnostics:
        raise DomainError(f"trajectory has no {kind!r} diagnostic")
    values = np.asarray(traj.diagnostics[key], dtype=float)
    if values.size == 0:
        return DriftReport(kind, float("nan"), 0.0, 0.0, 0.0)
    drift = values - values[0]
    max_abs = float(np.max(np.abs(drift)))
    rms = float(np.sqrt(np.mean(drift ** 2)))
    ref = abs(values[0])
    return DriftReport(kind, float(values[0]), max_abs, rms, max_abs / ref if ref > 0 else max_abs)


# ---------------------------------------------------------------- portraits

@dataclass
class Orbit:
    energy: float
    spin: np.ndarray
    closed: bool

    @property
    def cylinder(self) -> np.ndarray:
        """(p, theta) samples of the orbit, theta in (-pi, pi]."""
        return np.column_stack([self.spin[:, 2], np.arctan2(self.spin[:, 1], self.spin[:, 0])])


@dataclass
class Portrait:
    params: ModelParams
    fixed_points: list
    separatrix_levels: list
    separatrices: list
    orbits: list
    region_count: int

    @property
    def saddles(self):
        return [fp for fp in self.fixed_points if fp.stability == fpm.SADDLE]


def _sphere(z, phi):
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def _seed_points(params, level, n_meridians=12, n_z=400):
    seeds = []
    z = np.linspace(-1.0, 1.0, n_z)
    for k in range(n_meridians):
        phi = 2 * math.pi * k / n_meridians
        g = spin_energy_array(_sphere(z, phi), params) - level
        for i in range(n_z - 1):
            if g[i] == 0.0:
                seeds.append(_sphere(z[i], phi))
            elif g[i] * g[i + 1] < 0:
                zr = brentq(lambda x: float(spin_energy_array(_sphere(x, phi), params) - level),
                            z[i], z[i + 1], xtol=1e-14)
                seeds.append(_sphere(zr, phi))
    return seeds


def _trace_closed(params, seed, t_max, dt, tol, r_away=0.05):
    n = int(round(t_max / dt)) + 1
    traj = integrate("spin", seed, params, (0.0, t_max), tol, n_samples=n)
    d = np.linalg.norm(traj.states - seed, axis=1)
    away = np.nonzero(d > r_away)[0]
    if away.size:
        after = d[away[0]:]
        back = np.nonzero(after < r_away)[0]
        if back.size:
            start = away[0] + back[0]
            seg = after[back[0]:]
            rising = np.nonzero(np.diff(seg) > 0)[0]
            end = start + (rising[0] if rising.size else seg.size - 1)
            return traj.states[:end + 1], True
    return traj.states, False


def _near_any(point, orbits, tol):
    for orbit in orbits:
        if np.min(np.linalg.norm(orbit.spin - point, axis=1)) < tol:
            return True
    return False


def separatrix_branches(params, saddle: fpm.FixedPoint, offset=1e-6, t_max=60.0,
                        tol: Tolerances | None = None, dt=0.02):
    """Curves traced from a saddle along its unstable directions.

    Initial conditions are offset by ``offset`` along the unstable eigenvector
    of the (p, theta) linearization; each branch is integrated with the
    pole-safe spin flow until it comes back near a saddle.
    """
    tol = tol or Tolerances(rel_tol=1e-10, abs_tol=1e-12)
    jac = fpm.linearization_matrix(saddle.p_bar, saddle.theta_bar, params)
    vals, vecs = np.linalg.eig(jac)
    v = np.real(vecs[:, int(np.argmax(np.real(vals)))])
    v = v / np.linalg.norm(v)
    branches = []
    saddle_spins = [fp.spin for fp in fpm.all_fixed_points(params) if fp.stability == fpm.SADDLE]
    for sign in (1.0, -1.0):
        p0 = saddle.p_bar + sign * offset * v[0]
        th0 = saddle.theta_bar + sign * offset * v[1]
        start = phase_to_spin(PhaseState(p0, th0)).as_array()
        n = int(round(t_max / dt)) + 1
        traj = integrate("spin", start, params, (0.0, t_max), tol, n_samples=n)
        pts = traj.states
        dist = np.min([np.linalg.norm(pts - s, axis=1) for s in saddle_spins], axis=0)
        left = np.nonzero(dist > 1e-2)[0]
        if left.size:
            back = np.nonzero(dist[left[0]:] < 1e-3)[0]
            if back.size:
                pts = pts[:left[0] + back[0] + 1]
        branches.append(pts)
    return branches


def count_regions(params, levels, n_z=361, n_phi=720) -> int:
    """Connected components of the sphere minus the level sets H = level.

    Cells within one grid-step energy change of a level are treated as the
    boundary; the phi direction is periodic and each polar cap row is joined
    through its pole.
    """
    if not levels:
        return 1
    z = -1.0 + (np.arange(n_z) + 0.5) * 2.0 / n_z
    phi = np.arange(n_phi) * 2 * math.pi / n_phi
    Z, PHI = np.meshgrid(z, phi, indexing="ij")
    h = spin_energy_array(_sphere(Z, PHI), params)
    step = max(np.max(np.abs(np.diff(h, axis=0))), np.max(np.abs(np.diff(h, axis=1))))
    free = np.ones_like(h, dtype=bool)
    for level in levels:
        free &= np.abs(h - level) > step
    labels, count = ndimage.label(free)
    parent = list(range(count + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        if i and j:
            parent[find(i)] = find(j)

    for row in range(n_z):
        union(labels[row, 0], labels[row, -1])
    for row in (0, n_z - 1):
        ids = [x for x in labels[row] if x]
        for x in ids[1:]:
            union(x, ids[0])
    return len({find(i) for i in range(1, count + 1)})


def classify_phase_portrait(params: ModelParams, energy_levels=(), n_meridians=12,
                            t_max=100.0, dt=0.02, tol: Tolerances | None = None) -> Portrait:
    """Fixed points, separatrices and representative orbits on the Bloch sphere.

    Separatrix levels are the energies of the saddles. For each requested
    energy, seeds are found where H crosses the level along ``n_meridians``
    meridians, and one closed orbit is traced per distinct level-set
    component.
    """
    tol = tol or Tolerances(rel_tol=1e-9, abs_tol=1e-11)
    fps = fpm.all_fixed_points(params)
    if not fps:
        return Portrait(params, [], [], [], [], 0)
    saddles = [fp for fp in fps if fp.stability == fpm.SADDLE]
    levels = sorted({round(float(spin_energy_array(fp.spin, params)), 12) for fp in saddles})
    separatrices = []
    for sd in saddles:
        separatrices.extend(separatrix_branches(params, sd, tol=tol, dt=dt))
    orbits: list[Orbit] = []
    for level in energy_levels:
        found: list[Orbit] = []
        for seed in _seed_points(params, level, n_meridians):
            if _near_any(seed, found, 0.02 + 2 * dt * 2.0):
                continue
            pts, closed = _trace_closed(params, seed, t_max, dt, tol)
            found.append(Orbit(float(level), pts, closed))
        orbits.extend(found)
    return Portrait(params, fps, levels, separatrices, orbits, count_regions(params, levels))


# ---------------------------------------------------------------- dual flow check

@dataclass(frozen=True)
class EquivalenceResult:
    max_deviation: float
    t_reached: float
    complete: bool


def equivalence_check(state0: PhaseState, params: ModelParams, t_span,
                      tolerances: Tolerances | None = None, n_samples: int = 2001) -> EquivalenceResult:
    """Integrate the (p, theta) and spin flows from matched initial conditions.

    Returns the maximum over samples of |phase_to_spin(p, theta) - S|. If the
    (p, theta) run hits a pole the comparison covers the samples before it.
    """
    t_eval = np.linspace(t_span[0], t_span[1], n_samples)
    complete = True
    try:
        phase = integrate("phase", state0, params, t_span, tolerances, t_eval=t_eval)
    except PoleError as exc:
        phase = exc.trajectory
        complete = False
    spin = integrate("spin", phase_to_spin(state0), params, t_span, tolerances, t_eval=t_eval)
    m = len(phase)
    p, th = phase.states[:, 0], phase.states[:, 1]
    r = np.sqrt(np.clip(1.0 - p * p, 0.0, None))
    mapped = np.column_stack([r * np.cos(th), r * np.sin(th), p])
    dev = np.linalg.norm(mapped - spin.states[:m], axis=1)
    t_reached = float(phase.t[-1]) if m else float(t_span[0])
    return EquivalenceResult(float(np.max(dev)) if m else 0.0, t_reached, complete)

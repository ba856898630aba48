"""Two-mode condensate model: Hamiltonians, equations of motion and mappings.

Units have hbar = 1. The canonical pair is (p, theta) with p the population
imbalance and theta the relative phase; Hamilton's equations read
``p_dot = -dH/dtheta`` and ``theta_dot = +dH/dp``.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import DomainError

SPIN_NORM_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """The five external parameters of the two-mode Hamiltonian."""

    delta: float = 0.0
    epsilon: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise DomainError(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)

    @property
    def pair_tunneling(self) -> float:
        """Inter-well / pair-tunneling energy I, recovered from alpha = 2I."""
        return 0.5 * self.alpha

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))

    def replace(self, **changes) -> "ModelParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class PhaseState:
    p: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "theta", float(self.theta))
        if not abs(self.p) <= 1.0:
            raise DomainError(f"population imbalance must satisfy |p| <= 1, got {self.p!r}")

    @property
    def wrapped_theta(self) -> float:
        """theta folded into (-pi, pi], for display only."""
        return math.atan2(math.sin(self.theta), math.cos(self.theta))


@dataclass(frozen=True)
class SpinState:
    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        for name in ("sx", "sy", "sz"):
            object.__setattr__(self, name, float(getattr(self, name)))
        norm2 = self.sx ** 2 + self.sy ** 2 + self.sz ** 2
        if abs(norm2 - 1.0) > SPIN_NORM_TOL:
            raise DomainError(f"spin must have unit norm, |S|^2 = {norm2!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @classmethod
    def from_vector(cls, v, normalize: bool = False) -> "SpinState":
        v = np.asarray(v, dtype=float)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(*v)


@dataclass(frozen=True)
class TwoModeOverlaps:
    """Overlap integrals of the localized mode functions.

    ``eps1, eps2`` single-mode energies, ``k`` bare tunneling, ``u1, u2``
    on-site energies, ``u12, u21`` interaction-assisted tunneling and
    ``i_pair`` the inter-well / pair-tunneling energy.
    """

    eps1: float = 0.0
    eps2: float = 0.0
    k: float = 0.0
    u1: float = 0.0
    u2: float = 0.0
    u12: float = 0.0
    u21: float = 0.0
    i_pair: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not math.isfinite(value):
                raise DomainError(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)

    def __add__(self, other: "TwoModeOverlaps") -> "TwoModeOverlaps":
        return TwoModeOverlaps(*(x + y for x, y in zip(astuple(self), astuple(other))))

    def __mul__(self, scalar: float) -> "TwoModeOverlaps":
        return TwoModeOverlaps(*(scalar * x for x in astuple(self)))

    __rmul__ = __mul__


@dataclass(frozen=True)
class JosephsonFields:
    e_j: float
    e_c: float


def _check_p(p: float, strict: bool = False) -> None:
    if strict:
        if not abs(p) < 1.0:
            raise DomainError(f"|p| < 1 required (coordinate singularity at the poles), got p={p!r}")
    elif not abs(p) <= 1.0:
        raise DomainError(f"|p| <= 1 required, got p={p!r}")


def hamiltonian_full(state: PhaseState, params: ModelParams) -> float:
    """Energy of the nonlinear two-mode Hamiltonian in (p, theta) variables."""
    p, th = state.p, state.theta
    _check_p(p)
    q = params
    root = math.sqrt(1.0 - p * p)
    c = math.cos(th)
    return (q.epsilon * p + 0.5 * q.gamma * p * p
            + (q.delta + q.beta * p) * root * c
            + 0.5 * q.alpha * (1.0 - p * p) * c * c)


def hamiltonian_arrays(p, theta, params: ModelParams):
    """Vectorized ``hamiltonian_full`` over arrays of p and theta."""
    p = np.asarray(p, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(p) > 1.0):
        raise DomainError("|p| <= 1 required")
    q = params
    root = np.sqrt(1.0 - p * p)
    c = np.cos(theta)
    return (q.epsilon * p + 0.5 * q.gamma * p * p
            + (q.delta + q.beta * p) * root * c
            + 0.5 * q.alpha * (1.0 - p * p) * c * c)


def eom_full(state: PhaseState, params: ModelParams) -> tuple[float, float]:
    """Right-hand sides (p_dot, theta_dot) of the coupled-mode equations.

    Raises
    ------
    DomainError
        If |p| >= 1, where theta_dot is singular.
    """
    return eom_raw(state.p, state.theta, params)


def eom_raw(p: float, theta: float, params: ModelParams) -> tuple[float, float]:
    _check_p(p, strict=True)
    q = params
    root = math.sqrt(1.0 - p * p)
    s, c = math.sin(theta), math.cos(theta)
    i_pair = q.pair_tunneling
    p_dot = (q.delta + q.beta * p) * root * s + i_pair * (1.0 - p * p) * math.sin(2.0 * theta)
    theta_dot = (q.epsilon + q.gamma * p
                 + (q.beta * (1.0 - 2.0 * p * p) - q.delta * p) / root * c
                 - q.alpha * p * c * c)
    return p_dot, theta_dot


def eom_josephson(state: PhaseState, params: ModelParams) -> tuple[float, float]:
    """Same flow written through the effective Josephson fields E_J and E_C."""
    p, th = state.p, state.theta
    _check_p(p, strict=True)
    jf = josephson_fields(state, params)
    root = math.sqrt(1.0 - p * p)
    return (jf.e_j * root * math.sin(th),
            jf.e_c - jf.e_j * p * math.cos(th) / root)


def params_from_overlaps(o: TwoModeOverlaps) -> ModelParams:
    return ModelParams(
        delta=2.0 * o.k + o.u12 + o.u21,
        epsilon=o.eps1 - o.eps2 + 0.5 * (o.u1 - o.u2),
        alpha=2.0 * o.i_pair,
        beta=o.u12 - o.u21,
        gamma=0.5 * (o.u1 + o.u2) - o.i_pair,
    )


def phase_to_spin(state: PhaseState) -> SpinState:
    p, th = state.p, state.theta
    _check_p(p)
    root = math.sqrt(1.0 - p * p)
    return SpinState(root * math.cos(th), root * math.sin(th), p)


def spin_to_phase(s: SpinState) -> PhaseState:
    """Inverse of :func:`phase_to_spin`; theta is taken in (-pi, pi] (0 at the poles)."""
    p = min(1.0, max(-1.0, s.sz))
    return PhaseState(p, math.atan2(s.sy, s.sx))


def spin_hamiltonian(s: SpinState, params: ModelParams) -> float:
    """Anisotropic single-spin energy with easy axis along y."""
    q = params
    return (q.delta * s.sx + q.epsilon * s.sz + 0.5 * q.alpha * s.sx * s.sx
            + q.beta * s.sx * s.sz + 0.5 * q.gamma * s.sz * s.sz)


def spin_energy_array(v, params: ModelParams):
    """``spin_hamiltonian`` for an array of spin vectors with trailing axis 3."""
    v = np.asarray(v, dtype=float)
    sx, sz = v[..., 0], v[..., 2]
    q = params
    return (q.delta * sx + q.epsilon * sz + 0.5 * q.alpha * sx * sx
            + q.beta * sx * sz + 0.5 * q.gamma * sz * sz)


def effective_fields(v, params: ModelParams) -> tuple[float, float]:
    """(Delta', epsilon'): effective transverse fields along x and z."""
    sx, sz = v[0], v[2]
    q = params
    return (q.delta + q.alpha * sx + q.beta * sz,
            q.epsilon + q.beta * sx + q.gamma * sz)


def spin_rhs(v, params: ModelParams) -> np.ndarray:
    """Classical spin flow for a raw 3-vector (no norm check)."""
    sx, sy, sz = v[0], v[1], v[2]
    d_eff, e_eff = effective_fields(v, params)
    return np.array([-e_eff * sy, e_eff * sx - d_eff * sz, d_eff * sy])


def spin_eom(s: SpinState, params: ModelParams) -> tuple[float, float, float]:
    return tuple(float(x) for x in spin_rhs(s.as_array(), params))


def josephson_fields(state: PhaseState, params: ModelParams) -> JosephsonFields:
    p, th = state.p, state.theta
    _check_p(p)
    q = params
    rc = math.sqrt(1.0 - p * p) * math.cos(th)
    return JosephsonFields(e_j=q.delta + q.beta * p + q.alpha * rc,
                           e_c=q.epsilon + q.gamma * p + q.beta * rc)


def atomic_current(theta: float, kprime: float, i_pair: float, n_atoms: float) -> float:
    """Atomic current N (K' sin theta + (I/2) sin 2 theta) across the barrier."""
    if n_atoms < 0:
        raise DomainError(f"n_atoms must be non-negative, got {n_atoms!r}")
    return n_atoms * (kprime * math.sin(theta) + 0.5 * i_pair * math.sin(2.0 * theta))

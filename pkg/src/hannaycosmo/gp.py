"""Two-mode parameters from a 1D double-well potential.

Localized modes are Gaussians ``exp(-(x - x0)^2 / (2 sigma^2))`` (amplitude
width sigma, so the density has standard deviation sigma/sqrt(2)),
orthogonalized symmetrically (Loewdin). Overlap integrals use composite
Simpson quadrature and a 3-point central-difference kinetic term, hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import DiscretizationError, DomainError
from .model import ModelParams, TwoModeOverlaps, params_from_overlaps

ORTHO_TOL = 1e-10
MIN_MARGIN = 6.0    # grid extent beyond each center, in units of sigma
MAX_STEP = 1.0 / 8  # coarsest admissible dx / sigma
DEFAULT_REFINE = 4096
DEFAULT_MARGIN = 8.0


@dataclass(frozen=True)
class DoubleWell1D:
    """``V(x) = m/2 omega_x^2 (x - dx_offset)^2 + v0 cos^2(pi x / d)``."""

    m: float = 1.0
    omega_x: float = 1.0
    dx_offset: float = 0.0
    v0: float = 0.0
    d: float = 1.0

    def __post_init__(self):
        if not self.d > 0:
            raise DomainError("lattice period d must be positive")
        if not self.v0 >= 0:
            raise DomainError("barrier depth v0 must be non-negative")
        if not self.m > 0:
            raise DomainError("mass m must be positive")


def potential_eval(x, w: DoubleWell1D):
    x = np.asarray(x, dtype=float)
    return 0.5 * w.m * w.omega_x ** 2 * (x - w.dx_offset) ** 2 + w.v0 * np.cos(math.pi * x / w.d) ** 2


@dataclass(frozen=True)
class Grid:
    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if not (self.dx > 0 and self.n >= 3):
            raise DiscretizationError("grid needs dx > 0 and at least three points")
        if self.n % 2 == 0:
            raise DiscretizationError("composite Simpson needs an odd number of points")

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def x_end(self) -> float:
        return self.x0 + self.dx * (self.n - 1)

    def refined(self) -> "Grid":
        """Same interval with the step halved."""
        return Grid(self.x0, 0.5 * self.dx, 2 * self.n - 1)

    @classmethod
    def around(cls, centers, sigma, refine: int = DEFAULT_REFINE, margin: float = DEFAULT_MARGIN) -> "Grid":
        """Grid symmetric about the centers' midpoint with dx = sigma / refine."""
        lo, hi = min(centers) - margin * sigma, max(centers) + margin * sigma
        mid, dx = 0.5 * (lo + hi), sigma / refine
        half = int(math.ceil(0.5 * (hi - lo) / dx))
        return cls(mid - half * dx, dx, 2 * half + 1)


@dataclass
class ModePair:
    grid: Grid
    phi1: np.ndarray
    phi2: np.ndarray
    meta: dict = field(default_factory=dict)

    def overlap_matrix(self) -> np.ndarray:
        return _gram(self.grid, [self.phi1, self.phi2])

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.overlap_matrix() - np.eye(2))))


def _integrate(values, grid: Grid) -> float:
    return float(simpson(values, dx=grid.dx))


def _gram(grid, funcs):
    return np.array([[_integrate(f * g, grid) for g in funcs] for f in funcs])


def gaussian_modes(centers, sigma: float, grid: Grid | None = None) -> ModePair:
    """Two Loewdin-orthogonalized Gaussians centered at ``centers``.

    Raises
    ------
    DiscretizationError
        If the grid extends less than 6 sigma beyond a center or dx > sigma/8.
    """
    x1, x2 = (float(c) for c in centers)
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    grid = grid or Grid.around((x1, x2), sigma)
    if grid.dx > MAX_STEP * sigma:
        raise DiscretizationError(f"dx = {grid.dx:g} exceeds sigma/8 = {MAX_STEP * sigma:g}")
    if min(x1, x2) - grid.x0 < MIN_MARGIN * sigma or grid.x_end - max(x1, x2) < MIN_MARGIN * sigma:
        raise DiscretizationError("grid must extend at least 6 sigma beyond both centers")
    x = grid.x
    raw = [np.exp(-((x - c) ** 2) / (2.0 * sigma ** 2)) for c in (x1, x2)]
    raw = [f / math.sqrt(_integrate(f * f, grid)) for f in raw]
    s = _gram(grid, raw)
    evals, evecs = np.linalg.eigh(s)
    s_inv_half = evecs @ np.diag(evals ** -0.5) @ evecs.T
    phi1 = s_inv_half[0, 0] * raw[0] + s_inv_half[1, 0] * raw[1]
    phi2 = s_inv_half[0, 1] * raw[0] + s_inv_half[1, 1] * raw[1]
    return ModePair(grid, phi1, phi2, {"ansatz": "gaussian+loewdin", "sigma": sigma,
                                       "centers": [x1, x2], "raw_overlap": float(s[0, 1])})


def _hamiltonian_action(phi, grid: Grid, w: DoubleWell1D, x):
    # zero boundary values outside the grid
    padded = np.concatenate([[0.0], phi, [0.0]])
    lap = (padded[2:] - 2.0 * phi + padded[:-2]) / grid.dx ** 2
    return -lap / (2.0 * w.m) + potential_eval(x, w) * phi


def overlap_integrals(modes: ModePair, w: DoubleWell1D, g: float, n_atoms: float) -> TwoModeOverlaps:
    """Single-mode energies, tunneling and interaction overlaps of a mode pair."""
    err = modes.orthonormality_error()
    if err >= ORTHO_TOL:
        raise DomainError(f"mode pair is not orthonormal (max error {err:.3e})")
    if n_atoms < 0:
        raise DomainError("n_atoms must be non-negative")
    grid = modes.grid
    x = grid.x
    f1, f2 = modes.phi1, modes.phi2
    h1 = _hamiltonian_action(f1, grid, w, x)
    h2 = _hamiltonian_action(f2, grid, w, x)
    gn = g * n_atoms
    return TwoModeOverlaps(
        eps1=_integrate(f1 * h1, grid),
        eps2=_integrate(f2 * h2, grid),
        k=_integrate(f1 * h2, grid),
        u1=gn * _integrate(f1 ** 4, grid),
        u2=gn * _integrate(f2 ** 4, grid),
        u12=gn * _integrate(f1 ** 3 * f2, grid),
        u21=gn * _integrate(f2 ** 3 * f1, grid),
        i_pair=gn * _integrate(f1 ** 2 * f2 ** 2, grid),
    )


@dataclass(frozen=True)
class ModelBuild:
    """Model parameters together with the overlaps and inputs they came from."""

    params: ModelParams
    overlaps: TwoModeOverlaps
    provenance: dict


def build_model(overlaps: TwoModeOverlaps, n_atoms: float, g: float, provenance: dict | None = None) -> ModelBuild:
    """Map overlaps to (Delta, epsilon, alpha, beta, gamma) and record provenance."""
    prov = {"n_atoms": n_atoms, "g": g}
    prov.update(provenance or {})
    return ModelBuild(params_from_overlaps(overlaps), overlaps, prov)


def model_from_geometry(spec: dict) -> ModelBuild:
    """End-to-end pipeline from a geometry mapping.

    Keys: m, omega_x, dx_offset, v0, d, sigma, centers, g, n_atoms and an
    optional grid {x0, dx, n}.
    """
    try:
        well = DoubleWell1D(float(spec.get("m", 1.0)), float(spec.get("omega_x", 1.0)),
                            float(spec.get("dx_offset", 0.0)), float(spec.get("v0", 0.0)),
                            float(spec.get("d", 1.0)))
        sigma = float(spec["sigma"])
        centers = [float(c) for c in spec["centers"]]
        g, n_atoms = float(spec.get("g", 0.0)), float(spec.get("n_atoms", 1.0))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"invalid geometry specification: {exc}") from exc
    grid_spec = spec.get("grid")
    grid = Grid(float(grid_spec["x0"]), float(grid_spec["dx"]), int(grid_spec["n"])) if grid_spec else None
    modes = gaussian_modes(centers, sigma, grid)
    overlaps = overlap_integrals(modes, well, g, n_atoms)
    provenance = {"well": asdict(well), "sigma": sigma, "centers": centers,
                  "grid": asdict(modes.grid), "ansatz": modes.meta["ansatz"]}
    return build_model(overlaps, n_atoms, g, provenance)

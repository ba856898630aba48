"""Dormand-Prince 5(4) integrator with PI step control and dense output.

The right-hand side may raise :class:`DomainError` for states outside its
domain; such stages are treated as rejected steps. If the step size then
collapses, :class:`PoleError` is raised carrying the samples produced so far.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrationError, PoleError

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = np.zeros((7, 7))
A[1, :1] = [1 / 5]
A[2, :2] = [3 / 40, 9 / 40]
A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
B5 = A[6].copy()
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

# Continuous extension of order 4 (Hairer, Norsett & Wanner), as
# y(t + s h) = y + h * sum_i k_i * (P[i] @ [s, s^2, s^3, s^4]).
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
FAC_MIN = 0.2   # largest shrink per step is 1/5
FAC_MAX = 10.0
MAX_DOMAIN_STREAK = 60
PI_BETA = 0.04
EXPO = 0.2 - 0.75 * PI_BETA


@dataclass(frozen=True)
class Tolerances:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 5_000_000
    h_init: float | None = None

    def __post_init__(self):
        if not self.rel_tol >= 1e-13:
            raise ValueError("rel_tol must be >= 1e-13")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")


@dataclass
class StepStats:
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0
    domain_rejections: int = 0


def _initial_step(f, t0, y0, f0, direction, tol: Tolerances, order=5):
    sc = tol.abs_tol + tol.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    try:
        f1 = f(t0 + direction * h0, y0 + direction * h0 * f0)
    except DomainError:
        return h0
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / order)
    return min(100 * h0, h1)


def dopri5(f, t_span, y0, t_eval=None, tol: Tolerances | None = None):
    """Integrate ``y' = f(t, y)`` over ``t_span``.

    Parameters
    ----------
    f : callable
        ``f(t, y) -> ndarray``.
    t_span : (t0, t1)
    y0 : array_like
    t_eval : array_like, optional
        Monotone output times inside ``t_span``. Defaults to the accepted
        step endpoints.
    tol : Tolerances

    Returns
    -------
    ts, ys, stats
    """
    tol = tol or Tolerances()
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float)
    n = y.size
    direction = 1.0 if t1 >= t0 else -1.0
    stats = StepStats()

    dense = t_eval is not None
    if dense:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.size and np.any(direction * np.diff(t_eval) <= 0):
            raise ValueError("t_eval must be strictly monotone in the integration direction")
        slack = 1e-12 * max(abs(t0), abs(t1), 1.0)
        if t_eval.size and (direction * (t_eval[0] - t0) < -slack or direction * (t_eval[-1] - t1) > slack):
            raise ValueError("t_eval must lie inside t_span")
    out_t, out_y = [], []
    idx = 0
    if dense:
        while idx < t_eval.size and t_eval[idx] == t0:
            out_t.append(t0)
            out_y.append(y.copy())
            idx += 1
    else:
        out_t.append(t0)
        out_y.append(y.copy())

    def fail(message, cls=IntegrationError):
        err = cls(message, t=t, state=y.copy())
        err.partial = (np.array(out_t), np.array(out_y).reshape(-1, n))
        return err

    t = t0
    if t1 == t0:
        return np.array(out_t), np.array(out_y).reshape(-1, n), stats
    try:
        fy = np.asarray(f(t, y), dtype=float)
    except DomainError as exc:
        raise fail(f"initial state outside the flow domain: {exc}", PoleError) from exc
    stats.evaluations += 1
    h = tol.h_init or _initial_step(f, t, y, fy, direction, tol)
    stats.evaluations += 1
    h_abs = abs(h)
    fac_old = 1e-4
    last_domain = False
    # domain rejections since the step size last recovered past a rejected one;
    # a run of these means the solution is creeping into the boundary
    domain_streak, rejected_h = 0, 0.0
    K = np.empty((7, n))

    while direction * (t1 - t) > 0:
        if stats.steps + stats.rejected >= tol.max_steps:
            raise fail("maximum number of steps exceeded")
        h_min = 16 * np.finfo(float).eps * max(abs(t), 1.0)
        if h_abs < h_min:
            cls = PoleError if last_domain else IntegrationError
            raise fail(f"step size underflow at t={t!r}", cls)
        last_step = h_abs >= abs(t1 - t)
        h = direction * (abs(t1 - t) if last_step else h_abs)
        t_new = t1 if last_step else t + h

        K[0] = fy
        try:
            for i in range(1, 7):
                K[i] = f(t + C[i] * h, y + h * (A[i, :i] @ K[:i]))
            stats.evaluations += 6
        except DomainError:
            stats.rejected += 1
            stats.domain_rejections += 1
            last_domain = True
            domain_streak += 1
            rejected_h = max(rejected_h, h_abs) if domain_streak > 1 else h_abs
            if domain_streak > MAX_DOMAIN_STREAK:
                raise fail(f"solution stalls at the domain boundary near t={t!r}", PoleError)
            h_abs *= 0.25
            continue
        y_new = y + h * (B5[:6] @ K[:6])  # FSAL: stage 7 was evaluated at y_new
        err_vec = h * (E @ K)
        scale = tol.abs_tol + tol.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))

        fac11 = err ** EXPO if err > 0 else 0.0
        if err <= 1.0:
            fac = fac11 / fac_old ** PI_BETA
            fac = min(1.0 / FAC_MIN, max(1.0 / FAC_MAX, fac / SAFETY))
            fac_old = max(err, 1e-4)
            if dense:
                while idx < t_eval.size and direction * (t_eval[idx] - t_new) <= 0:
                    s = (t_eval[idx] - t) / h
                    powers = np.array([s, s * s, s ** 3, s ** 4])
                    out_t.append(t_eval[idx])
                    out_y.append(y + h * ((P @ powers) @ K))
                    idx += 1
            t, y, fy = t_new, y_new, K[6].copy()
            if not dense:
                out_t.append(t)
                out_y.append(y.copy())
            stats.steps += 1
            last_domain = False
            if domain_streak and abs(h) >= rejected_h:
                domain_streak = 0
            h_abs = abs(h) / fac
        else:
            stats.rejected += 1
            h_abs = abs(h) / min(1.0 / FAC_MIN, fac11 / SAFETY)
    if dense and idx < t_eval.size:
        # requested times coinciding with t1 up to rounding
        while idx < t_eval.size:
            out_t.append(t_eval[idx])
            out_y.append(y.copy())
            idx += 1
    return np.array(out_t), np.array(out_y).reshape(-1, n), stats

"""Norms, energy integrals and boundary-data functionals.

Space integrals use tensor trapezoid weights over an index box of the grid;
time integrals integrate the piecewise-linear interpolant of the samples.
Suprema over a time window are maxima over the stored samples in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryData
from .constitutive import ForchheimerLaw, eval_H
from .errors import DomainError
from .exponents import ExponentTable
from .grid import Grid, ScalarField, Trajectory, gradient

_EPS_T = 1e-9


def space_integral(grid: Grid, f, box=None):
    """Trapezoid integral over the trailing ``dim`` axes, restricted to ``box``."""
    f = np.asarray(f, dtype=float)
    if box is None:
        box = (slice(0, grid.cells + 1),) * grid.dim
    lead = f.ndim - grid.dim
    sub = f[(Ellipsis,) + tuple(box)] if lead else f[tuple(box)]
    w = grid.weights(box)
    return np.tensordot(sub, w, axes=grid.dim)


def space_max(grid: Grid, f, box=None):
    """Max of ``|f|`` over the trailing ``dim`` axes, restricted to ``box``."""
    f = np.abs(np.asarray(f, dtype=float))
    if box is None:
        box = (slice(None),) * grid.dim
    sub = f[(Ellipsis,) + tuple(box)]
    return sub.reshape(sub.shape[: f.ndim - grid.dim] + (-1,)).max(axis=-1)


def _check_window(times, t0, t1):
    if t1 < t0 - _EPS_T:
        raise DomainError(f"empty time window [{t0}, {t1}]")
    if t0 < times[0] - _EPS_T or t1 > times[-1] + _EPS_T:
        raise DomainError(f"window [{t0}, {t1}] outside the sampled span [{times[0]}, {times[-1]}]")


def time_weights(times, t0: float, t1: float) -> np.ndarray:
    """Weights ``w`` with ``sum w_k f_k`` equal to the integral over ``[t0, t1]``
    of the piecewise-linear interpolant of the samples ``f_k``."""
    times = np.asarray(times, dtype=float)
    _check_window(times, t0, t1)
    t0, t1 = max(t0, times[0]), min(t1, times[-1])
    w = np.zeros(times.size)
    if t1 <= t0:
        return w
    lo, hi = times[:-1], times[1:]
    left = np.clip(t0, lo, hi)
    right = np.clip(t1, lo, hi)
    span = hi - lo
    a = ((hi - left) ** 2 - (hi - right) ** 2) / (2 * span)
    b = ((right - lo) ** 2 - (left - lo) ** 2) / (2 * span)
    w[:-1] += a
    w[1:] += b
    return w


def window_mask(times, t0: float, t1: float) -> np.ndarray:
    """Samples with ``t0 <= t <= t1`` (up to rounding)."""
    times = np.asarray(times, dtype=float)
    _check_window(times, t0, t1)
    return (times >= t0 - _EPS_T) & (times <= t1 + _EPS_T)


def time_integral(times, series, t0: float, t1: float) -> float:
    return float(time_weights(times, t0, t1) @ np.asarray(series, dtype=float))


def time_sup(times, series, t0: float, t1: float) -> float:
    m = window_mask(times, t0, t1)
    if not np.any(m):
        raise DomainError(f"no samples in [{t0}, {t1}]")
    return float(np.max(np.asarray(series)[m]))


def lebesgue_norm(obj, s: float, box=None, window=None) -> float:
    """``L^s`` norm of a field or of a trajectory over ``box`` (x a time window).

    ``obj`` is a ScalarField, a Trajectory, or a pair ``(grid, values)``.
    ``s = inf`` gives the maximum of ``|f|``.
    """
    if s < 1:
        raise DomainError("exponent s must be >= 1")
    if isinstance(obj, ScalarField):
        grid, values, times = obj.grid, obj.values, None
    elif isinstance(obj, Trajectory):
        grid, values, times = obj.grid, obj.values, obj.times
    else:
        grid, values = obj
        times = None
    if times is None:
        if math.isinf(s):
            return float(space_max(grid, values, box))
        return float(space_integral(grid, np.abs(values) ** s, box)) ** (1.0 / s)
    t0, t1 = window if window is not None else (times[0], times[-1])
    if math.isinf(s):
        return time_sup(times, space_max(grid, values, box), t0, t1)
    per = space_integral(grid, np.abs(values) ** s, box)
    return time_integral(times, per, t0, t1) ** (1.0 / s)


def grad_magnitude(grid: Grid, values: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(gradient(grid, values) ** 2, axis=0))


def h_integral(field: ScalarField, law: ForchheimerLaw, box=None) -> float:
    """``int H(|grad p|)`` with ``H`` from adaptive quadrature."""
    xi = grad_magnitude(field.grid, field.values)
    return float(space_integral(field.grid, eval_H(law, xi), box))


def data_functional_A(boundary: BoundaryData, alpha: float, t: float, law: ForchheimerLaw, grid: Grid) -> float:
    """Size of the boundary data in the norms driving the ``L^alpha`` bounds."""
    a = law.a
    gpsi = boundary.on_grid(grid, t, "grad")
    gnorm = np.sqrt(np.sum(gpsi**2, axis=0))
    pt = boundary.on_grid(grid, t, "psi_t")
    q = alpha * (2 - a) / 2
    first = float(space_integral(grid, gnorm**q)) ** (2 * (alpha - a) / (alpha * (2 - a)))
    second = float(space_integral(grid, np.abs(pt) ** alpha)) ** ((alpha - a) / (alpha * (1 - a)))
    return first + second


def data_functionals_G(boundary: BoundaryData, t: float, law: ForchheimerLaw, table: ExponentTable, grid: Grid):
    """``(G1, G2, G3, G4)`` at time ``t``."""
    a, r0 = law.a, table.r0
    gpsi = boundary.on_grid(grid, t, "grad")
    gpsi_t = boundary.on_grid(grid, t, "grad_t")
    pt = boundary.on_grid(grid, t, "psi_t")
    ptt = boundary.on_grid(grid, t, "psi_tt")
    ir0 = float(space_integral(grid, np.abs(pt) ** r0))
    G1 = (
        float(space_integral(grid, np.sum(gpsi**2, axis=0)))
        + ir0 ** ((2 - a) / (r0 * (1 - a)))
        + ir0 ** (1 / r0)
    )
    G2 = float(space_integral(grid, np.sum(gpsi_t**2, axis=0))) + float(space_integral(grid, pt**2))
    G3 = G1 + G2
    G4 = G3 + float(space_integral(grid, ptt**2))
    return G1, G2, G3, G4


def envelope(samples) -> np.ndarray:
    """Running maximum: the least nondecreasing majorant on the sample grid."""
    return np.maximum.accumulate(np.asarray(samples, dtype=float))


def beta_tail(times, A, window: float | None = None) -> float:
    """Largest decrease rate of ``A`` over the tail ``[T - window, T]``.

    ``A'`` comes from centered differences (second-order one-sided at the
    ends); the result is the maximum of its negative part.
    """
    times = np.asarray(times, dtype=float)
    A = np.asarray(A, dtype=float)
    if times.size < 3:
        raise DomainError("beta needs at least 3 samples")
    T = times[-1]
    w = 0.25 * (T - times[0]) if window is None else window
    dA = np.gradient(A, times, edge_order=2)
    tail = times >= T - w - _EPS_T
    return float(np.max(np.maximum(-dA[tail], 0.0)))


@dataclass
class DataFunctionalTrace:
    times: np.ndarray
    A: np.ndarray
    EnvA: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    G3: np.ndarray
    G4: np.ndarray
    alpha: float
    tail_window: float

    @property
    def tail_mask(self) -> np.ndarray:
        return self.times >= self.times[-1] - self.tail_window - _EPS_T

    def tail_max(self, name: str) -> float:
        return float(np.max(getattr(self, name)[self.tail_mask]))

    @property
    def beta(self) -> float:
        return beta_tail(self.times, self.A, self.tail_window)

    def rows(self):
        for k in range(self.times.size):
            yield (self.times[k], self.A[k], self.EnvA[k], self.G1[k], self.G2[k], self.G3[k], self.G4[k])


def data_functional_trace(
    boundary: BoundaryData,
    grid: Grid,
    times,
    law: ForchheimerLaw,
    table: ExponentTable,
    alpha: float | None = None,
    tail_window: float | None = None,
) -> DataFunctionalTrace:
    times = np.asarray(times, dtype=float)
    alpha = table.alpha if alpha is None else alpha
    A = np.array([data_functional_A(boundary, alpha, t, law, grid) for t in times])
    G = np.array([data_functionals_G(boundary, t, law, table, grid) for t in times]).reshape(-1, 4)
    w = 0.25 * (times[-1] - times[0]) if tail_window is None else tail_window
    return DataFunctionalTrace(times, A, envelope(A), G[:, 0], G[:, 1], G[:, 2], G[:, 3], alpha, w)


def double_bracket(
    grid: Grid,
    times,
    u: np.ndarray,
    alpha: float,
    a: float,
    box=None,
    ball_radius: float | None = None,
    n: int | None = None,
    kappa0: float | None = None,
) -> float:
    """``sup_t ||u(t)||_alpha + (int int |u|^(alpha-2) |grad u|^(2-a))^(1/(alpha-a))``.

    With ``ball_radius = R`` the two terms carry the weights
    ``R^(n/p - n/alpha)`` and ``R^(n/p - (n-(2-a))/(alpha-a))``, ``p = kappa0``.
    """
    times = np.asarray(times, dtype=float)
    u = np.asarray(u, dtype=float)
    sup_term = float(np.max(space_integral(grid, np.abs(u) ** alpha, box))) ** (1 / alpha)
    per = np.empty(times.size)
    for k in range(times.size):
        g = grad_magnitude(grid, u[k])
        per[k] = space_integral(grid, np.abs(u[k]) ** (alpha - 2) * g ** (2 - a), box)
    grad_term = time_integral(times, per, times[0], times[-1]) ** (1 / (alpha - a))
    if ball_radius is None:
        return sup_term + grad_term
    n = grid.dim if n is None else n
    R = ball_radius
    w1 = R ** (n / kappa0 - n / alpha)
    w2 = R ** (n / kappa0 - (n - (2 - a)) / (alpha - a))
    return w1 * sup_term + w2 * grad_term


def weighted_bracket(grid: Grid, times, u: np.ndarray, W: np.ndarray, box=None) -> float:
    """``sup_t ||u(t)||_2 + (int int W |grad u|^2)^(1/2)``."""
    times = np.asarray(times, dtype=float)
    sup_term = math.sqrt(float(np.max(space_integral(grid, u**2, box))))
    per = np.array([space_integral(grid, W[k] * grad_magnitude(grid, u[k]) ** 2, box) for k in range(times.size)])
    return sup_term + math.sqrt(time_integral(times, per, times[0], times[-1]))


def lambda_from_series(times, per_snapshot, T0: float, T: float, theta: float, s0: float) -> float:
    """``(int_{T0+theta T/2}^{T0+T} I(t) dt)^((2-s0)/s0)`` for precomputed ``I``."""
    val = time_integral(times, per_snapshot, T0 + 0.5 * theta * T, T0 + T)
    return val ** ((2 - s0) / s0) if val > 0 else 0.0


def lambda_window(traj: Trajectory, T0: float, T: float, theta: float, box, table: ExponentTable) -> float:
    """``lambda = (int int_V (1 + |grad p|)^(a s0/(2-s0)))^((2-s0)/s0)`` over
    ``V x (T0 + theta T/2, T0 + T)``."""
    s0, a = table.s0, table.a
    lo, hi = T0 + 0.5 * theta * T, T0 + T
    m = time_weights(traj.times, lo, hi) != 0
    per = np.zeros(traj.times.size)
    q = a * s0 / (2 - s0)
    for k in np.flatnonzero(m):
        g = grad_magnitude(traj.grid, traj.values[k])
        per[k] = space_integral(traj.grid, (1 + g) ** q, box)
    return lambda_from_series(traj.times, per, T0, T, theta, s0)

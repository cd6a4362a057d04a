"""Implicit Euler with lagged-coefficient Picard iteration.

The flux across the face between nodes ``P`` and ``Q`` along axis ``d`` is
``K(|grad p|_face) (p_Q - p_P) / h``.  The face gradient combines the normal
difference with the average of the two nodes' central tangential
differences, so a linear field sees one constant ``K`` and stays steady.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solveh_banded

from .constitutive import diffusivity
from .errors import NumericError, SolverError
from .grid import Grid, Trajectory
from .scenario import Scenario


def _along(d, dim, sd, other=slice(1, -1)):
    sl = [other] * dim
    sl[d] = sd
    return tuple(sl)


class _System:
    """Interior operator of one grid in LAPACK symmetric banded storage."""

    def __init__(self, grid: Grid):
        self.grid = grid
        dim, N = grid.dim, grid.cells
        self.inner = (slice(1, -1),) * dim
        self.shape = (N - 1,) * dim
        # C-order strides of the interior unknowns; the largest is the bandwidth
        self.strides = [(N - 1) ** (dim - 1 - d) for d in range(dim)]
        self.band = self.strides[0]

    def face_coefficients(self, law, p):
        """``K`` on every face touching an interior node, one array per axis."""
        g, h, dim = self.grid, self.grid.h, self.grid.dim
        out = []
        for d in range(dim):
            normal = np.diff(p, axis=d)[_along(d, dim, slice(None))] / h
            mag2 = normal**2
            for e in range(dim):
                if e == d:
                    continue
                up = [slice(None)] * dim
                dn = [slice(None)] * dim
                up[e], dn[e] = slice(2, None), slice(0, -2)
                central = (p[tuple(up)] - p[tuple(dn)]) / (2 * h)
                others = [slice(1, -1) if k not in (d, e) else slice(None) for k in range(dim)]
                central = central[tuple(others)]
                tang = 0.5 * (np.take(central, range(0, g.cells), axis=d) + np.take(central, range(1, g.cells + 1), axis=d))
                mag2 = mag2 + tang**2
            out.append(diffusivity(law, np.sqrt(mag2)))
        return out

    def assemble(self, coef, scale, psi):
        """Banded ``I - dt L_K`` on interior nodes and the boundary right-hand side."""
        dim, u = self.grid.dim, self.band
        n = int(np.prod(self.shape))
        ab = np.zeros((u + 1, n))
        diag = np.ones(self.shape)
        rhs = np.zeros(self.shape)
        for d, K in enumerate(coef):
            c = scale * K
            m = c.shape[d]
            diag += np.take(c, range(0, m - 1), axis=d) + np.take(c, range(1, m), axis=d)
            off = np.zeros(self.shape)
            off[_along(d, dim, slice(1, None), slice(None))] = -np.take(c, range(1, m - 1), axis=d)
            ab[u - self.strides[d]] = off.ravel()
            first = [slice(None)] * dim
            last = [slice(None)] * dim
            first[d], last[d] = 0, -1
            rhs[tuple(first)] += np.take(c, 0, axis=d) * psi[_along(d, dim, 0)]
            rhs[tuple(last)] += np.take(c, m - 1, axis=d) * psi[_along(d, dim, -1)]
        ab[u] = diag.ravel()
        return ab, rhs


def solve_ibvp(scenario: Scenario, extrapolate: bool = True) -> Trajectory:
    """Integrate the scenario to its horizon and return the stored snapshots.

    Snapshots are kept every ``scenario.stride`` steps and at the final time.
    Diagnostics hold, per step, the Picard iteration count and update norms,
    the discrete energy ``sum (p - Psi)^2 h^dim`` and the steps whose last
    three Picard updates were not decreasing.
    """
    sc = scenario
    grid, law, bd = sc.grid, sc.law, sc.boundary
    system = _System(grid)
    inner = system.inner
    X = grid.mesh()
    hd = grid.h**grid.dim
    scale = sc.dt / grid.h**2
    mask = grid.boundary_mask()

    p = sc.initial_field()
    prev = None
    times = [0.0]
    snaps = [p.copy()]
    iters, updates, flagged = [], [], []
    energy = [float(np.sum((p - bd.on_grid(grid, 0.0)) ** 2) * hd)]

    for n in range(1, sc.steps + 1):
        t1 = n * sc.dt
        psi1 = bd.on_grid(grid, t1)
        rhs0 = p[inner].copy()
        if sc.manufactured is not None:
            f = np.broadcast_to(sc.manufactured.source(law, X, t1), grid.shape)
            rhs0 += sc.dt * f[inner]
        guess = 2 * p - prev if (extrapolate and prev is not None) else p.copy()
        guess[mask] = psi1[mask]
        hist = []
        for _ in range(sc.picard_max_iter):
            ab, rb = system.assemble(system.face_coefficients(law, guess), scale, psi1)
            sol = solveh_banded(ab, (rhs0 + rb).ravel(), check_finite=False)
            new = psi1.copy()
            new[inner] = sol.reshape(rb.shape)
            if not np.all(np.isfinite(new)):
                raise NumericError(f"non-finite values at step {n} (t={t1})")
            upd = float(np.max(np.abs(new - guess)))
            size = float(np.max(np.abs(new)))
            rel = upd / size if size > 0 else upd
            hist.append(rel)
            guess = new
            if rel <= sc.picard_tol:
                break
        else:
            raise SolverError(f"Picard iteration did not converge at step {n} (t={t1})", residual=hist[-1], step=n)
        prev, p = p, guess
        iters.append(len(hist))
        updates.append(hist)
        tail = hist[-3:]
        if any(b > a for a, b in zip(tail, tail[1:])):
            flagged.append(n)
        energy.append(float(np.sum((p - psi1) ** 2) * hd))
        if n % sc.stride == 0 or n == sc.steps:
            times.append(t1)
            snaps.append(p.copy())

    diagnostics = {
        "picard_iterations": iters,
        "picard_updates": updates,
        "flagged_steps": flagged,
        "energy": energy,
        "steps": sc.steps,
        "dt": sc.dt,
    }
    return Trajectory(grid, np.array(times), np.array(snaps), diagnostics)


def l2_error(grid: Grid, values: np.ndarray, exact: np.ndarray) -> float:
    return math.sqrt(float(np.sum(grid.weights() * (values - exact) ** 2)))


def convergence_study(base: Scenario, levels=(16, 32, 64), dt_factor: float = 1.0):
    """Final-time L2 errors against the manufactured solution on refined grids.

    The time step on each level is ``dt_factor * h**2`` (rounded down so the
    horizon is a whole number of steps).  Returns rows
    ``(cells, h, dt, error, order)`` with ``order`` None on the first level.
    """
    if base.manufactured is None:
        raise ValueError("convergence study needs a manufactured solution")
    rows = []
    for cells in levels:
        grid = Grid(base.grid.dim, cells, base.grid.length)
        dt = base.T / math.ceil(base.T / (dt_factor * grid.h**2) - 1e-9)
        sc = base.with_(grid=grid, dt=dt)
        sc = sc.with_(stride=sc.steps)
        traj = solve_ibvp(sc)
        exact = np.broadcast_to(sc.manufactured.value(grid.mesh(), sc.T), grid.shape)
        err = l2_error(grid, traj.values[-1], exact)
        order = None
        if rows:
            prev_err = rows[-1][3]
            order = math.log2(prev_err / err) if err > 0 and prev_err > 0 else None
        rows.append((cells, grid.h, dt, err, order))
    return rows

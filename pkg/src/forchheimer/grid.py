"""Uniform cell-vertex grids, nodal fields and finite-difference operators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[0, length]^dim`` with ``cells`` cells per side.

    Node arrays use ``ij`` indexing: axis ``k`` runs along ``x_{k+1}``.
    """

    dim: int
    cells: int
    length: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError(f"dim must be 1 or 2, got {self.dim}")
        if int(self.cells) != self.cells or self.cells < 8:
            raise ValidationError(f"cells per side must be an integer >= 8, got {self.cells}")
        if not self.length > 0:
            raise ValidationError("grid length must be positive")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def h(self) -> float:
        return self.length / self.cells

    @property
    def shape(self) -> tuple:
        return (self.cells + 1,) * self.dim

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.cells + 1)

    def mesh(self) -> list:
        """Coordinate arrays ``[X1, X2, ...]`` broadcastable to ``shape``."""
        ax = self.axis
        if self.dim == 1:
            return [ax]
        return [ax[:, None], ax[None, :]]

    def box(self, margin: float = 0.0) -> tuple:
        """Index box of the nodes at distance ``>= margin`` from the boundary."""
        if margin < 0:
            raise DomainError("margin must be nonnegative")
        ax = self.axis
        eps = 1e-9 * self.h
        idx = np.flatnonzero((ax >= margin - eps) & (ax <= self.length - margin + eps))
        if margin > 0:
            idx = idx[(idx > 0) & (idx < self.cells)]
        if idx.size == 0:
            raise DomainError(f"no nodes at distance >= {margin} from the boundary")
        return (slice(int(idx[0]), int(idx[-1]) + 1),) * self.dim

    def weights(self, box: tuple | None = None) -> np.ndarray:
        """Tensor trapezoid weights over an index box (full grid by default)."""
        if box is None:
            box = (slice(0, self.cells + 1),) * self.dim
        w = None
        for sl in box:
            m = sl.stop - sl.start
            w1 = np.full(m, self.h)
            if m > 1:
                w1[0] = w1[-1] = 0.5 * self.h
            w = w1 if w is None else np.multiply.outer(w, w1)
        return w

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for k in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[k] = 0
            mask[tuple(sl)] = True
            sl[k] = -1
            mask[tuple(sl)] = True
        return mask

    def as_dict(self) -> dict:
        d = {"dim": self.dim, "cells": self.cells}
        if self.length != 1.0:
            d["length"] = self.length
        return d


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValidationError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")


@dataclass
class Trajectory:
    """Stored snapshots of one solve.

    ``values[k]`` is the nodal field at ``times[k]``.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size

    def snapshot(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.values[k], float(self.times[k]))

    @property
    def snapshots(self) -> list:
        return [self.snapshot(k) for k in range(len(self))]

    def index_of(self, t: float) -> int:
        """Index of the stored snapshot at time ``t``."""
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"no snapshot at t={t}")
        return k


def _values(field_or_values):
    if isinstance(field_or_values, ScalarField):
        return field_or_values.grid, field_or_values.values
    raise TypeError("expected a ScalarField")


def gradient(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Nodal gradient of one field or a stack of fields (leading axes kept).

    Central differences at interior nodes, second-order one-sided differences
    on boundary nodes.  The component index is the first output axis.
    """
    lead = values.ndim - grid.dim
    axes = tuple(range(lead, values.ndim))
    parts = np.gradient(values, grid.h, axis=axes, edge_order=2)
    if grid.dim == 1:
        parts = [parts]
    return np.stack(parts)


def gradient_field(field: ScalarField) -> np.ndarray:
    """Gradient of a nodal field, shape ``(dim, *grid.shape)``."""
    grid, v = _values(field)
    return gradient(grid, v)


def hessian(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Second-difference Hessian of one field, shape ``(dim, dim, *shape)``.

    Defined on interior nodes; boundary entries are NaN.
    """
    h2 = grid.h**2
    out = np.full((grid.dim, grid.dim) + grid.shape, np.nan)
    inner = (slice(1, -1),) * grid.dim
    for i in range(grid.dim):
        sl_p = list(inner)
        sl_m = list(inner)
        sl_p[i] = slice(2, None)
        sl_m[i] = slice(0, -2)
        out[(i, i) + inner] = (values[tuple(sl_p)] - 2 * values[inner] + values[tuple(sl_m)]) / h2
        for j in range(i + 1, grid.dim):
            def shifted(di, dj):
                sl = list(inner)
                sl[i] = slice(1 + di, grid.cells + di)
                sl[j] = slice(1 + dj, grid.cells + dj)
                return values[tuple(sl)]

            cross = (shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)) / (4 * h2)
            out[(i, j) + inner] = cross
            out[(j, i) + inner] = cross
    return out


def hessian_field(field: ScalarField) -> np.ndarray:
    grid, v = _values(field)
    return hessian(grid, v)

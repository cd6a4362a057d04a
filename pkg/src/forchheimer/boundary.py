"""Analytic boundary data presets, initial fields and manufactured solutions.

Every preset is a smooth function ``Psi(x, t)`` on the closed domain.  The
solver uses its trace on the boundary; the data functionals use the exact
derivatives on the whole domain.  Coordinates are passed as a list of arrays
``X = [X1, X2, ...]`` that broadcast against each other.
"""

from __future__ import annotations

import math

import numpy as np

from .constitutive import ForchheimerLaw, eval_K
from .errors import ValidationError
from .grid import Grid


class BoundaryData:
    """Base class; subclasses implement the five exact evaluations."""

    preset = "base"
    defaults: dict = {}

    def __init__(self, amplitude: float = 1.0, params: dict | None = None):
        self.amplitude = float(amplitude)
        params = dict(params or {})
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ValidationError(f"unknown parameters for preset {self.preset!r}: {sorted(unknown)}")
        self.params = {**self.defaults, **{k: float(v) for k, v in params.items()}}

    def psi(self, X, t):
        raise NotImplementedError

    def psi_t(self, X, t):
        raise NotImplementedError

    def grad(self, X, t):
        raise NotImplementedError

    def grad_t(self, X, t):
        raise NotImplementedError

    def psi_tt(self, X, t):
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0 or self.preset == "zero"

    def on_grid(self, grid: Grid, t: float, what: str = "psi") -> np.ndarray:
        """Evaluate one of the five quantities on all nodes."""
        X = grid.mesh()
        val = getattr(self, what)(X, t)
        if what in ("grad", "grad_t"):
            return np.stack([np.broadcast_to(v, grid.shape) for v in val])
        return np.broadcast_to(val, grid.shape).astype(float)

    def as_dict(self) -> dict:
        return {"preset": self.preset, "amplitude": self.amplitude, "params": dict(self.params)}

    def __repr__(self):
        return f"{type(self).__name__}(amplitude={self.amplitude!r}, params={self.params!r})"


def _zeros(X):
    return np.zeros(np.broadcast_shapes(*[np.shape(x) for x in X]))


class ZeroData(BoundaryData):
    preset = "zero"

    def psi(self, X, t):
        return _zeros(X)

    psi_t = psi_tt = psi

    def grad(self, X, t):
        return [_zeros(X) for _ in X]

    grad_t = grad


class ConstantData(BoundaryData):
    """``Psi = c``."""

    preset = "constant"

    def psi(self, X, t):
        return self.amplitude + _zeros(X)

    def psi_t(self, X, t):
        return _zeros(X)

    psi_tt = psi_t

    def grad(self, X, t):
        return [_zeros(X) for _ in X]

    grad_t = grad


class LinearData(BoundaryData):
    """``Psi = c x_1``, a steady linear profile."""

    preset = "linear"

    def psi(self, X, t):
        return self.amplitude * X[0] + _zeros(X)

    def psi_t(self, X, t):
        return _zeros(X)

    psi_tt = psi_t

    def grad(self, X, t):
        g = [_zeros(X) for _ in X]
        g[0] = g[0] + self.amplitude
        return g

    def grad_t(self, X, t):
        return [_zeros(X) for _ in X]


class LinearDriftData(BoundaryData):
    """``Psi = c t``."""

    preset = "linear-drift"

    def psi(self, X, t):
        return self.amplitude * t + _zeros(X)

    def psi_t(self, X, t):
        return self.amplitude + _zeros(X)

    def psi_tt(self, X, t):
        return _zeros(X)

    def grad(self, X, t):
        return [_zeros(X) for _ in X]

    grad_t = grad


def _profile(X):
    # phi = x1^2 - x2^2 in 2D, x1^2 in 1D
    if len(X) == 1:
        return X[0] ** 2, [2 * X[0]]
    return X[0] ** 2 - X[1] ** 2, [2 * X[0] + 0 * X[1], -2 * X[1] + 0 * X[0]]


class PeriodicData(BoundaryData):
    """``Psi = c sin(omega t) phi(x)`` with ``phi = x1^2 - x2^2``."""

    preset = "periodic"
    defaults = {"omega": 1.0}

    def psi(self, X, t):
        return self.amplitude * math.sin(self.params["omega"] * t) * _profile(X)[0]

    def psi_t(self, X, t):
        w = self.params["omega"]
        return self.amplitude * w * math.cos(w * t) * _profile(X)[0]

    def psi_tt(self, X, t):
        w = self.params["omega"]
        return -self.amplitude * w * w * math.sin(w * t) * _profile(X)[0]

    def grad(self, X, t):
        f = self.amplitude * math.sin(self.params["omega"] * t)
        return [f * g for g in _profile(X)[1]]

    def grad_t(self, X, t):
        w = self.params["omega"]
        f = self.amplitude * w * math.cos(w * t)
        return [f * g for g in _profile(X)[1]]


class ProductData(BoundaryData):
    """``Psi = c exp(-mu t) prod_i cos(pi x_i / 2)``."""

    preset = "product"
    defaults = {"mu": 1.0}

    def _space(self, X):
        c = [np.cos(0.5 * np.pi * x) for x in X]
        d = [-0.5 * np.pi * np.sin(0.5 * np.pi * x) for x in X]
        val = np.prod(c, axis=0) if len(X) == 1 else c[0] * c[1]
        if len(X) == 1:
            grads = [d[0]]
        else:
            grads = [d[0] * c[1], c[0] * d[1]]
        return val, grads

    def _time(self, t, order):
        mu = self.params["mu"]
        return self.amplitude * (-mu) ** order * math.exp(-mu * t)

    def psi(self, X, t):
        return self._time(t, 0) * self._space(X)[0]

    def psi_t(self, X, t):
        return self._time(t, 1) * self._space(X)[0]

    def psi_tt(self, X, t):
        return self._time(t, 2) * self._space(X)[0]

    def grad(self, X, t):
        f = self._time(t, 0)
        return [f * g for g in self._space(X)[1]]

    def grad_t(self, X, t):
        f = self._time(t, 1)
        return [f * g for g in self._space(X)[1]]


PRESETS = {
    cls.preset: cls
    for cls in (ZeroData, ConstantData, LinearData, LinearDriftData, PeriodicData, ProductData)
}


def make_boundary(preset: str, amplitude: float = 1.0, params: dict | None = None) -> BoundaryData:
    try:
        cls = PRESETS[preset]
    except KeyError:
        raise ValidationError(f"unknown boundary preset {preset!r}; choose from {sorted(PRESETS)}") from None
    return cls(amplitude, params)


class Manufactured:
    """``p*(x, t) = c exp(-t) prod_i sin(pi x_i)`` and its forcing term."""

    name = "sinsin-decay"

    def __init__(self, amplitude: float = 1.0):
        self.amplitude = float(amplitude)

    def _parts(self, X):
        s = [np.sin(np.pi * x) for x in X]
        c = [np.pi * np.cos(np.pi * x) for x in X]
        return s, c

    def value(self, X, t):
        s, _ = self._parts(X)
        out = self.amplitude * math.exp(-t)
        for v in s:
            out = out * v
        return out

    def dt(self, X, t):
        return -self.value(X, t)

    def grad(self, X, t):
        s, c = self._parts(X)
        f = self.amplitude * math.exp(-t)
        if len(X) == 1:
            return [f * c[0]]
        return [f * c[0] * s[1], f * s[0] * c[1]]

    def hess(self, X, t):
        s, c = self._parts(X)
        f = self.amplitude * math.exp(-t)
        p2 = np.pi**2
        if len(X) == 1:
            return [[-p2 * f * s[0]]]
        hxy = f * c[0] * c[1]
        return [[-p2 * f * s[0] * s[1], hxy], [hxy, -p2 * f * s[0] * s[1]]]

    def source(self, law: ForchheimerLaw, X, t):
        """``f = p*_t - div(K(|grad p*|) grad p*)`` evaluated exactly."""
        g = np.array(np.broadcast_arrays(*self.grad(X, t)))
        H = self.hess(X, t)
        dim = len(X)
        xi = np.sqrt(np.sum(g**2, axis=0))
        K, dK = eval_K(law, xi)
        lap = sum(H[i][i] for i in range(dim))
        quad = sum(g[i] * H[i][j] * g[j] for i in range(dim) for j in range(dim))
        with np.errstate(invalid="ignore", divide="ignore"):
            extra = np.where(xi > 0, dK * quad / np.where(xi > 0, xi, 1.0), 0.0)
        return self.dt(X, t) - (K * lap + extra)

    def as_dict(self):
        return {"name": self.name, "amplitude": self.amplitude}


def bump(X):
    out = 1.0
    for x in X:
        out = out * np.sin(np.pi * x)
    return out

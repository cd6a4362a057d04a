"""Numerical verification of the interior estimates.

Estimates with explicit constants are checked exactly.  Estimates with a
generic constant ``C`` are turned into witness ratios ``lhs / rhs`` with
``C`` dropped; boundedness of the ratio across refinements and amplitudes is
the observable.

All time-dependent quantities are first reduced to per-snapshot scalar
series by :class:`Analysis`; every estimate is then a cheap combination of
window integrals and window maxima of those series.
"""

from __future__ import annotations

import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundary import bump, make_boundary
from .constitutive import ForchheimerLaw, H_from_s, eval_g, invert_sg, verify_constitutive
from .errors import DomainError, ForchheimerError, ValidationError
from .exponents import ExponentTable, sobolev_conjugate, validate_alpha, varrho
from .functionals import (
    data_functional_trace,
    double_bracket,
    lambda_from_series,
    space_integral,
    space_max,
    time_integral,
    time_sup,
    weighted_bracket,
)
from .grid import Grid, Trajectory, gradient, hessian
from .scenario import Scenario
from .solver import solve_ibvp

FAMILIES = ("gronwall", "pressure", "grad-ls", "grad-linf", "pt", "hessian")

# id -> (family, asserted); beta variants are reported only
ESTIMATES = {
    "gronwall-energy-window": ("gronwall", True),
    "gronwall-energy-pt": ("gronwall", True),
    "gronwall-pt-uniform": ("gronwall", True),
    "gronwall-energy-window-data": ("gronwall", True),
    "gronwall-pt-window-data": ("gronwall", True),
    "prior-energy-cumulative": ("gronwall", True),
    "prior-energy-pt-cumulative": ("gronwall", True),
    "prior-pt-pointwise": ("gronwall", True),
    "gronwall-energy-limsup": ("gronwall", True),
    "gronwall-pt-limsup": ("gronwall", True),
    "gronwall-energy-window-limsup": ("gronwall", True),
    "gronwall-pt-window-limsup": ("gronwall", True),
    "gronwall-energy-beta": ("gronwall", False),
    "gronwall-pt-beta": ("gronwall", False),
    "gronwall-energy-window-beta": ("gronwall", False),
    "gronwall-pt-window-beta": ("gronwall", False),
    "pressure-linf-local": ("pressure", True),
    "pressure-linf-small-time": ("pressure", True),
    "pressure-linf-large-time": ("pressure", True),
    "pressure-linf-limsup": ("pressure", True),
    "pressure-linf-beta": ("pressure", False),
    "grad-ls-spacetime": ("grad-ls", True),
    "grad-ls-sup": ("grad-ls", True),
    "grad-ls-small-time": ("grad-ls", True),
    "grad-ls-large-time": ("grad-ls", True),
    "grad-ls-limsup": ("grad-ls", True),
    "grad-ls-beta": ("grad-ls", False),
    "grad-linf-local": ("grad-linf", True),
    "grad-linf-small-time": ("grad-linf", True),
    "grad-linf-large-time": ("grad-linf", True),
    "grad-linf-limsup": ("grad-linf", True),
    "grad-linf-beta": ("grad-linf", False),
    "pt-linf-local": ("pt", True),
    "pt-linf-small-time": ("pt", True),
    "pt-linf-large-time": ("pt", True),
    "pt-linf-limsup": ("pt", True),
    "pt-linf-beta": ("pt", False),
    "hessian-l2-local": ("hessian", True),
    "hessian-l2-small-time": ("hessian", True),
    "hessian-l2-large-time": ("hessian", True),
    "hessian-l2-limsup": ("hessian", True),
    "hessian-l2-beta": ("hessian", False),
}

LEMMA_IDS = ("parabolic-sobolev", "weighted-embedding", "fast-geometric")

SMALL_TIMES = (0.25, 0.5, 1.0)
THETAS = (0.25, 0.5, 0.75)
S_VALUES = (2.0, 3.0, 4.0)
MAX_PT_SPACING = 0.05
_EPS = 1e-9


def witness_ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    if rhs > 0:
        return lhs / rhs
    return math.inf


@dataclass
class EstimateRecord:
    estimate_id: str
    scenario_id: str
    lhs: float
    rhs: float
    ratio: float
    params: dict = field(default_factory=dict)
    asserted: bool = True

    @classmethod
    def make(cls, estimate_id, scenario_id, lhs, rhs, asserted=True, **params):
        lhs, rhs = float(lhs), float(rhs)
        return cls(estimate_id, scenario_id, lhs, rhs, witness_ratio(lhs, rhs), params, asserted)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.ratio) and self.ratio >= 0

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateRecord":
        return cls(**d)


@dataclass
class ExactCheck:
    name: str
    ok: bool
    value: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExactCheck":
        return cls(**d)


# ---------------------------------------------------------------- series


class Analysis:
    """Per-snapshot scalar series of one trajectory.

    ``p_t`` comes from centered differences of the snapshots (second-order
    one-sided at the ends); ``pbar = p - Psi``.  ``Up`` is U', ``V`` the
    intermediate set and ``U`` the whole domain.
    """

    CHUNK = 64

    def __init__(self, scenario: Scenario, traj: Trajectory, s_values=S_VALUES):
        sc = self.scenario = scenario
        self.traj = traj
        self.grid = grid = traj.grid
        self.law, self.table = sc.law, sc.table
        self.a, self.alpha = sc.law.a, self.table.alpha
        self.times = t = np.asarray(traj.times, dtype=float)
        if t.size < 3:
            raise DomainError("analysis needs at least 3 snapshots")
        self.s_values = tuple(float(s) for s in s_values)
        self.trace = data_functional_trace(sc.boundary, grid, t, sc.law, self.table, tail_window=sc.tail)
        self.spacing = float(np.max(np.diff(t)))
        Up, V = sc.box_inner, sc.box_middle
        a, alpha, s0 = self.a, self.alpha, self.table.s0
        q_lam = a * s0 / (2 - s0)

        p = traj.values
        pt = np.gradient(p, t, axis=0, edge_order=2)
        names = [
            "pinf_Up", "pinf_V", "pbar2", "pbar_alpha", "psi_alpha", "p_alpha",
            "H", "pbart2", "one_KG2", "lam_V", "G2_V", "gradinf_Up", "gradinf_V",
            "ptinf_Up", "pt2", "G2ma", "hess_Up",
        ]
        S = {k: np.empty(t.size) for k in names}
        for s in self.s_values:
            S[f"KGs_Up[{s:g}]"] = np.empty(t.size)
            S[f"Gs_Up[{s:g}]"] = np.empty(t.size)

        bd = sc.boundary
        for lo in range(0, t.size, self.CHUNK):
            ks = range(lo, min(lo + self.CHUNK, t.size))
            sl = slice(ks.start, ks.stop)
            P, Pt = p[sl], pt[sl]
            psi = np.stack([bd.on_grid(grid, t[k]) for k in ks])
            psi_t = np.stack([bd.on_grid(grid, t[k], "psi_t") for k in ks])
            xi = np.sqrt(np.sum(gradient(grid, P) ** 2, axis=0))
            sv = invert_sg(self.law, xi)
            K = 1.0 / eval_g(self.law, sv)
            pbar, pbart = P - psi, Pt - psi_t
            S["pinf_Up"][sl] = space_max(grid, P, Up)
            S["pinf_V"][sl] = space_max(grid, P, V)
            S["pbar2"][sl] = space_integral(grid, pbar**2)
            S["pbar_alpha"][sl] = space_integral(grid, np.abs(pbar) ** alpha)
            S["psi_alpha"][sl] = space_integral(grid, np.abs(psi) ** alpha)
            S["p_alpha"][sl] = space_integral(grid, np.abs(P) ** alpha)
            S["H"][sl] = space_integral(grid, H_from_s(self.law, sv))
            S["pbart2"][sl] = space_integral(grid, pbart**2)
            S["one_KG2"][sl] = space_integral(grid, 1 + K * xi**2)
            S["lam_V"][sl] = space_integral(grid, (1 + xi) ** q_lam, V)
            S["G2_V"][sl] = space_integral(grid, xi**2, V)
            S["gradinf_Up"][sl] = space_max(grid, xi, Up)
            S["gradinf_V"][sl] = space_max(grid, xi, V)
            S["ptinf_Up"][sl] = space_max(grid, Pt, Up)
            S["pt2"][sl] = space_integral(grid, Pt**2)
            S["G2ma"][sl] = space_integral(grid, xi ** (2 - a))
            for s in self.s_values:
                S[f"KGs_Up[{s:g}]"][sl] = space_integral(grid, K * xi**s, Up)
                S[f"Gs_Up[{s:g}]"][sl] = space_integral(grid, xi**s, Up)
            for j, k in enumerate(ks):
                Hs = hessian(grid, P[j])
                S["hess_Up"][k] = math.sqrt(float(space_integral(grid, np.sum(Hs**2, axis=(0, 1)), Up)))
        self.S = S
        self._cum = {}

    # window primitives
    @property
    def T(self) -> float:
        return float(self.times[-1])

    def at(self, name: str, t: float) -> float:
        return float(np.interp(t, self.times, self._series(name)))

    def integral(self, name: str, t0: float, t1: float) -> float:
        return time_integral(self.times, self._series(name), t0, t1)

    def sup(self, name: str, t0: float, t1: float) -> float:
        return time_sup(self.times, self._series(name), t0, t1)

    def _series(self, name):
        if name in self.S:
            return self.S[name]
        return getattr(self.trace, name)

    def window_series(self, name: str, length: float, t0: float | None = None) -> np.ndarray:
        """``int_{t-length}^t`` of a series at every sample ``t >= t0``."""
        if name not in self._cum:
            f = self._series(name)
            dt = np.diff(self.times)
            self._cum[name] = np.concatenate([[0.0], np.cumsum(0.5 * dt * (f[1:] + f[:-1]))])
        c = self._cum[name]
        return c - np.interp(self.times - length, self.times, c)

    def tail_mask(self, earliest: float = 0.0) -> np.ndarray:
        return (self.times >= self.T - self.scenario.tail - _EPS) & (self.times >= earliest - _EPS)

    def tail_max(self, values, earliest: float = 0.0) -> float:
        m = self.tail_mask(earliest)
        if not np.any(m):
            raise DomainError("tail window has no admissible samples")
        return float(np.max(np.asarray(values)[m]))

    # data quantities
    @property
    def pbar0_norm(self) -> float:
        return self.S["pbar_alpha"][0] ** (1 / self.alpha)

    @property
    def H0(self) -> float:
        return float(self.S["H"][0])

    def env(self, t: float) -> float:
        return float(np.interp(t, self.times, self.trace.EnvA))

    def psi_norm(self, t0: float, t1: float) -> float:
        return self.integral("psi_alpha", t0, t1) ** (1 / self.alpha)

    def bracket(self, t: float, lo: float) -> float:
        """``1 + Env A(t)^(1/(alpha-a)) + ||Psi||_{L^alpha(U x (lo, t))}``."""
        return 1 + self.env(t) ** (1 / (self.alpha - self.a)) + self.psi_norm(lo, t)

    @property
    def A_limsup(self) -> float:
        return self.trace.tail_max("A")

    @property
    def beta(self) -> float:
        return self.trace.beta

    def psi_norm_limsup(self) -> float:
        w = self.window_series("psi_alpha", 1.0)
        return self.tail_max(w, 1.0) ** (1 / self.alpha)

    def G_limsup(self, k: int) -> float:
        return self.tail_max(self.window_series(f"G{k}", 1.0), 1.0)

    def beta_bracket(self, t: float, back: float) -> float:
        """``1 + beta^(1/(alpha-2a)) + sup_[t-back,t] A^(1/(alpha-a)) + ||Psi||_(t-back,t)``."""
        am = self.alpha - self.a
        return (
            1
            + self.beta ** (1 / (self.alpha - 2 * self.a))
            + self.sup("A", t - back, t) ** (1 / am)
            + self.psi_norm(t - back, t)
        )

    # ladders
    def small_times(self):
        return [t for t in SMALL_TIMES if t <= self.T + _EPS]

    def unit_times(self, start: float = 1.0):
        return [float(t) for t in range(int(math.ceil(start)), int(math.floor(self.T + _EPS)) + 1)]

    def tail_times(self, start: float = 1.0):
        lo = self.T - self.scenario.tail
        return [t for t in self.unit_times(start) if t >= lo - _EPS]

    def windows(self):
        T = self.T
        out = [(0.0, min(1.0, T)), (0.0, T)]
        if T > 2:
            out.append((0.5 * T, 0.5 * T))
        return list(dict.fromkeys(out))


def analyze(scenario: Scenario, traj: Trajectory | None = None, s_values=S_VALUES) -> Analysis:
    if traj is None:
        traj = solve_ibvp(scenario)
    return Analysis(scenario, traj, s_values)


def _params(an: Analysis, **kw) -> dict:
    sc = an.scenario
    d = {
        "preset": sc.boundary.preset,
        "amplitude": sc.boundary.amplitude,
        "cells": sc.grid.cells,
        "dim": sc.grid.dim,
        "alpha": an.alpha,
    }
    d.update(kw)
    return d


def _rec(an: Analysis, eid: str, lhs, rhs, **kw) -> EstimateRecord:
    return EstimateRecord.make(eid, an.scenario.scenario_id, lhs, rhs, ESTIMATES[eid][1], **_params(an, **kw))


# ------------------------------------------------------------ estimates


def check_gronwall(an: Analysis) -> list:
    """Uniform Gronwall bounds on energy and ``p_t``, their data forms, and
    the cumulative prior-work bounds."""
    if an.T < 1 - _EPS:
        raise DomainError("Gronwall checks need a horizon of at least 1")
    am = an.alpha - an.a
    p_e = an.alpha / am
    out = []
    for t in an.unit_times():
        Hwin = an.integral("H", t - 1, t)
        ptwin = an.integral("pbart2", t - 0.5, t)
        base = an.at("pbar2", t - 1)
        G = {k: an.integral(f"G{k}", t - 1, t) for k in (1, 3, 4)}
        data = 1 + an.S["pbar_alpha"][0] + an.env(t) ** p_e
        out += [
            _rec(an, "gronwall-energy-window", Hwin, base + G[1], t=t),
            _rec(an, "gronwall-energy-pt", an.at("H", t) + 0.5 * ptwin, base + G[3], t=t),
            _rec(an, "gronwall-pt-uniform", an.at("pbart2", t), base + G[4], t=t),
            _rec(an, "gronwall-energy-window-data", Hwin, data + G[1], t=t),
            _rec(an, "gronwall-pt-window-data", ptwin, data + G[3], t=t),
        ]
    for t in an.small_times() + an.unit_times(2):
        I = {k: an.integral(f"G{k}", 0, t) for k in (1, 3, 4)}
        pb0 = an.S["pbar2"][0]
        out += [
            _rec(an, "prior-energy-cumulative", an.integral("H", 0, t), pb0 + I[1], t=t),
            _rec(an, "prior-energy-pt-cumulative", an.at("H", t) + an.integral("pbart2", 0, t), an.H0 + pb0 + I[3], t=t),
            _rec(
                an,
                "prior-pt-pointwise",
                an.at("pbart2", t),
                (1 + 1 / t) * (1 + an.S["pbar_alpha"][0] + an.H0 + an.env(t) ** p_e + I[4]),
                t=t,
            ),
        ]
    if an.tail_times():
        base_lim = 1 + an.A_limsup**p_e
        Hw = an.window_series("H", 1.0)
        pw = an.window_series("pbart2", 0.5)
        T = an.T
        out += [
            _rec(an, "gronwall-energy-limsup", an.tail_max(an.S["H"]), base_lim + an.G_limsup(3), t=T),
            _rec(an, "gronwall-pt-limsup", an.tail_max(an.S["pbart2"]), base_lim + an.G_limsup(4), t=T),
            _rec(an, "gronwall-energy-window-limsup", an.tail_max(Hw, 1.0), base_lim + an.G_limsup(1), t=T),
            _rec(an, "gronwall-pt-window-limsup", an.tail_max(pw, 1.0), base_lim + an.G_limsup(3), t=T),
        ]
        bt = an.beta ** (an.alpha / (an.alpha - 2 * an.a))
        for t in an.tail_times():
            base_b = 1 + bt + an.at("A", t - 1) ** p_e
            G = {k: an.integral(f"G{k}", t - 1, t) for k in (1, 3, 4)}
            ptwin = an.integral("pbart2", t - 0.5, t)
            out += [
                _rec(an, "gronwall-energy-beta", an.at("H", t), base_b + G[3], t=t),
                _rec(an, "gronwall-pt-beta", an.at("pbart2", t), base_b + G[4], t=t),
                _rec(an, "gronwall-energy-window-beta", an.integral("H", t - 1, t), base_b + G[1], t=t),
                _rec(an, "gronwall-pt-window-beta", ptwin, base_b + G[3], t=t),
            ]
    return out


def check_dissipation(traj: Trajectory, tol: float = 1e-12) -> ExactCheck:
    """With zero data the discrete energy is nonincreasing at every step."""
    e = np.asarray(traj.diagnostics.get("energy", []), dtype=float)
    if e.size < 2:
        return ExactCheck("dissipation", True, 0.0, tol, "no steps")
    inc = np.diff(e) - tol * np.maximum(e[:-1], 1e-300)
    worst = float(np.max(inc))
    bad = int(np.sum(inc > 0))
    return ExactCheck("dissipation", bad == 0, max(worst, 0.0), tol, f"{bad} increasing steps")


def check_linfty_pressure(an: Analysis, thetas=THETAS) -> list:
    tb = an.table
    am = an.alpha - an.a
    k1, k2 = tb.kappa1, tb.kappa2
    out = []
    for T0, T in an.windows():
        for th in thetas:
            lhs = an.sup("pinf_Up", T0 + th * T, T0 + T)
            norm = an.integral("p_alpha", T0, T0 + T) ** (1 / an.alpha)
            rhs = (1 + T) ** (k1 / tb.kappa0) * (1 + 1 / (th * T)) ** (k1 / am) * (1 + norm) ** k2
            out.append(_rec(an, "pressure-linf-local", lhs, rhs, T0=T0, T=T, theta=th))
    for t in an.small_times():
        rhs = t ** (-k1 / am) * (an.bracket(t, 0) + an.pbar0_norm) ** k2
        out.append(_rec(an, "pressure-linf-small-time", an.at("pinf_Up", t), rhs, t=t))
    for t in an.unit_times():
        rhs = (an.bracket(t, t - 1) + an.pbar0_norm) ** k2
        out.append(_rec(an, "pressure-linf-large-time", an.at("pinf_Up", t), rhs, t=t))
    if an.tail_times():
        rhs = (1 + an.A_limsup ** (1 / am) + an.psi_norm_limsup()) ** k2
        out.append(_rec(an, "pressure-linf-limsup", an.tail_max(an.S["pinf_Up"]), rhs, t=an.T))
        bt = an.beta ** (1 / (an.alpha - 2 * an.a))
        A_pow = an.trace.A ** (an.alpha / am)
        for t in an.tail_times():
            a_norm = time_integral(an.times, A_pow, t - 1, t) ** (1 / an.alpha)
            rhs = (1 + bt + a_norm + an.psi_norm(t - 1, t)) ** k2
            out.append(_rec(an, "pressure-linf-beta", an.at("pinf_Up", t), rhs, t=t))
    return out


def check_grad_ls(an: Analysis, s_values=None, thetas=THETAS) -> list:
    s_values = an.s_values if s_values is None else tuple(float(s) for s in s_values)
    for s in s_values:
        if s < 2:
            raise ValidationError(f"gradient L^s estimates need s >= 2, got {s}")
        if s not in an.s_values:
            raise ValidationError(f"s={s} was not precomputed; pass it to analyze()")
    tb, a, alpha = an.table, an.a, an.alpha
    am = alpha - a
    out = []
    for s in s_values:
        KGs, Gs = f"KGs_Up[{s:g}]", f"Gs_Up[{s:g}]"
        mu1, mu2 = tb.mu1(s), tb.mu2(s)
        for T0, T in an.windows():
            for th in thetas:
                base = an.integral("one_KG2", T0, T0 + T)
                N = 1 + an.sup("pinf_V", T0 + 0.5 * th * T, T0 + T) ** 2
                f = 1 + 1 / (th * T)
                lhs0 = an.integral(KGs, T0 + th * T, T0 + T)
                out.append(_rec(an, "grad-ls-spacetime", lhs0, f ** (s - 2) * N ** (s - 2) * base, T0=T0, T=T, theta=th, s=s))
                lhs1 = an.sup(Gs, T0 + th * T, T0 + T)
                out.append(_rec(an, "grad-ls-sup", lhs1, f ** (s + a - 1) * N ** (s - 2 + a) * base, T0=T0, T=T, theta=th, s=s))
        for t in an.small_times():
            rhs = (
                t ** (-mu1)
                * (1 + an.pbar0_norm) ** (mu2 + 2)
                * an.bracket(t, 0) ** mu2
                * (1 + an.integral("G1", 0, t))
            )
            out.append(_rec(an, "grad-ls-small-time", an.at(Gs, t), rhs, t=t, s=s))
        for t in an.unit_times(2):
            e = mu2 + alpha
            rhs = (1 + an.pbar0_norm) ** e * an.bracket(t, t - 2) ** e * (1 + an.integral("G1", t - 1, t))
            out.append(_rec(an, "grad-ls-large-time", an.at(Gs, t), rhs, t=t, s=s))
        if an.tail_times(2):
            e = mu2 + alpha
            rhs = (1 + an.A_limsup ** (1 / am) + an.psi_norm_limsup()) ** e * (1 + an.G_limsup(1))
            out.append(_rec(an, "grad-ls-limsup", an.tail_max(an.S[Gs]), rhs, t=an.T, s=s))
            for t in an.tail_times(2):
                rhs = an.beta_bracket(t, 2) ** e * (1 + an.integral("G1", t - 1, t))
                out.append(_rec(an, "grad-ls-beta", an.at(Gs, t), rhs, t=t, s=s))
    return out


def _lambda(an: Analysis, T0: float, T: float, th: float) -> float:
    return lambda_from_series(an.times, an.S["lam_V"], T0, T, th, an.table.s0)


def check_grad_linfty(an: Analysis, thetas=THETAS) -> list:
    tb = an.table
    s1, s3, k5, alpha = tb.s1, tb.s3, tb.kappa5, an.alpha
    am = alpha - an.a
    out = []
    for T0, T in an.windows():
        for th in thetas:
            lhs = an.sup("gradinf_Up", T0 + th * T, T0 + T)
            l2 = math.sqrt(an.integral("G2_V", T0 + 0.5 * th * T, T0 + T))
            rhs = (1 + 1 / (th * T)) ** ((s1 + 1) / 2) * _lambda(an, T0, T, th) ** (s1 / 2) * l2
            out.append(_rec(an, "grad-linf-local", lhs, rhs, T0=T0, T=T, theta=th))
    for t in an.small_times():
        rhs = (
            t ** (-tb.kappa4 / 2)
            * (1 + an.pbar0_norm) ** (s3 * (k5 + 1))
            * an.bracket(t, 0) ** (s3 * k5)
            * (1 + an.integral("G1", 0, t)) ** (s3 / 2)
        )
        out.append(_rec(an, "grad-linf-small-time", an.at("gradinf_Up", t), rhs, t=t))
    e = s3 * (k5 + alpha / 2)
    for t in an.unit_times(2):
        rhs = (1 + an.pbar0_norm) ** e * an.bracket(t, t - 2) ** e * (1 + an.integral("G1", t - 1, t)) ** (s3 / 2)
        out.append(_rec(an, "grad-linf-large-time", an.at("gradinf_Up", t), rhs, t=t))
    if an.tail_times(2):
        rhs = (1 + an.A_limsup ** (1 / am) + an.psi_norm_limsup()) ** e * (1 + an.G_limsup(1)) ** (s3 / 2)
        out.append(_rec(an, "grad-linf-limsup", an.tail_max(an.S["gradinf_Up"]), rhs, t=an.T))
    for t in an.tail_times(3):
        rhs = an.beta_bracket(t, 3) ** e * (1 + an.integral("G1", t - 2, t)) ** (s3 / 2)
        out.append(_rec(an, "grad-linf-beta", an.at("gradinf_Up", t), rhs, t=t))
    return out


def check_pt_linfty(an: Analysis, thetas=THETAS, max_spacing: float = MAX_PT_SPACING) -> list:
    if an.spacing > max_spacing + _EPS:
        raise ValidationError(
            f"snapshot spacing {an.spacing:g} too coarse for centered p_t (need <= {max_spacing:g}); lower the stride"
        )
    tb = an.table
    s1, s3, alpha = tb.s1, tb.s3, an.alpha
    am = alpha - an.a
    out = []
    for T0, T in an.windows():
        for th in thetas:
            lhs = an.sup("ptinf_Up", T0 + th * T, T0 + T)
            l2 = math.sqrt(an.integral("pt2", T0, T0 + T))
            rhs = _lambda(an, T0, T, th) ** (s1 / 2) * (1 + 1 / (th * T)) ** ((s1 + 1) / 2) * l2
            out.append(_rec(an, "pt-linf-local", lhs, rhs, T0=T0, T=T, theta=th))
    for t in an.small_times():
        rhs = (
            t ** (-tb.kappa6 / 2)
            * (1 + an.pbar0_norm) ** tb.kappa7
            * (1 + an.H0) ** 0.5
            * an.bracket(t, 0) ** tb.kappa8
            * (1 + an.integral("G3", 0, t)) ** (s3 / 2)
        )
        out.append(_rec(an, "pt-linf-small-time", an.at("ptinf_Up", t), rhs, t=t))
    k9 = tb.kappa9
    for t in an.unit_times(2):
        rhs = (1 + an.pbar0_norm) ** k9 * an.bracket(t, t - 2) ** k9 * (1 + an.integral("G3", t - 1, t)) ** (s3 / 2)
        out.append(_rec(an, "pt-linf-large-time", an.at("ptinf_Up", t), rhs, t=t))
    if an.tail_times(2):
        rhs = (1 + an.A_limsup ** (1 / am) + an.psi_norm_limsup()) ** k9 * (1 + an.G_limsup(3)) ** (s3 / 2)
        out.append(_rec(an, "pt-linf-limsup", an.tail_max(an.S["ptinf_Up"]), rhs, t=an.T))
    for t in an.tail_times(3):
        rhs = an.beta_bracket(t, 3) ** k9 * (1 + an.integral("G3", t - 2, t)) ** (s3 / 2)
        out.append(_rec(an, "pt-linf-beta", an.at("ptinf_Up", t), rhs, t=t))
    return out


def hessian_l2(an: Analysis, t: float) -> tuple:
    """``(lhs, rhs)`` of the local Hessian bound at time ``t``."""
    lhs = an.at("hess_Up", t)
    rhs = (1 + an.at("gradinf_V", t)) ** an.a * math.sqrt(an.at("G2ma", t) + an.at("pt2", t))
    return lhs, rhs


def check_hessian_l2(an: Analysis) -> list:
    tb = an.table
    alpha = an.alpha
    am = alpha - an.a
    s4, k11 = tb.s4, tb.kappa11
    out = []
    for t in an.small_times() + an.unit_times(2):
        lhs, rhs = hessian_l2(an, t)
        out.append(_rec(an, "hessian-l2-local", lhs, rhs, t=t))
    for t in an.small_times():
        rhs = (
            t ** (-tb.kappa10 / 2)
            * (1 + an.pbar0_norm) ** k11
            * (1 + an.H0) ** 0.5
            * an.bracket(t, 0) ** tb.kappa12
            * (1 + an.integral("G4", 0, t)) ** (s4 / 2)
        )
        out.append(_rec(an, "hessian-l2-small-time", an.at("hess_Up", t), rhs, t=t))
    for t in an.unit_times(2):
        rhs = (1 + an.pbar0_norm) ** k11 * an.bracket(t, t - 2) ** k11 * (1 + an.integral("G4", t - 1, t)) ** (s4 / 2)
        out.append(_rec(an, "hessian-l2-large-time", an.at("hess_Up", t), rhs, t=t))
    if an.tail_times(2):
        rhs = (1 + an.A_limsup ** (1 / am) + an.psi_norm_limsup()) ** k11 * (1 + an.G_limsup(4)) ** (s4 / 2)
        out.append(_rec(an, "hessian-l2-limsup", an.tail_max(an.S["hess_Up"]), rhs, t=an.T))
    for t in an.tail_times(3):
        rhs = an.beta_bracket(t, 3) ** k11 * (1 + an.integral("G4", t - 2, t)) ** (s4 / 2)
        out.append(_rec(an, "hessian-l2-beta", an.at("hess_Up", t), rhs, t=t))
    return out


CHECKS = {
    "gronwall": check_gronwall,
    "pressure": check_linfty_pressure,
    "grad-ls": check_grad_ls,
    "grad-linf": check_grad_linfty,
    "pt": check_pt_linfty,
    "hessian": check_hessian_l2,
}


def resolve_selection(selection) -> tuple:
    """Families whose checks must run, and the ids to keep."""
    if selection is None:
        return FAMILIES, set(ESTIMATES)
    selection = list(selection)
    if not selection:
        raise ValidationError("empty estimate selection")
    ids = set()
    for item in selection:
        if item in FAMILIES:
            ids |= {k for k, (fam, _) in ESTIMATES.items() if fam == item}
        elif item in ESTIMATES:
            ids.add(item)
        else:
            raise ValidationError(f"unknown estimate {item!r}")
    fams = tuple(f for f in FAMILIES if any(ESTIMATES[i][0] == f for i in ids))
    return fams, ids


# --------------------------------------------------------------- lemmas


def _check_admissible(table: ExponentTable, law: ForchheimerLaw, alpha: float | None):
    alpha = table.alpha if alpha is None else alpha
    chk = validate_alpha(table.n, law, alpha)
    if not chk:
        raise ValidationError(f"inadmissible alpha={alpha}: {'; '.join(chk.reasons)}")
    return alpha


def parabolic_sobolev_sides(grid, times, u, alpha, a, n, delta=0.0, ball=False):
    """``(lhs, rhs)`` of the parabolic Poincare-Sobolev inequality without C.

    ``lhs = ||u||_{L^p(Q_T)}`` with ``p = alpha(1+(2-a)/n) - a``;
    ``rhs = (1 + delta T)^(1/p) [[u]]``.  With ``ball`` the domain side is
    the radius and the bracket carries its R-weights.
    """
    p = alpha * (1 + (2 - a) / n) - a
    times = np.asarray(times, dtype=float)
    per = space_integral(grid, np.abs(u) ** p)
    lhs = time_integral(times, per, times[0], times[-1]) ** (1 / p)
    T = times[-1] - times[0]
    R = grid.length if ball else None
    br = double_bracket(grid, times, u, alpha, a, ball_radius=R, n=n, kappa0=p)
    return float(lhs), float((1 + delta * T) ** (1 / p) * br)


def check_parabolic_sobolev(
    grid: Grid,
    times,
    u,
    table: ExponentTable,
    law: ForchheimerLaw,
    alpha: float | None = None,
    delta: float = 0.0,
    scenario_id: str = "family",
    amplitudes=(0.1, 10.0),
    radii=(0.5, 2.0),
    amp_tol: float = 1e-10,
    dil_tol: float = 1e-8,
):
    """Witness ratio plus amplitude and dilation invariance checks.

    Dilation maps the nodal values unchanged onto a grid of side ``R``, which
    is ``u(x/R, t)`` sampled on the dilated grid.
    """
    alpha = _check_admissible(table, law, alpha)
    a, n = law.a, table.n
    u = np.asarray(u, dtype=float)
    lhs, rhs = parabolic_sobolev_sides(grid, times, u, alpha, a, n, delta)
    rec = EstimateRecord.make("parabolic-sobolev", scenario_id, lhs, rhs, True, alpha=alpha, cells=grid.cells, delta=delta)
    checks = []
    worst = 0.0
    for lam in amplitudes:
        l2, r2 = parabolic_sobolev_sides(grid, times, lam * u, alpha, a, n, delta)
        worst = max(worst, _rel(witness_ratio(l2, r2), rec.ratio))
    checks.append(ExactCheck(f"parabolic-sobolev-amplitude[{grid.cells}]", worst <= amp_tol, worst, amp_tol))
    base_l, base_r = parabolic_sobolev_sides(grid, times, u, alpha, a, n, delta, ball=True)
    base = witness_ratio(base_l, base_r)
    worst = 0.0
    for R in radii:
        g2 = Grid(grid.dim, grid.cells, grid.length * R)
        l2, r2 = parabolic_sobolev_sides(g2, times, u, alpha, a, n, delta, ball=True)
        worst = max(worst, _rel(witness_ratio(l2, r2), base))
    checks.append(ExactCheck(f"parabolic-sobolev-dilation[{grid.cells}]", worst <= dil_tol, worst, dil_tol))
    return rec, checks


def _rel(x, y):
    if x == y:
        return 0.0
    return abs(x - y) / max(abs(x), abs(y))


def check_weighted_embedding(grid: Grid, times, u, W, r: float, n: int, delta: float = 0.0, scenario_id: str = "family"):
    """Weighted embedding witness ratio.

    ``lhs = ||u||_{L^varrho(Q_T)}`` with ``varrho = 4(1 - 1/r*)``;
    ``rhs = [[u]]_{2,W} (delta T^(1/varrho) + sup_t (int W^(-r/(2-r)) chi_{u != 0})^((2-r)/(varrho r)))``.
    ``W`` is a scalar or an array shaped like ``u``.
    """
    lo = 2 * n / (n + 2)
    if not lo < r < 2:
        raise ValidationError(f"r must lie in ({lo:g}, 2), got {r}")
    times = np.asarray(times, dtype=float)
    u = np.asarray(u, dtype=float)
    W = np.broadcast_to(np.asarray(W, dtype=float), u.shape)
    rho = varrho(r, n)
    per = space_integral(grid, np.abs(u) ** rho)
    lhs = time_integral(times, per, times[0], times[-1]) ** (1 / rho)
    T = times[-1] - times[0]
    supp = np.abs(u) > 0
    wf = space_integral(grid, np.where(supp, W ** (-r / (2 - r)), 0.0))
    factor = delta * T ** (1 / rho) + float(np.max(wf)) ** ((2 - r) / (rho * r))
    rhs = weighted_bracket(grid, times, u, W) * factor
    return EstimateRecord.make(
        "weighted-embedding", scenario_id, lhs, rhs, True, r=r, varrho=rho, r_star=sobolev_conjugate(r, n), cells=grid.cells
    )


@dataclass
class DeGiorgiResult:
    sequence: list
    threshold: float
    converged: bool
    diverged: bool


def degiorgi_threshold(A, B, mu) -> float:
    """Largest ``Y0`` for which the fast-geometric lemma guarantees ``Y_i -> 0``."""
    m = len(A)
    Bmax, mumin = max(B), min(mu)
    return min((1.0 / (m * Ak) * Bmax ** (-1.0 / mumin)) ** (1.0 / muk) for Ak, muk in zip(A, mu))


def degiorgi_iterate(A, B, mu, Y0: float, steps: int = 50) -> DeGiorgiResult:
    """Iterate ``Y_{i+1} = sum_k A_k B_k^i Y_i^(1+mu_k)`` with equality."""
    A, B, mu = [float(x) for x in A], [float(x) for x in B], [float(x) for x in mu]
    if not (len(A) == len(B) == len(mu) >= 1):
        raise ValidationError("coefficient lists must be nonempty and of equal length")
    if min(A) <= 0 or min(B) <= 1 or min(mu) <= 0 or Y0 < 0:
        raise ValidationError("need A_k > 0, B_k > 1, mu_k > 0 and Y0 >= 0")
    Y = [float(Y0)]
    diverged = False
    for i in range(steps):
        y = Y[-1]
        try:
            nxt = sum(Ak * Bk**i * y ** (1 + mk) for Ak, Bk, mk in zip(A, B, mu))
        except OverflowError:
            nxt = math.inf
        if not math.isfinite(nxt):
            diverged = True
            Y.append(math.inf)
            break
        Y.append(nxt)
    converged = (not diverged) and Y[-1] < 1e-6 * max(Y0, 1.0)
    return DeGiorgiResult(Y, degiorgi_threshold(A, B, mu), converged, diverged)


def check_degiorgi_sufficiency(trials: int = 100, seed: int = 0, fraction: float = 0.9, steps: int = 50) -> ExactCheck:
    """Random coefficient sets started at ``fraction`` of the threshold must converge."""
    rng = random.Random(seed)
    failures = 0
    worst = 0.0
    for _ in range(trials):
        m = rng.randint(1, 3)
        A = [rng.uniform(0.1, 10) for _ in range(m)]
        B = [rng.uniform(1.1, 8) for _ in range(m)]
        mu = [rng.uniform(0.2, 2) for _ in range(m)]
        Y0 = fraction * degiorgi_threshold(A, B, mu)
        res = degiorgi_iterate(A, B, mu, Y0, steps)
        if not res.converged:
            failures += 1
        worst = max(worst, res.sequence[-1] / max(Y0, 1.0))
    return ExactCheck("fast-geometric-sufficiency", failures == 0, worst, 1e-6, f"{failures}/{trials} failed")


def manufactured_family(grid: Grid, T: float = 1.0, samples: int = 41, amplitude: float = 1.0):
    """``u = c sin(pi x1) sin(pi x2) exp(-t)`` sampled on the grid."""
    times = np.linspace(0.0, T, samples)
    space = np.broadcast_to(bump(grid.mesh()), grid.shape)
    decay = np.exp(-times).reshape((-1,) + (1,) * grid.dim)
    return times, amplitude * decay * space


def lemma_checks(law: ForchheimerLaw, table: ExponentTable, cells=(32, 64), seed: int = 0) -> tuple:
    """Scenario-independent lemma records and exact checks."""
    records, checks = [], []
    for c in cells:
        grid = Grid(2, c)
        times, u = manufactured_family(grid)
        rec, ch = check_parabolic_sobolev(grid, times, u, table, law, scenario_id=f"manufactured-{c}")
        records.append(rec)
        checks += ch
        r = 0.5 * (2 * table.n / (table.n + 2) + 2)
        records.append(check_weighted_embedding(grid, times, u, 1.0, r, table.n, scenario_id=f"manufactured-{c}"))
    checks.append(check_degiorgi_sufficiency(seed=seed))
    return records, checks


# ---------------------------------------------------------------- sweeps


def scenario_exact_checks(scenario: Scenario, traj: Trajectory, records) -> list:
    out = []
    rep = verify_constitutive(scenario.law, np.geomspace(1e-6, 1e6, 2000))
    out.append(ExactCheck("constitutive", rep.ok, float(len(rep.violations)), 0.0, str(scenario.law)))
    if scenario.boundary.is_zero and scenario.manufactured is None:
        out.append(check_dissipation(traj))
    bad = [r for r in records if not r.finite]
    out.append(ExactCheck("finite-ratios", not bad, float(len(bad)), 0.0, ", ".join(sorted({r.estimate_id for r in bad}))))
    return out


def evaluate_scenario(scenario: Scenario, selection=None, traj: Trajectory | None = None, s_values=S_VALUES):
    """Solve (unless given a trajectory) and evaluate the selected estimates.

    Returns ``(records, exact_checks, analysis)``.
    """
    if selection is None and scenario.estimates is not None:
        selection = scenario.estimates
    fams, ids = resolve_selection(selection)
    an = analyze(scenario, traj, s_values)
    records = []
    for fam in fams:
        records += [r for r in CHECKS[fam](an) if r.estimate_id in ids]
    return records, scenario_exact_checks(scenario, an.traj, records), an


@dataclass
class EstimateReport:
    records: list = field(default_factory=list)
    exact_checks: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.exact_checks)

    def estimate_ids(self) -> list:
        return list(dict.fromkeys(r.estimate_id for r in self.records))

    def by_estimate(self) -> dict:
        out = {}
        for r in self.records:
            out.setdefault(r.estimate_id, []).append(r)
        return out

    def aggregates(self) -> dict:
        """Per estimate: count, max ratio, finiteness, refinement factor, spread.

        The refinement factor compares the family-wide max ratio on the
        finest and coarsest grids, as ``max(f/c, c/f)``.  The spread is the
        largest, over (preset, grid) groups, of max/min across amplitudes of
        the per-amplitude max ratio.
        """
        out = {}
        for eid, recs in self.by_estimate().items():
            ratios = np.array([r.ratio for r in recs])
            finite = bool(np.all(np.isfinite(ratios)))
            agg = {
                "records": len(recs),
                "asserted": recs[0].asserted,
                "max_ratio": float(np.max(ratios)) if ratios.size else math.nan,
                "finite": finite,
                "refinement": None,
                "spread": None,
            }
            cells = sorted({r.params.get("cells") for r in recs if r.params.get("cells") is not None})
            if len(cells) >= 2:
                fine = max(r.ratio for r in recs if r.params.get("cells") == cells[-1])
                coarse = max(r.ratio for r in recs if r.params.get("cells") == cells[0])
                agg["refinement"] = _factor(fine, coarse)
            groups = {}
            for r in recs:
                key = (r.params.get("preset"), r.params.get("cells"))
                amp = r.params.get("amplitude")
                if amp is None:
                    continue
                groups.setdefault(key, {})
                groups[key][amp] = max(groups[key].get(amp, 0.0), r.ratio)
            spreads = [_factor(max(g.values()), min(g.values())) for g in groups.values() if len(g) >= 2]
            if spreads:
                agg["spread"] = max(spreads)
            out[eid] = agg
        return out

    def as_dict(self) -> dict:
        return {
            "meta": self.meta,
            "records": [r.as_dict() for r in self.records],
            "exact_checks": [c.as_dict() for c in self.exact_checks],
            "failures": list(self.failures),
            "aggregates": self.aggregates(),
            "ok": self.ok,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateReport":
        return cls(
            [EstimateRecord.from_dict(r) for r in d.get("records", [])],
            [ExactCheck.from_dict(c) for c in d.get("exact_checks", [])],
            [tuple(f) for f in d.get("failures", [])],
            dict(d.get("meta", {})),
        )


def _factor(x: float, y: float) -> float:
    if x == y:
        return 1.0
    lo, hi = min(x, y), max(x, y)
    return hi / lo if lo > 0 else math.inf


def default_family(
    law: ForchheimerLaw | None = None,
    presets=("periodic", "linear-drift"),
    amplitudes=(0.5, 1.0, 2.0, 4.0),
    cells=(32, 64),
    T: float = 10.0,
    dt: float = 0.01,
    picard_tol: float = 1e-6,
    tail_window: float | None = None,
    initial: str = "boundary",
) -> list:
    """The desk-scale sweep family: every preset x amplitude x grid."""
    law = law or ForchheimerLaw((0.0, 1.0), (1.0, 1.0))
    out = []
    for preset in presets:
        for amp in amplitudes:
            for c in cells:
                out.append(
                    Scenario(
                        law=law,
                        grid=Grid(2, c),
                        boundary=make_boundary(preset, amp),
                        T=T,
                        dt=dt,
                        picard_tol=picard_tol,
                        tail_window=tail_window,
                        initial=initial,
                        scenario_id=f"{preset}-a{amp:g}-n{c}",
                    )
                )
    return out


def concurrency_width(width: int | None = None) -> int:
    env = os.environ.get("FORCH_THREADS")
    if env:
        try:
            width = int(env)
        except ValueError:
            raise ValidationError(f"FORCH_THREADS must be an integer, got {env!r}") from None
    width = 1 if width is None else int(width)
    if width < 1:
        raise ValidationError("concurrency width must be >= 1")
    return width


def _worker(args):
    scenario, selection = args
    try:
        records, checks, _ = evaluate_scenario(scenario, selection)
        return scenario.scenario_id, records, checks, None
    except ForchheimerError as exc:
        return scenario.scenario_id, [], [], f"{type(exc).__name__}: {exc}"


def run_sweep(family, selection=None, workers: int | None = None, lemmas: bool = True) -> EstimateReport:
    """Evaluate every scenario of the family and aggregate one report.

    A scenario that fails is recorded in ``failures`` and the sweep goes on.
    """
    family = list(family)
    if not family:
        raise ValidationError("empty scenario family")
    resolve_selection(selection)
    width = concurrency_width(workers)
    jobs = [(sc, selection) for sc in family]
    if width == 1:
        results = [_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(_worker, jobs))
    report = EstimateReport(meta={"scenarios": [sc.scenario_id for sc in family], "workers": width})
    for sid, records, checks, err in results:
        report.records += records
        report.exact_checks += [ExactCheck(f"{c.name}[{sid}]", c.ok, c.value, c.tolerance, c.detail) for c in checks]
        if err is not None:
            report.failures.append((sid, err))
    if lemmas:
        recs, checks = lemma_checks(family[0].law, family[0].table)
        report.records += recs
        report.exact_checks += checks
    if not report.records:
        raise ValidationError("sweep produced no records")
    return report


def tail_quantities(an: Analysis, t: float | None = None) -> dict:
    """Interior ``sup|p|``, ``sup|grad p|`` at ``t`` and ``int_{t-1}^t int pbar_t^2``."""
    t = an.T if t is None else t
    return {
        "sup_p": an.at("pinf_Up", t),
        "sup_grad_p": an.at("gradinf_Up", t),
        "pbar_t_window": an.integral("pbart2", t - 1, t),
    }


def memory_loss_probe(base: Scenario, bump_amplitude: float = 1.0) -> dict:
    """Same data, initial fields ``Psi(., 0)`` and ``Psi(., 0) + bump``.

    Returns both sets of tail quantities and their relative differences.
    """
    runs = {}
    for name, sc in (
        ("zero", base.with_(initial="boundary")),
        ("bump", base.with_(initial="bump", initial_amplitude=bump_amplitude)),
    ):
        an = analyze(sc, s_values=(2.0,))
        runs[name] = tail_quantities(an)
    rel = {k: _rel(runs["zero"][k], runs["bump"][k]) for k in runs["zero"]}
    return {"zero": runs["zero"], "bump": runs["bump"], "relative_difference": rel}

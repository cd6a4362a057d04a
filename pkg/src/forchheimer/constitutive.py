"""Generalized Forchheimer law and the derived diffusivity.

A law is the generalized polynomial ``g(s) = sum_i a_i s**alpha_i`` with
``alpha_0 = 0``.  The pressure gradient magnitude ``xi`` and the velocity
magnitude ``s`` are linked by ``s g(s) = xi``; the diffusivity is
``K(xi) = 1 / g(s(xi))`` and the energy density is
``H(xi) = int_0^xi 2 tau K(tau) dtau``.

All functions accept scalars or arrays and return the same shape.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError, ValidationError

ROOT_TOL = 1e-12
QUAD_TOL = 1e-10

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class ForchheimerLaw:
    """Coefficients and exponents of ``g``.

    Parameters
    ----------
    exponents : sequence of float
        ``0 = alpha_0 < alpha_1 < ... < alpha_N``.
    coefficients : sequence of float
        ``a_0, ..., a_N`` with ``a_0 > 0``, ``a_N > 0`` and all ``a_i >= 0``.
    """

    exponents: tuple
    coefficients: tuple
    _alpha: np.ndarray = field(init=False, repr=False, compare=False)
    _coef: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alpha = tuple(float(v) for v in self.exponents)
        coef = tuple(float(v) for v in self.coefficients)
        if len(alpha) != len(coef):
            raise ValidationError("exponents and coefficients differ in length")
        if len(alpha) < 2:
            raise ValidationError("a law needs at least two terms (N >= 1)")
        if alpha[0] != 0.0:
            raise ValidationError("first exponent must be exactly 0")
        if not all(np.isfinite(alpha)) or not all(np.isfinite(coef)):
            raise ValidationError("exponents and coefficients must be finite")
        if any(b <= a for a, b in zip(alpha, alpha[1:])):
            raise ValidationError("exponents must be strictly increasing")
        if coef[0] <= 0 or coef[-1] <= 0:
            raise ValidationError("first and last coefficients must be positive")
        if any(c < 0 for c in coef):
            raise ValidationError("coefficients must be nonnegative")
        object.__setattr__(self, "exponents", alpha)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "_alpha", np.array(alpha))
        object.__setattr__(self, "_coef", np.array(coef))

    @property
    def degree(self) -> float:
        return self.exponents[-1]

    @property
    def a(self) -> float:
        return self.degree / (1.0 + self.degree)

    def pairs(self):
        return [[e, c] for e, c in zip(self.exponents, self.coefficients)]

    @classmethod
    def from_pairs(cls, pairs):
        pairs = sorted((float(e), float(c)) for e, c in pairs)
        return cls(tuple(e for e, _ in pairs), tuple(c for _, c in pairs))

    @classmethod
    def parse(cls, text: str) -> "ForchheimerLaw":
        """Parse strings such as ``"1+s"``, ``"1 + 2*s^1.5"`` or ``"1+s+s**2"``."""
        terms = {}
        body = text.replace(" ", "")
        if not body:
            raise ValidationError("empty law string")
        for raw in body.split("+"):
            m = _TERM.fullmatch(raw)
            if m is None:
                raise ValidationError(f"cannot parse term {raw!r} in law {text!r}")
            coef = float(m["c"]) if m["c"] else 1.0
            if m["s"]:
                expo = float(m["e"]) if m["e"] else 1.0
            else:
                if not m["c"]:
                    raise ValidationError(f"cannot parse term {raw!r} in law {text!r}")
                expo = 0.0
            terms[expo] = terms.get(expo, 0.0) + coef
        if 0.0 not in terms:
            raise ValidationError("law needs a positive constant term")
        return cls.from_pairs(terms.items())

    def __str__(self):
        parts = []
        for e, c in zip(self.exponents, self.coefficients):
            if e == 0:
                parts.append(f"{c:g}")
            else:
                cs = "" if c == 1 else f"{c:g}*"
                es = "" if e == 1 else f"^{e:g}"
                parts.append(f"{cs}s{es}")
        return "+".join(parts)


_TERM = re.compile(
    r"(?P<c>(?:\d+\.?\d*|\.\d+)(?:[eE]-?\d+)?)?\*?(?P<s>s(?:(?:\^|\*\*)(?P<e>\d+\.?\d*|\.\d+))?)?"
)


def _check_nonneg(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be finite and nonnegative")
    return arr


def _powers(s, expo):
    # s**expo with the convention 0**0 = 1 and 0**e = 0 for e > 0
    return np.power.outer(s, expo) if np.ndim(s) else np.power(s, expo)


def eval_g(law: ForchheimerLaw, s):
    """``g(s) = sum a_i s**alpha_i`` for ``s >= 0``."""
    s = _check_nonneg(s, "s")
    return _powers(s, law._alpha) @ law._coef


def _dg(law, s):
    # g'(s); infinite at s = 0 when some 0 < alpha_i < 1
    alpha, coef = law._alpha[1:], law._coef[1:]
    with np.errstate(divide="ignore"):
        return _powers(s, alpha - 1.0) @ (coef * alpha)


def _sdg(law, s):
    # s g'(s), finite everywhere
    alpha, coef = law._alpha[1:], law._coef[1:]
    return _powers(s, alpha) @ (coef * alpha)


def invert_sg(law: ForchheimerLaw, xi, tol: float = ROOT_TOL, max_iter: int = 200):
    """Solve ``s g(s) = xi`` for ``s >= 0``.

    Newton's method started from an upper bound, safeguarded by bisection on
    the bracket ``[0, max(1, xi/a_0)]``.  Since ``s g(s)`` is increasing and
    convex the Newton iterates decrease monotonically onto the root.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    x = _check_nonneg(xi, "xi")
    a0, aN, top = law.coefficients[0], law.coefficients[-1], law.degree
    lo = np.zeros_like(x)
    hi = np.maximum(1.0, x / a0)
    s = np.minimum(hi, (x / aN) ** (1.0 / (1.0 + top)))
    goal = tol * (1.0 + x)
    expo1 = law._alpha + 1.0
    for _ in range(max_iter):
        ps = _powers(s, law._alpha)
        f = (ps * s[..., None] if np.ndim(s) else ps * s) @ law._coef - x
        done = np.abs(f) <= goal
        fp = ps @ (law._coef * expo1)
        if np.all(done):
            # one more Newton step brings the root to working precision
            with np.errstate(divide="ignore", invalid="ignore"):
                polish = s - f / fp
            ok = np.isfinite(polish) & (polish >= 0)
            return np.where(ok, polish, s)[()]
        hi = np.where(f > 0, s, hi)
        lo = np.where(f < 0, s, lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = s - f / fp
        inside = (step > lo) & (step < hi)
        s = np.where(done, s, np.where(inside, step, 0.5 * (lo + hi)))
    bad = np.argmax(np.abs(np.atleast_1d(f)) - np.atleast_1d(goal))
    raise NumericError(
        "root solve for s g(s) = xi did not converge",
        bracket=(float(np.atleast_1d(lo)[bad]), float(np.atleast_1d(hi)[bad])),
    )


def eval_K(law: ForchheimerLaw, xi, tol: float = ROOT_TOL):
    """Return ``(K, K')`` at ``xi``.

    ``K' = -g'(s) s'(xi) / g(s)**2`` with ``s'(xi) = 1 / (g + s g')``.
    """
    s = invert_sg(law, xi, tol)
    g = eval_g(law, s)
    dg = _dg(law, s)
    with np.errstate(invalid="ignore"):
        dK = -dg / (g * g * (g + s * dg))
    dK = np.where(np.isinf(dg), -np.inf, dK)
    return 1.0 / g, dK[()] if np.ndim(dK) == 0 else dK


def diffusivity(law: ForchheimerLaw, xi, tol: float = ROOT_TOL):
    """``K(xi)`` alone (no derivative)."""
    return 1.0 / eval_g(law, invert_sg(law, xi, tol))


def elasticity(law: ForchheimerLaw, xi, tol: float = ROOT_TOL):
    """``K'(xi) xi / K(xi) = -s g'(s) / (g(s) + s g'(s))``, finite at ``xi = 0``."""
    s = invert_sg(law, xi, tol)
    g = eval_g(law, s)
    sdg = _sdg(law, s)
    return -sdg / (g + sdg)


def H_from_s(law: ForchheimerLaw, s):
    """Exact antiderivative of the energy density written in terms of ``s``.

    Substituting ``tau = sigma g(sigma)`` turns the integrand into
    ``2 sigma (sigma g)'``, which integrates term by term.
    """
    s = np.asarray(s, dtype=float)
    alpha = law._alpha
    return _powers(s, alpha + 2.0) @ (law._coef * 2.0 * (1.0 + alpha) / (2.0 + alpha))


def eval_H_exact(law: ForchheimerLaw, xi, tol: float = ROOT_TOL):
    """``H(xi)`` through the term-by-term antiderivative (fast path for fields)."""
    return H_from_s(law, invert_sg(law, xi, tol))


def _gl(law, left, right):
    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    tau = mid[:, None] + half[:, None] * _GL_X[None, :]
    f = 2.0 * tau * diffusivity(law, tau)
    return half * (f @ _GL_W)


def _integrate_panels(law, left, right, tol_density, max_depth=50):
    total = np.zeros(left.size)
    owner = np.arange(left.size)
    l, r = left.copy(), right.copy()
    for _ in range(max_depth):
        if l.size == 0:
            return total
        m = 0.5 * (l + r)
        coarse = _gl(law, l, r)
        fine = _gl(law, l, m) + _gl(law, m, r)
        err = np.abs(fine - coarse)
        ok = err <= np.maximum(tol_density * (r - l), 64 * np.finfo(float).eps * np.abs(fine))
        np.add.at(total, owner[ok], fine[ok])
        keep = ~ok
        owner = np.concatenate([owner[keep], owner[keep]])
        l, r = np.concatenate([l[keep], m[keep]]), np.concatenate([m[keep], r[keep]])
    raise NumericError("adaptive quadrature for H did not converge")


def eval_H(law: ForchheimerLaw, xi, quad_tol: float = QUAD_TOL):
    """``H(xi) = int_0^xi 2 tau K(tau) dtau`` by adaptive Gauss-Legendre quadrature.

    ``quad_tol`` is an absolute tolerance per unit length of the integration
    interval.  For array input the sorted values share panels, so the cost is
    one integral over ``[0, max(xi)]``.
    """
    x = _check_nonneg(xi, "xi")
    flat = x.ravel()
    pos = np.unique(flat[flat > 0])
    if pos.size == 0:
        return np.zeros_like(x)[()]
    # geometric grading below the smallest point resolves the behaviour at 0
    grade = pos[0] * np.exp2(-np.arange(40, 0, -1))
    edges = np.concatenate([[0.0], grade, pos])
    pieces = _integrate_panels(law, edges[:-1], edges[1:], quad_tol)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    out = np.zeros_like(flat)
    hit = flat > 0
    out[hit] = cum[np.searchsorted(edges, flat[hit])]
    return out.reshape(x.shape)[()]


@dataclass
class ConstitutiveReport:
    """Outcome of a pointwise scan of the constitutive inequalities."""

    xi_grid: np.ndarray
    fitted_C1: float
    fitted_C2: float
    fitted_C3: float
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_constitutive(
    law: ForchheimerLaw,
    xi_grid,
    root_tol: float = 1e-10,
    deriv_tol: float = 1e-9,
    sandwich_tol: float = 1e-8,
) -> ConstitutiveReport:
    """Scan ``xi_grid`` for violations of the structural properties of ``K`` and ``H``.

    Checked pointwise: strict decrease of ``K``, increase of ``s``, the root
    residual, ``-a <= K' xi / K <= 0`` and ``K xi^2 <= H <= 2 K xi^2``.  The
    sandwich tolerance is relative to ``max(1, K xi^2)``.  Also fits the
    envelope constants of ``K(xi) (1 + xi)^a`` and of the growth of ``K xi^2``.
    """
    xi = np.unique(_check_nonneg(xi_grid, "xi_grid").ravel())
    if xi.size == 0:
        raise DomainError("xi_grid is empty")
    a = law.a
    s = invert_sg(law, xi)
    g = eval_g(law, s)
    K = 1.0 / g
    sdg = _sdg(law, s)
    el = -sdg / (g + sdg)
    H = eval_H(law, xi)
    kx2 = K * xi**2

    violations = []

    def flag(mask, tag, resid):
        for i in np.flatnonzero(mask):
            violations.append((float(xi[i]), tag, float(resid[i])))

    flag(np.abs(s * g - xi) > root_tol * (1 + xi), "root-residual", s * g - xi)
    flag(el < -a - deriv_tol, "derivative-lower", el + a)
    flag(el > deriv_tol, "derivative-upper", el)
    scale = sandwich_tol * np.maximum(1.0, kx2)
    flag(H < kx2 - scale, "sandwich-lower", H - kx2)
    flag(H > 2 * kx2 + scale, "sandwich-upper", H - 2 * kx2)
    dK = np.diff(K)
    ds = np.diff(s)
    flag(np.concatenate([dK >= 0, [False]]), "K-decreasing", np.concatenate([dK, [0.0]]))
    flag(np.concatenate([ds <= 0, [False]]), "s-increasing", np.concatenate([ds, [0.0]]))

    env = K * (1.0 + xi) ** a
    C1, C2 = float(env.min()), float(env.max())
    big = xi > 1
    if np.any(big):
        C3 = float(np.min(kx2[big] / (xi[big] ** (2 - a) - 1.0)))
    else:
        C3 = C1 * 2.0**-a
    return ConstitutiveReport(xi, C1, C2, C3, violations)

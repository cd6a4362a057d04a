"""Derived exponents for the interior and asymptotic estimates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .constitutive import ForchheimerLaw
from .errors import DomainError, ValidationError


def sobolev_conjugate(r: float, n: int) -> float:
    """``r* = n r / (n - r)`` for ``0 < r < n``."""
    if not 0 < r < n:
        raise DomainError(f"Sobolev conjugate needs 0 < r < n, got r={r}, n={n}")
    return n * r / (n - r)


def varrho(r: float, n: int) -> float:
    """Integrability exponent ``4 (1 - 1/r*)`` of the weighted embedding."""
    return 4.0 * (1.0 - 1.0 / sobolev_conjugate(r, n))


def alpha_star(n: int, a: float) -> float:
    return a * n / (2.0 - a)


def default_s0(n: int) -> float:
    return 0.5 * (2.0 * n / (n + 2.0) + 2.0)


def default_alpha(n: int, law: ForchheimerLaw) -> float:
    return float(max(2, math.ceil(alpha_star(n, law.a)) + 1))


@dataclass(frozen=True)
class AlphaCheck:
    ok: bool
    alpha: float
    alpha_star: float
    margin: float
    reasons: tuple

    def __bool__(self):
        return self.ok


def validate_alpha(n: int, law: ForchheimerLaw, alpha: float) -> AlphaCheck:
    """Admissibility of the integrability exponent: ``alpha >= 2`` and ``alpha > alpha*``.

    ``margin`` is ``min(alpha - 2, alpha - alpha*)``; negative or zero margins
    come with the failed conditions in ``reasons``.
    """
    star = alpha_star(n, law.a)
    reasons = []
    if not alpha >= 2:
        reasons.append(f"alpha >= 2 fails (alpha={alpha})")
    if not alpha > star:
        reasons.append(f"alpha > alpha* fails (alpha={alpha}, alpha*={star})")
    return AlphaCheck(not reasons, float(alpha), star, min(alpha - 2.0, alpha - star), tuple(reasons))


@dataclass(frozen=True)
class ExponentTable:
    n: int
    a: float
    alpha_star: float
    r0: float
    alpha: float
    kappa0: float
    delta1: float
    delta2: float
    kappa1: float
    kappa2: float
    s0: float
    s0_star: float
    s1: float
    nu2: float
    nu3: float
    s2: float
    s3: float
    nu4: float
    s4: float
    kappa3: float
    kappa4: float
    kappa5: float
    kappa6: float
    kappa7: float
    kappa8: float
    kappa9: float
    kappa10: float
    kappa11: float
    kappa12: float

    def mu1(self, s: float) -> float:
        return (1.0 + 2.0 * self.kappa1 / (self.alpha - self.a)) * (s + self.a - 2.0) + 1.0

    def mu2(self, s: float) -> float:
        return 2.0 * self.kappa2 * (s - 2.0 + self.a)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["mu1(s2)"] = self.mu1(self.s2)
        d["mu2(s2)"] = self.mu2(self.s2)
        return d


def build_table(n: int, law: ForchheimerLaw, alpha: float | None = None, s0: float | None = None) -> ExponentTable:
    """Evaluate every derived exponent for dimension ``n`` and the law's degree.

    ``alpha`` defaults to ``max(2, ceil(alpha*) + 1)`` and ``s0`` to the
    midpoint of ``(2n/(n+2), 2)``.
    """
    if int(n) != n or n < 2:
        raise ValidationError(f"dimension n must be an integer >= 2, got {n}")
    n = int(n)
    a = law.a
    if alpha is None:
        alpha = default_alpha(n, law)
    if s0 is None:
        s0 = default_s0(n)
    alpha, s0 = float(alpha), float(s0)
    check = validate_alpha(n, law, alpha)
    if not check:
        raise ValidationError("; ".join(check.reasons))
    lo = 2.0 * n / (n + 2.0)
    if not lo < s0 < 2.0:
        raise ValidationError(f"2n/(n+2) < s0 < 2 fails (s0={s0}, lower bound {lo})")

    astar = check.alpha_star
    r0 = n * (2 - a) / ((2 - a) * (n + 1) - n)
    kappa0 = alpha * (1 + (2 - a) / n) - a
    delta1 = 1 - alpha / kappa0
    delta2 = (1 - a / alpha) * (1 - astar / alpha)
    kappa1, kappa2 = 1 / delta1, 1 / delta2

    s0_star = sobolev_conjugate(s0, n)
    s1 = 1 / (1 - 2 / s0_star)
    nu2 = 4 * (1 - 1 / s0_star)
    nu3 = 1 - 2 / nu2
    s2 = max(2.0, a * s0 / (2 - s0))
    s3 = s1 * (2 - s0) / s0 + 1
    nu4 = s3 - 1
    s4 = a * s3 + 1

    kappa3 = (s2 + a - 2) * (1 + 2 * kappa1 / (alpha - a))
    kappa4 = 1 + s1 + kappa3 * s3
    kappa5 = kappa2 * (s2 - 2 + a)
    kappa6 = 1 + s1 + kappa3 * (s3 - 1)
    kappa7 = (s3 - 1) * (kappa5 + 1) + 1
    kappa8 = (s3 - 1) * kappa5
    kappa9 = (s3 - 1) * (kappa5 + alpha / 2) + alpha / 2
    kappa10 = a * kappa4 + 1
    kappa11 = a * s3 * (kappa5 + alpha / 2) + alpha / 2
    kappa12 = a * s3 * kappa5 + alpha / 2

    return ExponentTable(
        n, a, astar, r0, alpha, kappa0, delta1, delta2, kappa1, kappa2,
        s0, s0_star, s1, nu2, nu3, s2, s3, nu4, s4,
        kappa3, kappa4, kappa5, kappa6, kappa7, kappa8, kappa9,
        kappa10, kappa11, kappa12,
    )


def as_fraction(x: float, max_den: int = 10000, tol: float = 1e-12) -> str:
    """Display ``x`` as ``p/q`` when a small denominator reproduces it."""
    if not math.isfinite(x):
        return repr(x)
    fr = Fraction(x).limit_denominator(max_den)
    if abs(float(fr) - x) <= tol * max(1.0, abs(x)):
        return str(fr.numerator) if fr.denominator == 1 else f"{fr.numerator}/{fr.denominator}"
    return f"{x:.17g}"


def format_table(table: ExponentTable) -> str:
    """Aligned two-column text rendering."""
    d = table.as_dict()
    width = max(len(k) for k in d)
    lines = []
    for key, val in d.items():
        val = float(val)
        lines.append(f"{key:<{width}}  {as_fraction(val):>14}  {val:.17g}")
    return "\n".join(lines)

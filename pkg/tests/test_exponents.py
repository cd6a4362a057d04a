from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from forchheimer.constitutive import ForchheimerLaw
from forchheimer.errors import DomainError, ValidationError
from forchheimer.exponents import (
    alpha_star,
    as_fraction,
    build_table,
    default_alpha,
    format_table,
    sobolev_conjugate,
    validate_alpha,
    varrho,
)

LINEAR = ForchheimerLaw.parse("1+s")

# hand-derived for n=2, g=1+s (a=1/2), alpha=2, s0=3/2
FROZEN = {
    "kappa0": F(3), "kappa1": F(3), "kappa2": F(2), "r0": F(6, 5), "s1": F(3, 2),
    "nu2": F(10, 3), "s2": F(2), "s3": F(3, 2), "s4": F(7, 4), "kappa3": F(5, 2),
    "kappa4": F(25, 4), "kappa5": F(1), "kappa6": F(15, 4), "kappa7": F(2),
    "kappa8": F(1, 2), "kappa9": F(2), "kappa10": F(33, 8), "kappa11": F(5, 2),
    "kappa12": F(7, 4), "mu1(s2)": F(7, 2), "mu2(s2)": F(2),
}


def exact_table(n, a, alpha, s0):
    """Independent rational evaluation of the exponent chain."""
    n, a, alpha, s0 = F(n), F(a), F(alpha), F(s0)
    astar = a * n / (2 - a)
    k0 = alpha * (1 + (2 - a) / n) - a
    k1 = 1 / (1 - alpha / k0)
    k2 = 1 / ((1 - a / alpha) * (1 - astar / alpha))
    s0s = n * s0 / (n - s0)
    s1 = 1 / (1 - 2 / s0s)
    s2 = max(F(2), a * s0 / (2 - s0))
    s3 = s1 * (2 - s0) / s0 + 1
    k3 = (s2 + a - 2) * (1 + 2 * k1 / (alpha - a))
    k4 = 1 + s1 + k3 * s3
    k5 = k2 * (s2 - 2 + a)
    return {
        "r0": n * (2 - a) / ((2 - a) * (n + 1) - n),
        "kappa0": k0, "kappa1": k1, "kappa2": k2, "s1": s1, "nu2": 4 * (1 - 1 / s0s),
        "s2": s2, "s3": s3, "s4": a * s3 + 1, "kappa3": k3, "kappa4": k4, "kappa5": k5,
        "kappa6": 1 + s1 + k3 * (s3 - 1), "kappa7": (s3 - 1) * (k5 + 1) + 1,
        "kappa8": (s3 - 1) * k5, "kappa9": (s3 - 1) * (k5 + alpha / 2) + alpha / 2,
        "kappa10": a * k4 + 1, "kappa11": a * s3 * (k5 + alpha / 2) + alpha / 2,
        "kappa12": a * s3 * k5 + alpha / 2,
        "mu1(s2)": (1 + 2 * k1 / (alpha - a)) * (s2 + a - 2) + 1,
        "mu2(s2)": 2 * k2 * (s2 - 2 + a),
    }


def test_frozen_table():
    d = build_table(2, LINEAR, alpha=2, s0=1.5).as_dict()
    for key, val in FROZEN.items():
        assert abs(d[key] - float(val)) <= 1e-12, key


def test_exact_oracle_reproduces_frozen_values():
    assert exact_table(2, F(1, 2), 2, F(3, 2)) == FROZEN


@given(
    st.sampled_from([2, 3]),
    st.sampled_from([F(1, 2), F(2, 3), F(1, 3), F(3, 4)]),
    st.integers(2, 8),
    st.integers(1, 9),
)
def test_table_matches_rational_oracle(n, a, alpha, k):
    lo = F(2 * n, n + 2)
    s0 = lo + (2 - lo) * F(k, 10)
    degree = a / (1 - a)
    law = ForchheimerLaw((0, float(degree)), (1, 1))
    if not alpha > a * n / (2 - a):
        with pytest.raises(ValidationError):
            build_table(n, law, alpha, float(s0))
        return
    d = build_table(n, law, alpha, float(s0)).as_dict()
    for key, val in exact_table(n, a, alpha, s0).items():
        assert d[key] == pytest.approx(float(val), rel=1e-11), key


@given(st.sampled_from([2, 3]), st.floats(2.0, 20.0))
def test_chain_identities(n, alpha):
    t = build_table(n, LINEAR, alpha)
    assert t.mu1(t.s2) == pytest.approx(t.kappa3 + 1, rel=1e-12)
    assert t.mu2(t.s2) == pytest.approx(2 * t.kappa5, rel=1e-12)
    assert t.kappa0 > alpha
    for name in ("kappa1", "kappa2", "s1", "s3", "s4", "kappa4", "kappa9", "kappa11"):
        assert getattr(t, name) > 0


def test_sobolev_helpers():
    assert sobolev_conjugate(1.5, 2) == 6
    assert varrho(1.5, 2) == pytest.approx(10 / 3)
    assert alpha_star(2, 0.5) == pytest.approx(2 / 3)
    with pytest.raises(DomainError):
        sobolev_conjugate(2, 2)


def test_validate_alpha_reports_reasons():
    chk = validate_alpha(2, LINEAR, 1.5)
    assert not chk and "alpha >= 2" in chk.reasons[0]
    heavy = ForchheimerLaw((0, 9), (1, 1))
    chk = validate_alpha(3, heavy, 2.0)
    assert not chk and any("alpha*" in r for r in chk.reasons)
    assert validate_alpha(2, LINEAR, 2.0)


def test_build_table_errors():
    with pytest.raises(ValidationError, match="alpha >= 2"):
        build_table(2, LINEAR, alpha=1.0)
    with pytest.raises(ValidationError, match="s0"):
        build_table(2, LINEAR, alpha=2, s0=1.0)
    with pytest.raises(ValidationError):
        build_table(1, LINEAR)


def test_defaults_and_three_dimensions():
    assert default_alpha(2, LINEAR) == 2.0
    t = build_table(3, LINEAR)
    assert t.n == 3 and t.alpha >= 2 and t.s0 == pytest.approx(1.6)


def test_format_table_shows_fractions():
    text = format_table(build_table(2, LINEAR, 2, 1.5))
    assert "25/4" in text and "10/3" in text
    assert as_fraction(0.1 + 0.2) == "3/10"
    assert as_fraction(2 ** 0.5).startswith("1.41421356")

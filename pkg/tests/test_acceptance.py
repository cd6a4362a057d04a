"""Acceptance criteria, one test each, at the stated tolerances.

Every test records one PASS/FAIL line that is printed in the terminal
summary (and immediately, under ``-s``).
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from forchheimer.boundary import Manufactured, make_boundary
from forchheimer.constitutive import ForchheimerLaw, eval_H, eval_K, verify_constitutive
from forchheimer.exponents import build_table
from forchheimer.grid import Grid
from forchheimer.harness import (
    check_degiorgi_sufficiency,
    check_parabolic_sobolev,
    default_family,
    manufactured_family,
    memory_loss_probe,
    run_sweep,
)
from forchheimer.scenario import Scenario
from forchheimer.solver import convergence_study, solve_ibvp

LINEAR = ForchheimerLaw.parse("1+s")
QUADRATIC = ForchheimerLaw.parse("1+s+s^2")


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_constitutive_exactness():
    xi = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 9999)])
    assert xi.size == 10_000
    t0 = time.perf_counter()
    reports = {str(law): verify_constitutive(law, xi, root_tol=1e-10, deriv_tol=1e-9, sandwich_tol=1e-8) for law in (LINEAR, QUADRATIC)}
    elapsed = time.perf_counter() - t0
    bad = {k: len(r.violations) for k, r in reports.items()}
    ok = all(r.ok for r in reports.values()) and elapsed < 5.0
    report(1, "constitutive exactness", ok, f"violations={bad} runtime={elapsed:.2f}s")
    assert ok


def test_criterion_2_closed_form_anchors():
    K, dK = eval_K(LINEAR, 2.0)
    H = eval_H(LINEAR, 2.0)
    errs = (abs(float(K) - 0.5), abs(float(H) - 7 / 3), abs(float(dK) + 1 / 12))
    ok = errs[0] <= 1e-12 and errs[1] <= 1e-8 and errs[2] <= 1e-9
    report(2, "closed-form anchors", ok, "errors K={:.1e} H={:.1e} K'={:.1e}".format(*errs))
    assert ok


EXPECTED_TABLE = {
    "kappa0": 3, "kappa1": 3, "kappa2": 2, "r0": 6 / 5, "s1": 3 / 2, "nu2": 10 / 3, "s2": 2,
    "s3": 3 / 2, "s4": 7 / 4, "kappa3": 5 / 2, "kappa4": 25 / 4, "kappa5": 1, "kappa6": 15 / 4,
    "kappa7": 2, "kappa8": 1 / 2, "kappa9": 2, "kappa10": 33 / 8, "kappa11": 5 / 2,
    "kappa12": 7 / 4, "mu1(s2)": 7 / 2, "mu2(s2)": 2,
}


def test_criterion_3_exponent_table():
    t0 = time.perf_counter()
    table = build_table(2, LINEAR, 2.0, 1.5)
    d = table.as_dict()
    elapsed = time.perf_counter() - t0
    errs = {k: abs(d[k] - v) for k, v in EXPECTED_TABLE.items()}
    worst = max(errs, key=errs.get)
    ok = errs[worst] <= 1e-12 and elapsed < 1.0
    report(3, "exponent table", ok, f"max error {errs[worst]:.1e} ({worst}) runtime={elapsed:.3f}s")
    assert ok


def test_criterion_4_parabolic_sobolev_invariances():
    table = build_table(2, LINEAR, 2.0, 1.5)
    t0 = time.perf_counter()
    checks = []
    for cells in (32, 64):
        grid = Grid(2, cells)
        times, u = manufactured_family(grid)
        _, ch = check_parabolic_sobolev(
            grid, times, u, table, LINEAR, amplitudes=(0.1, 10.0), radii=(0.5, 2.0), amp_tol=1e-10, dil_tol=1e-8
        )
        checks += ch
    elapsed = time.perf_counter() - t0
    ok = all(c.ok for c in checks) and elapsed < 30.0
    detail = ", ".join(f"{c.name}={c.value:.1e}" for c in checks)
    report(4, "parabolic Sobolev invariances", ok, f"{detail} runtime={elapsed:.2f}s")
    assert ok


def test_criterion_5_fast_geometric_sufficiency():
    t0 = time.perf_counter()
    chk = check_degiorgi_sufficiency(trials=100, seed=0, fraction=0.9, steps=50)
    elapsed = time.perf_counter() - t0
    ok = chk.ok and elapsed < 1.0
    report(5, "fast-geometric sufficiency", ok, f"{chk.detail}, worst Y50/max(Y0,1)={chk.value:.1e} runtime={elapsed:.3f}s")
    assert ok


def test_criterion_6_solver_correctness():
    t0 = time.perf_counter()
    steady = 0.0
    for preset, amp in (("constant", 2.5), ("linear", 3.0)):
        sc = Scenario(law=LINEAR, grid=Grid(2, 32), boundary=make_boundary(preset, amp), T=0.1, dt=0.001, stride=100)
        traj = solve_ibvp(sc)
        assert sc.steps == 100
        steady = max(steady, float(np.max(np.abs(traj.values[-1] - traj.values[0]))))
    base = Scenario(
        law=LINEAR, grid=Grid(2, 16), boundary=make_boundary("zero"), T=0.0625, manufactured=Manufactured(1.0)
    )
    rows = convergence_study(base, levels=(16, 32, 64), dt_factor=1.0)
    order = min(r[4] for r in rows[1:])
    sc = Scenario(
        law=LINEAR, grid=Grid(2, 32), boundary=make_boundary("zero"), T=0.5, dt=0.005, initial="bump", initial_amplitude=3.0
    )
    energy = np.array(solve_ibvp(sc).diagnostics["energy"])
    increases = int(np.sum(np.diff(energy) > 0))
    elapsed = time.perf_counter() - t0
    ok = steady <= 1e-10 and order >= 1.7 and increases == 0 and elapsed < 180.0
    report(
        6, "solver correctness", ok,
        f"steady drift={steady:.1e} order={order:.3f} energy increases={increases} runtime={elapsed:.1f}s",
    )
    assert ok


@pytest.fixture(scope="module")
def default_sweep():
    t0 = time.perf_counter()
    rep = run_sweep(default_family())
    return rep, time.perf_counter() - t0


def test_criterion_7_witness_ratio_suite(default_sweep):
    rep, elapsed = default_sweep
    agg = {k: v for k, v in rep.aggregates().items() if v["asserted"]}
    nonfinite = [k for k, v in agg.items() if not v["finite"]]
    refine = {k: v["refinement"] for k, v in agg.items() if v["refinement"] is not None}
    spread = {k: v["spread"] for k, v in agg.items() if v["spread"] is not None}
    bad_refine = sorted(k for k, f in refine.items() if not f < 1.25)
    bad_spread = sorted(k for k, f in spread.items() if not f < 10.0)
    worst_refine = max(refine.values())
    worst_spread = max(spread, key=spread.get)
    exact_bad = [c.name for c in rep.exact_checks if not c.ok]
    ok = (
        not rep.failures and not exact_bad and not nonfinite and not bad_refine and not bad_spread
        and len(agg) > 0 and elapsed < 600.0
    )
    detail = (
        f"{len(agg)} estimates, {len(rep.records)} records, scenario failures={len(rep.failures)}, "
        f"non-finite={nonfinite}, exact-check failures={len(exact_bad)}, "
        f"max refinement={worst_refine:.4f} (over 1.25: {len(bad_refine)}), "
        f"spread over 10x: {len(bad_spread)}/{len(spread)} (worst {worst_spread} {spread[worst_spread]:.3g}), "
        f"runtime={elapsed:.0f}s"
    )
    report(7, "witness-ratio suite", ok, detail)
    if bad_spread:
        ACCEPTANCE_LINES.append("    spread >= 10x: " + ", ".join(f"{k}={spread[k]:.3g}" for k in bad_spread))
    assert ok


def test_criterion_8_memory_loss():
    base = default_family(presets=("periodic",), amplitudes=(1.0,), cells=(32,), T=10.0)[0]
    t0 = time.perf_counter()
    out = memory_loss_probe(base, bump_amplitude=1.0)
    elapsed = time.perf_counter() - t0
    rel = out["relative_difference"]
    ok = max(rel.values()) < 0.05 and elapsed < 120.0 and all(math.isfinite(v) for v in out["zero"].values())
    report(8, "asymptotic memory loss", ok, ", ".join(f"{k}={v:.1e}" for k, v in rel.items()) + f" runtime={elapsed:.1f}s")
    assert ok

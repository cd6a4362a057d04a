"""CSV and JSON writers with fixed formatting.

CSV floats use 17 significant digits.  JSON floats use Python's shortest
round-trip representation; non-finite values become the strings ``"inf"``,
``"-inf"`` and ``"nan"`` so the output stays valid JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .constitutive import ForchheimerLaw, eval_H, eval_K, invert_sg
from .functionals import DataFunctionalTrace
from .grid import Trajectory

RECORD_COLUMNS = (
    "estimate_id", "scenario_id", "lhs", "rhs", "ratio", "asserted",
    "preset", "amplitude", "cells", "t", "T0", "T", "theta", "s",
)


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows), encoding="utf-8", newline="")
    return path


def jsonable(obj):
    """Recursively convert numpy scalars, tuples and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def json_text(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json_text(obj), encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def kfun_rows(law: ForchheimerLaw, xi) -> list:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    s = invert_sg(law, xi)
    K, dK = eval_K(law, xi)
    H = eval_H(law, xi)
    return [tuple(float(v) for v in row) for row in zip(xi, s, K, dK, H)]


KFUN_HEADER = ("xi", "s", "K", "dK", "H")


def trajectory_rows(traj: Trajectory):
    """Long format ``(t, x1[, x2], p)``, one row per node and snapshot."""
    ax = traj.grid.axis
    for k, t in enumerate(traj.times):
        v = traj.values[k]
        if traj.grid.dim == 1:
            for i, x in enumerate(ax):
                yield (float(t), float(x), float(v[i]))
        else:
            for i, x in enumerate(ax):
                for j, y in enumerate(ax):
                    yield (float(t), float(x), float(y), float(v[i, j]))


def trajectory_header(dim: int) -> tuple:
    return ("t", "x1", "p") if dim == 1 else ("t", "x1", "x2", "p")


TRACE_HEADER = ("t", "A", "EnvA", "G1", "G2", "G3", "G4")


def trace_rows(trace: DataFunctionalTrace):
    return list(trace.rows())


def record_rows(records):
    for r in records:
        p = r.params
        yield (
            r.estimate_id, r.scenario_id, r.lhs, r.rhs, r.ratio, r.asserted,
            p.get("preset"), p.get("amplitude"), p.get("cells"), p.get("t"),
            p.get("T0"), p.get("T"), p.get("theta"), p.get("s"),
        )


def solve_metadata(scenario, traj: Trajectory) -> dict:
    d = traj.diagnostics
    iters = d.get("picard_iterations", [])
    return {
        "scenario": scenario.to_dict(),
        "snapshots": len(traj),
        "steps": d.get("steps"),
        "dt": d.get("dt"),
        "picard": {
            "total_iterations": int(sum(iters)),
            "max_iterations": int(max(iters)) if iters else 0,
            "mean_iterations": float(np.mean(iters)) if iters else 0.0,
            "flagged_steps": list(d.get("flagged_steps", [])),
        },
        "final_energy": d.get("energy", [None])[-1],
    }

"""Scenario description and its JSON form."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .boundary import BoundaryData, Manufactured, bump, make_boundary
from .constitutive import ForchheimerLaw
from .errors import ValidationError
from .exponents import ExponentTable, build_table
from .grid import Grid

INITIAL_KINDS = ("boundary", "zero", "bump", "constant", "manufactured")
DEFAULT_RHO = 0.1875

_TOP_KEYS = {
    "id", "law", "grid", "time", "data", "initial", "manufactured",
    "interior", "exponents", "picard", "estimates", "tail",
}


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to run one solve and evaluate estimates on it.

    ``initial`` selects ``p0``: ``"boundary"`` uses ``Psi(., 0)``, ``"bump"``
    adds ``initial_amplitude * prod sin(pi x_i)`` to it, ``"zero"`` and
    ``"constant"`` are uniform fields, ``"manufactured"`` is the exact
    solution at ``t = 0``.  Boundary nodes of ``p0`` are always set to
    ``Psi(., 0)``.
    """

    law: ForchheimerLaw
    grid: Grid
    boundary: BoundaryData
    T: float
    dt: float | None = None
    stride: int = 1
    rho: float = DEFAULT_RHO
    initial: str = "boundary"
    initial_amplitude: float = 1.0
    manufactured: Manufactured | None = None
    picard_tol: float = 1e-8
    picard_max_iter: int = 50
    alpha: float | None = None
    s0: float | None = None
    tail_window: float | None = None
    estimates: tuple | None = None
    scenario_id: str = "scenario"

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValidationError("horizon T must be positive")
        dt = self.dt
        if dt is None:
            dt = self.T / math.ceil(self.T / self.grid.h**2 - 1e-9)
        if not dt > 0:
            raise ValidationError("dt must be positive")
        steps = self.T / dt
        if abs(steps - round(steps)) > 1e-8 * max(1.0, steps):
            raise ValidationError(f"T={self.T} is not an integer multiple of dt={dt}")
        object.__setattr__(self, "dt", float(dt))
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValidationError("stride must be a positive integer")
        if not 0 < self.rho < 0.25:
            raise ValidationError(f"rho must lie in (0, 1/4), got {self.rho}")
        if self.manufactured is not None and self.initial == "boundary":
            object.__setattr__(self, "initial", "manufactured")
        if self.initial not in INITIAL_KINDS:
            raise ValidationError(f"initial kind must be one of {INITIAL_KINDS}")
        if self.initial == "manufactured" and self.manufactured is None:
            raise ValidationError("initial kind 'manufactured' needs a manufactured solution")
        if self.manufactured is not None and not self.boundary.is_zero:
            raise ValidationError("manufactured solutions vanish on the boundary; use zero data")
        if not self.picard_tol > 0 or self.picard_max_iter < 1:
            raise ValidationError("Picard tolerance and cap must be positive")
        if self.tail_window is not None and not 0 < self.tail_window <= self.T:
            raise ValidationError("tail window must lie in (0, T]")
        up, v = self.box_inner, self.box_middle
        if not (v[0].start < up[0].start and up[0].stop < v[0].stop):
            raise ValidationError("interior sets need U' strictly inside V; refine the grid or enlarge rho")
        if v[0].start < 1:
            raise ValidationError("V must stay away from the boundary")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def n(self) -> int:
        """Dimension used in the exponent formulas (at least 2)."""
        return max(self.grid.dim, 2)

    @property
    def box_inner(self) -> tuple:
        """Nodes of U': distance >= rho from the boundary."""
        return self.grid.box(self.rho)

    @property
    def box_middle(self) -> tuple:
        """Nodes of V: distance >= rho/2 from the boundary."""
        return self.grid.box(0.5 * self.rho)

    @cached_property
    def table(self) -> ExponentTable:
        return build_table(self.n, self.law, self.alpha, self.s0)

    @property
    def tail(self) -> float:
        return self.tail_window if self.tail_window is not None else 0.25 * self.T

    def initial_field(self) -> np.ndarray:
        X = self.grid.mesh()
        shape = self.grid.shape
        psi0 = self.boundary.on_grid(self.grid, 0.0)
        if self.initial == "boundary":
            p0 = psi0.copy()
        elif self.initial == "zero":
            p0 = np.zeros(shape)
        elif self.initial == "constant":
            p0 = np.full(shape, self.initial_amplitude)
        elif self.initial == "bump":
            p0 = psi0 + self.initial_amplitude * np.broadcast_to(bump(X), shape)
        else:
            p0 = np.broadcast_to(self.manufactured.value(X, 0.0), shape).astype(float)
        mask = self.grid.boundary_mask()
        p0 = np.array(p0, dtype=float)
        p0[mask] = psi0[mask]
        return p0

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "id": self.scenario_id,
            "law": {"exponents": list(self.law.exponents), "coefficients": list(self.law.coefficients)},
            "grid": self.grid.as_dict(),
            "time": {"T": self.T, "dt": self.dt, "stride": self.stride},
            "data": self.boundary.as_dict(),
            "initial": {"kind": self.initial, "amplitude": self.initial_amplitude},
            "manufactured": None if self.manufactured is None else self.manufactured.as_dict(),
            "interior": {"rho": self.rho},
            "exponents": {"alpha": self.alpha, "s0": self.s0},
            "picard": {"tol": self.picard_tol, "max_iter": self.picard_max_iter},
            "estimates": None if self.estimates is None else list(self.estimates),
            "tail": {"window": self.tail_window},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ValidationError("scenario config must be a JSON object")
        unknown = set(d) - _TOP_KEYS
        if unknown:
            raise ValidationError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            law_d = d.get("law", {"exponents": [0, 1], "coefficients": [1, 1]})
            if isinstance(law_d, str):
                law = ForchheimerLaw.parse(law_d)
            else:
                law = ForchheimerLaw(tuple(law_d["exponents"]), tuple(law_d["coefficients"]))
            gd = d.get("grid", {})
            grid = Grid(int(gd.get("dim", 2)), int(gd.get("cells", 32)), float(gd.get("length", 1.0)))
            td = d.get("time", {})
            dd = d.get("data", {})
            boundary = make_boundary(dd.get("preset", "zero"), float(dd.get("amplitude", 1.0)), dd.get("params"))
            idd = d.get("initial") or {}
            md = d.get("manufactured")
            manufactured = None
            if md:
                if isinstance(md, str):
                    md = {"name": md}
                if md.get("name", Manufactured.name) != Manufactured.name:
                    raise ValidationError(f"unknown manufactured solution {md.get('name')!r}")
                manufactured = Manufactured(float(md.get("amplitude", 1.0)))
            ed = d.get("exponents") or {}
            pd = d.get("picard") or {}
            est = d.get("estimates")
            if est is not None and not isinstance(est, list):
                raise ValidationError("estimates must be a list of ids")
            tail = (d.get("tail") or {}).get("window")
            return cls(
                law=law,
                grid=grid,
                boundary=boundary,
                T=float(td.get("T", 1.0)),
                dt=None if td.get("dt") is None else float(td["dt"]),
                stride=int(td.get("stride", 1)),
                rho=float((d.get("interior") or {}).get("rho", DEFAULT_RHO)),
                initial=idd.get("kind", "manufactured" if manufactured else "boundary"),
                initial_amplitude=float(idd.get("amplitude", 1.0)),
                manufactured=manufactured,
                picard_tol=float(pd.get("tol", 1e-8)),
                picard_max_iter=int(pd.get("max_iter", 50)),
                alpha=None if ed.get("alpha") is None else float(ed["alpha"]),
                s0=None if ed.get("s0") is None else float(ed["s0"]),
                tail_window=None if tail is None else float(tail),
                estimates=None if est is None else tuple(str(e) for e in est),
                scenario_id=str(d.get("id", "scenario")),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed scenario config: {exc}") from exc

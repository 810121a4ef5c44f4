"""Scenario configuration: built-in examples and JSON scenario files.

A scenario file is one JSON document::

    {
      "name": "my-system",
      "snapshot": {"f0": [0, 0], "g0": [[1, 0], [0, 1]], "lf": 1, "lg": 1},
      "true_dynamics": {"builtin": "academic3d"}            # or
      "true_dynamics": {"polynomial": {"n": 2, "m": 2,
                        "f": [[[coef, [e1, e2]], ...], ...],   # per state entry
                        "g": [[[[coef, [e1, e2]], ...], ...], ...]}},  # per (i, j)
      "x0": [0, 0],
      "reach": {"horizon": 0.25, "n_trajectories": 1000, ...},
      "targets": [{"point": [-15, -10], "dims": [0, 1], "horizon": 0.25}]
    }

Polynomial terms are ``[coefficient, [exponent per state]]``; an entry is the
sum of its terms. ``true_dynamics`` and ``targets`` are optional.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gvs import DynamicsSnapshot
from .reach import ReachConfig, TrueDynamics

CONSISTENCY_TOL = 1e-9


class ScenarioError(ValueError):
    """Invalid scenario source; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if field:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


# -- polynomial dynamics ------------------------------------------------------

Term = tuple  # (coefficient, exponents)


def _eval_entry(terms, x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape[0])
    for coef, exps in terms:
        mono = np.full(x.shape[0], float(coef))
        for j, e in enumerate(exps):
            if e:
                mono = mono * x[:, j] ** int(e)
        out = out + mono
    return out


@dataclass(frozen=True)
class PolynomialDynamics:
    n: int
    m: int
    f_terms: tuple
    g_terms: tuple

    @classmethod
    def from_dict(cls, d: dict, where: str = "true_dynamics.polynomial") -> "PolynomialDynamics":
        try:
            n, m = int(d["n"]), int(d["m"])
            f = d["f"]
            g = d["g"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed polynomial dynamics: {exc}", where) from exc
        if len(f) != n:
            raise ScenarioError(f"expected {n} drift entries, got {len(f)}", f"{where}.f")
        if len(g) != n or any(len(row) != m for row in g):
            raise ScenarioError(f"input matrix must be {n}x{m}", f"{where}.g")

        def terms(entry, name):
            out = []
            for t in entry:
                if len(t) != 2 or len(t[1]) != n:
                    raise ScenarioError(f"term {t!r} must be [coef, [{n} exponents]]", name)
                out.append((float(t[0]), tuple(int(e) for e in t[1])))
            return tuple(out)

        return cls(
            n, m,
            tuple(terms(e, f"{where}.f[{i}]") for i, e in enumerate(f)),
            tuple(tuple(terms(e, f"{where}.g[{i}][{j}]") for j, e in enumerate(row)) for i, row in enumerate(g)),
        )

    def to_dict(self) -> dict:
        t = lambda entry: [[c, list(e)] for c, e in entry]
        return {
            "n": self.n,
            "m": self.m,
            "f": [t(e) for e in self.f_terms],
            "g": [[t(e) for e in row] for row in self.g_terms],
        }

    def f(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.stack([_eval_entry(e, x) for e in self.f_terms], axis=1)

    def g(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.stack([np.stack([_eval_entry(e, x) for e in row], axis=1) for row in self.g_terms], axis=1)

    def to_true_dynamics(self, name: str = "truth") -> TrueDynamics:
        return TrueDynamics(self.n, self.m, self.f, self.g, name)


# -- built-ins ------------------------------------------------------------------

# Inertias chosen so that f(0) and G(0) match the nominal scenario values; see README.
QUAD_JX = 0.009
QUAD_JY = 0.009
QUAD_JZ = 0.014
QUAD_P0 = 15.0
QUAD_Q0 = 10.0
QUAD_R0 = math.pi / 2


def _academic_polynomial() -> PolynomialDynamics:
    z3 = [0, 0, 0]
    c = lambda v: [v, z3]
    return PolynomialDynamics.from_dict({
        "n": 3, "m": 3,
        "f": [[], [], []],
        "g": [
            [[c(10.0)], [c(3.0), [-1.0, [0, 1, 0]]], []],
            [[c(2.0), [-1.0, [1, 0, 0]]], [c(7.0)], []],
            [[], [], [c(2.5), [1.0, [0, 0, 1]]]],
        ],
    })


def _quadrocopter_polynomial() -> PolynomialDynamics:
    # shifted coordinates pbar = p - p0, qbar = q - q0, yaw rate held at r0
    a = QUAD_R0 * (QUAD_JY - QUAD_JZ) / QUAD_JX
    b = QUAD_R0 * (QUAD_JZ - QUAD_JX) / QUAD_JY
    return PolynomialDynamics.from_dict({
        "n": 2, "m": 2,
        "f": [
            [[a * QUAD_Q0, [0, 0]], [a, [0, 1]]],
            [[b * QUAD_P0, [0, 0]], [b, [1, 0]]],
        ],
        "g": [
            [[[1.0 / QUAD_JX, [0, 0]]], []],
            [[], [[1.0 / QUAD_JY, [0, 0]]]],
        ],
    })


BUILTIN_DYNAMICS = {
    "academic3d": _academic_polynomial,
    "quadrocopter": _quadrocopter_polynomial,
}


@dataclass(frozen=True)
class Target:
    point: tuple
    dims: tuple = (0, 1)
    horizon: float | None = None

    def to_dict(self) -> dict:
        return {"point": list(self.point), "dims": list(self.dims), "horizon": self.horizon}


@dataclass(eq=False)
class ScenarioConfig:
    name: str
    snapshot: DynamicsSnapshot
    true_dynamics: dict | None = None
    x0: np.ndarray | None = None
    reach: ReachConfig = field(default_factory=ReachConfig)
    targets: list = field(default_factory=list)

    def __post_init__(self):
        n = self.snapshot.n
        self.x0 = np.zeros(n) if self.x0 is None else np.asarray(self.x0, dtype=np.float64).reshape(-1)
        if self.x0.shape != (n,):
            raise ScenarioError(f"x0 must have {n} entries", "x0")
        for i, t in enumerate(self.targets):
            if len(t.point) != len(t.dims) or any(d < 0 or d >= n for d in t.dims):
                raise ScenarioError("target point/dims mismatch", f"targets[{i}]")
        if self.true_dynamics is not None:
            self._check_truth()

    def _check_truth(self):
        poly = self.polynomial()
        if (poly.n, poly.m) != (self.snapshot.n, self.snapshot.m):
            raise ScenarioError(
                f"true dynamics are {poly.n}x{poly.m}, snapshot is {self.snapshot.n}x{self.snapshot.m}",
                "true_dynamics",
            )
        z = np.zeros((1, poly.n))
        if not np.allclose(poly.f(z)[0], self.snapshot.f0, rtol=0, atol=CONSISTENCY_TOL):
            raise ScenarioError("true f(0) does not match snapshot f0", "snapshot.f0")
        if not np.allclose(poly.g(z)[0], self.snapshot.g0, rtol=0, atol=CONSISTENCY_TOL):
            raise ScenarioError("true G(0) does not match snapshot g0", "snapshot.g0")

    def polynomial(self) -> PolynomialDynamics | None:
        td = self.true_dynamics
        if td is None:
            return None
        if "builtin" in td:
            key = td["builtin"]
            if key not in BUILTIN_DYNAMICS:
                raise ScenarioError(f"unknown builtin dynamics {key!r}", "true_dynamics.builtin")
            return BUILTIN_DYNAMICS[key]()
        if "polynomial" in td:
            return PolynomialDynamics.from_dict(td["polynomial"])
        raise ScenarioError("true_dynamics needs 'builtin' or 'polynomial'", "true_dynamics")

    def truth(self) -> TrueDynamics | None:
        poly = self.polynomial()
        return None if poly is None else poly.to_true_dynamics()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "snapshot": self.snapshot.to_dict(),
            "true_dynamics": self.true_dynamics,
            "x0": self.x0.tolist(),
            "reach": self.reach.to_dict(),
            "targets": [t.to_dict() for t in self.targets],
        }

    def __eq__(self, other):
        if not isinstance(other, ScenarioConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _academic() -> ScenarioConfig:
    snap = DynamicsSnapshot(
        f0=np.zeros(3),
        g0=np.array([[10.0, 3.0, 0.0], [2.0, 7.0, 0.0], [0.0, 0.0, 2.5]]),
        lf=1.0, lg=1.0,
    )
    return ScenarioConfig(
        "academic3d", snap, {"builtin": "academic3d"},
        reach=ReachConfig(horizon=0.2, n_trajectories=1000),
    )


def _quadrocopter() -> ScenarioConfig:
    poly = _quadrocopter_polynomial()
    z = np.zeros((1, 2))
    snap = DynamicsSnapshot(f0=poly.f(z)[0], g0=poly.g(z)[0], lf=1.0, lg=1.0)
    return ScenarioConfig(
        "quadrocopter", snap, {"builtin": "quadrocopter"},
        reach=ReachConfig(horizon=0.25, n_trajectories=1000),
        targets=[Target((-QUAD_P0, -QUAD_Q0), (0, 1), 0.25)],
    )


BUILTINS = {"academic3d": _academic, "quadrocopter": _quadrocopter}


def builtin(name: str) -> ScenarioConfig:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise ScenarioError(f"unknown builtin scenario {name!r}; choose from {sorted(BUILTINS)}") from None


def from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    try:
        snap_doc = doc["snapshot"]
    except KeyError:
        raise ScenarioError("missing snapshot", "snapshot") from None
    try:
        snap = DynamicsSnapshot(
            f0=np.asarray(snap_doc["f0"], dtype=np.float64),
            g0=np.asarray(snap_doc["g0"], dtype=np.float64),
            lf=snap_doc["lf"],
            lg=snap_doc["lg"],
        )
    except KeyError as exc:
        raise ScenarioError(f"missing {exc.args[0]}", f"snapshot.{exc.args[0]}") from None
    except ValueError as exc:
        msg = str(exc)
        fld = next((f"snapshot.{k}" for k in ("lf", "lg", "f0", "g0") if msg.startswith(k)), "snapshot")
        raise ScenarioError(msg, fld) from None
    try:
        reach = ReachConfig(**doc.get("reach", {}))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), "reach") from None
    targets = []
    for i, t in enumerate(doc.get("targets", [])):
        try:
            targets.append(Target(tuple(float(v) for v in t["point"]),
                                  tuple(int(v) for v in t.get("dims", (0, 1))),
                                  t.get("horizon")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed target: {exc}", f"targets[{i}]") from None
    return ScenarioConfig(
        name=str(doc.get("name", "scenario")),
        snapshot=snap,
        true_dynamics=doc.get("true_dynamics"),
        x0=doc.get("x0"),
        reach=reach,
        targets=targets,
    )


def load_scenario(source: str | Path) -> ScenarioConfig:
    """Load a built-in scenario by id or a scenario JSON file by path."""
    if isinstance(source, str) and source in BUILTINS:
        return builtin(source)
    path = Path(source)
    if not path.exists():
        raise ScenarioError(f"no builtin or file named {str(source)!r}")
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return from_dict(doc)


def save_scenario(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")

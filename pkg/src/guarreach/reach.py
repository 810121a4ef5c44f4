"""Monte Carlo estimation of reachable sets.

Trajectories are driven by random piecewise-constant admissible inputs. Each
trajectory draws its inputs from its own stream seeded by
``(seed, trajectory index)`` and trajectories are integrated in fixed blocks,
so results do not depend on the number of worker threads.

Input law (``"mixed"``, the default): each trajectory picks an anchor input on
the boundary of the admissible set and a weight ``w ~ U[0, 1]``; the input
held over interval k is ``(1 - w) * anchor + w * fresh_k`` with ``fresh_k``
uniform in the admissible set. Nearly constant extremal inputs are what push
trajectories to the edge of the reachable set, purely i.i.d. inputs average
out. ``"iid"`` uses ``fresh_k`` alone and ``"zero"`` holds u = 0.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import hull as hullmod
from .integrate import RK4, IntegratorError, IntegratorSettings, hold_boundaries, integrate_batch
from .surrogate import SurrogateSystem, ball_inputs, greedy_steer, sample_inputs

BLOCK = 512
INPUT_LAWS = ("mixed", "iid", "zero")


@dataclass(frozen=True)
class ReachConfig:
    horizon: float = 1.0
    n_trajectories: int = 1000
    dt: float = 1e-3
    input_hold: float | None = None
    seed: int = 0
    collect_intermediate: bool = True
    integrator: str = RK4
    atol: float = 1e-9
    rtol: float = 1e-6
    input_law: str = "mixed"

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be at least 1")
        if self.input_law not in INPUT_LAWS:
            raise ValueError(f"input_law must be one of {INPUT_LAWS}")
        hold = self.hold
        top = self.horizon * (1 + 1e-12)
        if not (0 < self.dt <= top and 0 < self.effective_dt <= hold <= top):
            raise ValueError(
                f"need 0 < dt <= input_hold <= horizon (dt={self.dt}, hold={hold}, T={self.horizon})"
            )
        IntegratorSettings(self.integrator, self.dt, self.atol, self.rtol)

    @property
    def hold(self) -> float:
        """Input hold length; defaults to T/20 but never below one step."""
        if self.input_hold is not None:
            return float(self.input_hold)
        return min(self.horizon, max(self.horizon / 20.0, self.dt))

    @property
    def effective_dt(self) -> float:
        if self.input_hold is None:
            return min(self.dt, self.hold)
        return self.dt

    def settings(self) -> IntegratorSettings:
        return IntegratorSettings(self.integrator, self.effective_dt, self.atol, self.rtol)

    def replace(self, **kw) -> "ReachConfig":
        d = asdict(self)
        d.update(kw)
        return ReachConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class TrueDynamics:
    """Ground-truth dynamics x' = f(x) + G(x) u with ||u|| <= 1.

    ``f`` maps (N, n) -> (N, n) and ``g`` maps (N, n) -> (N, n, m).
    """

    n: int
    m: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    name: str = "truth"

    @property
    def input_dim(self) -> int:
        return self.m

    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.f(x) + np.sum(self.g(x) * u[:, None, :], axis=-1)

    def velocity(self, x, u) -> np.ndarray:
        x2 = np.atleast_2d(np.asarray(x, dtype=np.float64))
        u2 = np.atleast_2d(np.asarray(u, dtype=np.float64))
        v = self.rhs(x2, u2)
        return v[0] if np.ndim(x) == 1 else v


@dataclass(eq=False)
class ReachCloud:
    """Sampled reachable-set points ``(times[i], states[i])``."""

    times: np.ndarray
    states: np.ndarray
    horizon: float
    system: str
    seed: int
    source: object = field(default=None, repr=False)
    x0: np.ndarray | None = None

    @property
    def points(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.times.tolist(), self.states))

    def endpoints(self) -> np.ndarray:
        return self.states[self.times >= self.horizon]

    def __len__(self) -> int:
        return len(self.times)


def _trajectory_inputs(sys, seed: int, index: int, k: int, law: str) -> np.ndarray:
    dim = sys.input_dim
    if law == "zero":
        return np.zeros((k, dim))
    rng = np.random.default_rng([seed, index])
    if isinstance(sys, SurrogateSystem):
        draw = lambda size, surface: sample_inputs(sys, rng, size, surface)
    else:
        draw = lambda size, surface: ball_inputs(rng, dim, size, surface)
    if law == "iid":
        return draw(k, False)
    anchor = draw(1, True)[0]
    w = rng.uniform()
    return (1.0 - w) * anchor + w * draw(k, False)


def _run_block(sys, x0, cfg: ReachConfig, lo: int, hi: int):
    edges = hold_boundaries(cfg.horizon, cfg.hold)
    k = len(edges) - 1
    inputs = np.stack([_trajectory_inputs(sys, cfg.seed, i, k, cfg.input_law) for i in range(lo, hi)])
    xs = np.repeat(np.asarray(x0, dtype=np.float64)[None, :], hi - lo, axis=0)
    frames: list[tuple[float, np.ndarray]] = []
    rec = (lambda t, x: frames.append((t, x.copy()))) if cfg.collect_intermediate else None
    try:
        xf = integrate_batch(sys.rhs, xs, inputs, cfg.hold, cfg.horizon, cfg.settings(), on_boundary=rec)
    except IntegratorError as exc:
        idx = lo + (exc.index or 0)
        raise IntegratorError(f"trajectory {idx}: {exc}", exc.t, idx) from exc
    if not cfg.collect_intermediate:
        frames = [(cfg.horizon, xf)]
    # trajectory-major order: all frames of trajectory lo, then lo + 1, ...
    t = np.array([f[0] for f in frames])
    st = np.stack([f[1] for f in frames], axis=1)  # (rows, frames, n)
    return np.tile(t, hi - lo), st.reshape(-1, st.shape[-1])


def monte_carlo_reach(sys, x0, cfg: ReachConfig, workers: int = 1) -> ReachCloud:
    """Sample the reachable set of ``sys`` (a surrogate or :class:`TrueDynamics`)
    from ``x0`` over ``[0, cfg.horizon]``."""
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
    if x0.shape[0] != sys.n:
        raise ValueError(f"x0 has dimension {x0.shape[0]}, system has {sys.n}")
    blocks = [(lo, min(lo + BLOCK, cfg.n_trajectories)) for lo in range(0, cfg.n_trajectories, BLOCK)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _run_block(sys, x0, cfg, *b), blocks))
    else:
        parts = [_run_block(sys, x0, cfg, *b) for b in blocks]
    times = np.concatenate([p[0] for p in parts])
    states = np.concatenate([p[1] for p in parts])
    name = sys.name if hasattr(sys, "name") else type(sys).__name__
    return ReachCloud(times, states, cfg.horizon, name, cfg.seed, source=sys, x0=x0)


def project(cloud: ReachCloud, dims=(0, 1)) -> np.ndarray:
    dims = tuple(int(d) for d in dims)
    n = cloud.states.shape[1] if cloud.states.ndim == 2 else 0
    for d in dims:
        if d < 0 or (len(cloud) and d >= n):
            raise ValueError(f"dimension index {d} out of range for n={n}")
    if len(cloud) == 0:
        return np.zeros((0, len(dims)))
    return cloud.states[:, list(dims)]


def cloud_hull(cloud: ReachCloud, dims=(0, 1)) -> np.ndarray:
    return hullmod.hull2d(project(cloud, dims))


@dataclass
class Containment:
    in_hull: bool
    certified_by_steering: bool | None
    reach_time: float | None


def contains(cloud: ReachCloud, target, dims=(0, 1), *, steer_dt: float = 1e-4, tol: float = 1e-9) -> Containment:
    """Is ``target`` (given in the ``dims`` coordinates) in the sampled set?

    ``in_hull`` is the statistical answer from the cloud. When the cloud came
    from a surrogate and ``dims`` covers the whole state, greedy steering is
    attempted; success certifies guaranteed reachability.
    """
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    if target.shape[0] != len(dims):
        raise ValueError("target dimension does not match dims")
    in_hull = hullmod.point_in_hull(cloud_hull(cloud, dims), target, tol)
    cert, when = None, None
    sys = cloud.source
    if isinstance(sys, SurrogateSystem) and sorted(dims) == list(range(sys.n)):
        full = np.zeros(sys.n)
        full[list(dims)] = target
        res = greedy_steer(sys, full, cloud.horizon, min(steer_dt, cloud.horizon), x0=cloud.x0)
        cert = res.reached
        when = res.time if res.reached else None
    return Containment(in_hull, cert, when)


# -- serialization ------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def cloud_to_csv(cloud: ReachCloud) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = cloud.states.shape[1] if len(cloud) else 0
    w.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
    for t, x in zip(cloud.times, cloud.states):
        w.writerow([_fmt(t)] + [_fmt(v) for v in x])
    return buf.getvalue()


def cloud_to_json(cloud: ReachCloud, meta: dict | None = None) -> str:
    doc = {
        "meta": {"system": cloud.system, "horizon": cloud.horizon, "seed": cloud.seed, **(meta or {})},
        "points": [{"t": float(t), "x": x.tolist()} for t, x in zip(cloud.times, cloud.states)],
    }
    return json.dumps(doc)


def cloud_from_json(text: str) -> ReachCloud:
    doc = json.loads(text)
    pts = doc["points"]
    times = np.array([p["t"] for p in pts], dtype=np.float64)
    states = np.array([p["x"] for p in pts], dtype=np.float64).reshape(len(pts), -1)
    meta = doc["meta"]
    return ReachCloud(times, states, float(meta["horizon"]), meta["system"], int(meta["seed"]))


def hull_to_csv(vertices: np.ndarray, labels=("x", "y")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(labels))
    for v in vertices:
        w.writerow([_fmt(c) for c in v])
    return buf.getvalue()


def trajectory_to_csv(times, states) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(np.shape(states)[1])])
    for t, x in zip(times, states):
        w.writerow([_fmt(t)] + [_fmt(v) for v in x])
    return buf.getvalue()


def extent_along(points: np.ndarray, direction) -> float:
    """Largest projection of ``points`` on ``direction``."""
    d = np.asarray(direction, dtype=np.float64)
    return float(np.max(points @ (d / math.sqrt(float(d @ d)))))

"""Known control systems whose trajectories are guaranteed for the unknown one.

``Ball``:    x' = f(0) + g(||x||) u,               u in the unit ball of Im(G(0))
``Polygon``: x' = f(0) + U diag(lambda(||x||)) u,  ||u||_1 <= 1, u_i = 0 for i > rank

Inputs are n-vectors in both cases. Outside the validity radius both gains
vanish and the velocity reduces to f(0).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import gvs, linalg
from .gvs import DynamicsSnapshot, GvsGeometry

ADMISSIBLE_TOL = 1e-12


class Kind(str, enum.Enum):
    BALL = "ball"
    POLYGON = "polygon"


def row_norms(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


def _combine(mat: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Row-wise ``mat @ coef[i]`` without BLAS so each row is computed the
    same way regardless of batch size."""
    return np.sum(mat[None, :, :] * coef[:, None, :], axis=-1)


@dataclass(frozen=True, eq=False)
class SurrogateSystem:
    kind: Kind
    snap: DynamicsSnapshot
    geom: GvsGeometry = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.geom is None:
            object.__setattr__(self, "geom", gvs.geometry(self.snap))

    @property
    def n(self) -> int:
        return self.snap.n

    @property
    def input_dim(self) -> int:
        return self.snap.n

    @property
    def name(self) -> str:
        return self.kind.value

    # -- velocity ---------------------------------------------------------

    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Batched velocity for rows of ``x`` and ``u``; no admissibility check."""
        s = row_norms(x)
        if self.kind is Kind.BALL:
            g = gvs.ball_radius(self.geom, self.snap, s)
            return self.snap.f0 + np.asarray(g)[:, None] * u
        lam = gvs.lambda_gains(self.geom, self.snap, s)
        return self.snap.f0 + _combine(self.geom.svd.u, lam * u)

    def velocity(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        single = x.ndim == 1
        x2, u2 = np.atleast_2d(x), np.atleast_2d(u)
        for row in u2:
            check_admissible(self, row)
        v = self.rhs(x2, u2)
        return v[0] if single else v


def check_admissible(sys: SurrogateSystem, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if u.shape != (sys.n,):
        raise ValueError(f"input must have shape ({sys.n},), got {u.shape}")
    if sys.kind is Kind.BALL:
        if linalg.two_norm(u) > 1.0 + ADMISSIBLE_TOL:
            raise ValueError("ball input must satisfy ||u|| <= 1")
        if not linalg.in_image(sys.geom.svd, u, gvs.IMAGE_TOL):
            raise ValueError("ball input must lie in Im(G(0))")
    else:
        if linalg.one_norm(u) > 1.0 + ADMISSIBLE_TOL:
            raise ValueError("polygon input must satisfy ||u||_1 <= 1")
        if np.any(u[sys.geom.rank:] != 0.0):
            raise ValueError("polygon input must vanish beyond the rank")
    return u


# -- input sampling ---------------------------------------------------------

def _unit_ball(rng, dim: int, size: int, surface: bool) -> np.ndarray:
    z = rng.standard_normal((size, dim))
    z /= row_norms(z)[:, None]
    if not surface:
        z *= rng.uniform(0.0, 1.0, size)[:, None] ** (1.0 / dim)
    return z


def _cross_polytope(rng, dim: int, size: int, surface: bool) -> np.ndarray:
    # uniform on the simplex from normalized exponential spacings; the
    # extra coordinate is the slack that puts the point inside
    e = rng.exponential(1.0, (size, dim if surface else dim + 1))
    y = (e / e.sum(axis=1, keepdims=True))[:, :dim]
    signs = rng.choice(np.array([-1.0, 1.0]), size=(size, dim))
    return y * signs


def ball_inputs(rng, dim: int, size: int, surface: bool = False) -> np.ndarray:
    """Uniform samples in (or on) the unit 2-norm ball of R^dim."""
    return _unit_ball(rng, dim, size, surface)


def sample_inputs(sys: SurrogateSystem, rng, size: int, surface: bool = False) -> np.ndarray:
    """``size`` admissible inputs for ``sys``; uniform in the admissible set,
    or on its boundary when ``surface`` is set."""
    r = sys.geom.rank
    out = np.zeros((size, sys.n))
    if sys.kind is Kind.BALL:
        c = _unit_ball(rng, r, size, surface)
        out[:] = _combine(sys.geom.u_r, c)
    else:
        out[:, :r] = _cross_polytope(rng, r, size, surface)
    return out


def sample_input(sys: SurrogateSystem, rng=None) -> np.ndarray:
    return sample_inputs(sys, np.random.default_rng(rng), 1)[0]


# -- greedy steering ----------------------------------------------------------

@dataclass
class SteerResult:
    reached: bool
    time: float
    times: np.ndarray
    states: np.ndarray
    distance: float

    @property
    def trajectory(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.times.tolist(), self.states))


def greedy_input(sys: SurrogateSystem, x: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Admissible input pushing hardest toward ``target`` from ``x``."""
    d = target - x
    dn = linalg.two_norm(d)
    u = np.zeros(sys.n)
    if dn == 0.0:
        return u
    d = d / dn
    if sys.kind is Kind.BALL:
        p = sys.geom.u_r @ (sys.geom.u_r.T @ d)
        pn = linalg.two_norm(p)
        if pn > 1e-12:
            u = p / pn
        return u
    lam = gvs.lambda_gains(sys.geom, sys.snap, linalg.two_norm(x))
    score = lam * (sys.geom.svd.u.T @ d)
    i = int(np.argmax(np.abs(score)))
    if score[i] != 0.0:
        u[i] = math.copysign(1.0, score[i])
    return u


def _rk4_step(sys, x, u, h):
    f = lambda y: sys.rhs(y[None, :], u[None, :])[0]
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def greedy_steer(sys: SurrogateSystem, target, horizon: float, dt: float = 1e-4, x0=None) -> SteerResult:
    """Steer ``sys`` toward ``target`` with the direction-maximizing input.

    The input is recomputed at every step and held over it (RK4). Steps are
    shortened when the target is closer than one step of travel, so the
    approach is not limited by ``dt``. Reaching the target is a certificate of
    guaranteed reachability at the returned time; failing is not a proof of
    the opposite.
    """
    if dt <= 0 or horizon < dt:
        raise ValueError("need dt > 0 and horizon >= dt")
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    x = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(-1).copy()
    tol = 1e-3 * max(1.0, linalg.two_norm(target))
    t = 0.0
    times, states = [t], [x.copy()]
    h_min = dt * 1e-6
    max_iter = int(math.ceil(horizon / dt)) * 4 + 10_000
    dist = linalg.two_norm(target - x)
    for _ in range(max_iter):
        if dist <= tol:
            return SteerResult(True, t, np.array(times), np.array(states), dist)
        if t >= horizon:
            break
        u = greedy_input(sys, x, target)
        speed = linalg.two_norm(sys.rhs(x[None, :], u[None, :])[0])
        h = min(dt, horizon - t)
        if speed > 0.0:
            h = min(h, max(dist / speed, h_min))
        x = _rk4_step(sys, x, u, h)
        t = min(t + h, horizon) if horizon - (t + h) < 1e-15 else t + h
        times.append(t)
        states.append(x.copy())
        dist = linalg.two_norm(target - x)
    reached = dist <= tol
    return SteerResult(reached, t, np.array(times), np.array(states), dist)

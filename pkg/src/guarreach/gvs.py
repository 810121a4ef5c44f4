"""Guaranteed velocity set underapproximations.

Given the dynamics at the origin, f(0) and G(0), and Lipschitz bounds on f
and G, every consistent system can realize at state x at least

* the ball of radius ``||G(0)^+||^-1 - (L_f + L_G)||x||`` about f(0) inside
  Im(G(0)) (:func:`ball_radius`), and
* the star-shaped set ``{f(0) + k d : 0 <= k <= K(d)}`` whose reach depends on
  the direction ``d`` (:func:`k_of_d`).

The polygon surrogate uses the larger of the two reaches along each left
singular vector of G(0) (:func:`lambda_gains`).
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import linalg
from .linalg import DegenerateMatrixError, Svd

log = logging.getLogger(__name__)

IMAGE_TOL = 1e-9
UNIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DynamicsSnapshot:
    """What is known about the unknown system.

    Attributes:
        f0: drift at the origin, shape (n,).
        g0: input matrix at the origin, shape (n, m).
        lf: Lipschitz bound of f, strictly positive.
        lg: Lipschitz bound of G (spectral norm), strictly positive.
    """

    f0: np.ndarray
    g0: np.ndarray
    lf: float
    lg: float

    def __post_init__(self):
        f0 = np.array(self.f0, dtype=np.float64).reshape(-1)
        g0 = linalg.as_matrix(self.g0)
        if not np.all(np.isfinite(f0)):
            raise ValueError("f0 has non-finite entries")
        if g0.shape[0] != f0.shape[0]:
            raise ValueError(f"g0 has {g0.shape[0]} rows but f0 has {f0.shape[0]} entries")
        if not np.any(g0):
            raise DegenerateMatrixError("g0 must be nonzero")
        for name in ("lf", "lg"):
            val = float(getattr(self, name))
            if not math.isfinite(val) or val <= 0.0:
                raise ValueError(f"{name} must be a finite positive number, got {val}")
            object.__setattr__(self, name, val)
        f0.setflags(write=False)
        g0.setflags(write=False)
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "g0", g0)

    @property
    def n(self) -> int:
        return self.g0.shape[0]

    @property
    def m(self) -> int:
        return self.g0.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DynamicsSnapshot):
            return NotImplemented
        return (
            np.array_equal(self.f0, other.f0)
            and np.array_equal(self.g0, other.g0)
            and self.lf == other.lf
            and self.lg == other.lg
        )

    def to_dict(self) -> dict:
        return {
            "f0": self.f0.tolist(),
            "g0": self.g0.tolist(),
            "lf": self.lf,
            "lg": self.lg,
        }


@dataclass(frozen=True, eq=False)
class GvsGeometry:
    svd: Svd
    sigma_r_inv_norm: float
    mu: float
    rank: int
    lemma1_radius: float
    validity_radius: float
    pinv: np.ndarray

    @property
    def pinv_norm(self) -> float:
        """||G(0)^+||."""
        return 1.0 / self.sigma_r_inv_norm

    @property
    def u_r(self) -> np.ndarray:
        return self.svd.u_r

    def pinv_dir_norms(self) -> np.ndarray:
        """||G(0)^+ eta_i|| = 1/sigma_i for the first ``rank`` singular vectors."""
        return 1.0 / self.svd.sigma[: self.rank]


def geometry(snap: DynamicsSnapshot, tol_rank: float = linalg.DEFAULT_TOL_RANK) -> GvsGeometry:
    s = linalg.svd(snap.g0, tol_rank)
    if s.rank == 0:
        raise DegenerateMatrixError("g0 is numerically zero")
    sr = linalg.smallest_nonzero_sv(s)
    return GvsGeometry(
        svd=s,
        sigma_r_inv_norm=sr,
        mu=linalg.mu_constant(s.rank, snap.n, snap.m),
        rank=s.rank,
        lemma1_radius=sr / snap.lg,
        validity_radius=sr / (snap.lf + snap.lg),
        pinv=linalg.pinv(s),
    )


def ball_radius(geom: GvsGeometry, snap: DynamicsSnapshot, x_norm):
    """Radius of the guaranteed ball at states with norm ``x_norm``.

    Zero at and beyond the validity radius. Accepts scalars or arrays.
    """
    s = np.asarray(x_norm, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("x_norm must be nonnegative")
    r = np.maximum(0.0, geom.sigma_r_inv_norm - (snap.lf + snap.lg) * s)
    r = np.where(s >= geom.validity_radius, 0.0, r)  # exact zero despite rounding
    return float(r) if r.ndim == 0 else r


def _check_direction(geom: GvsGeometry, d) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    if abs(linalg.two_norm(d) - 1.0) > UNIT_TOL:
        raise ValueError("direction must have unit norm")
    if not linalg.in_image(geom.svd, d, IMAGE_TOL):
        raise ValueError("direction must lie in Im(G(0))")
    return d


def k_denominator(geom: GvsGeometry, snap: DynamicsSnapshot, x_norm: float, pinv_d_norm: float) -> float:
    return pinv_d_norm * (geom.sigma_r_inv_norm - snap.lg * x_norm) + geom.mu * geom.pinv_norm * snap.lg * x_norm


def k_of_d(geom: GvsGeometry, snap: DynamicsSnapshot, x_norm: float, d) -> float:
    """Reach K(d) of the advanced set along unit direction ``d``."""
    d = _check_direction(geom, d)
    if x_norm < 0:
        raise ValueError("x_norm must be nonnegative")
    if x_norm >= geom.validity_radius:
        return 0.0
    num = geom.sigma_r_inv_norm - (snap.lg + snap.lf) * x_norm
    den = k_denominator(geom, snap, x_norm, linalg.two_norm(geom.pinv @ d))
    if den <= 1e-300:
        # cannot happen for d in the image; kept as a guard
        log.warning("K(d) denominator %.3e is not positive; returning 0", den)
        return 0.0
    return max(0.0, num / den)


def lambda_gains(geom: GvsGeometry, snap: DynamicsSnapshot, s) -> np.ndarray:
    """Polygon vertex gains along the left singular vectors.

    ``s`` may be a scalar (returns shape (n,)) or an array of norms (returns
    shape s.shape + (n,)). Gains beyond the rank are zero.
    """
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    n, r = snap.n, geom.rank
    sv = geom.sigma_r_inv_norm
    g = sv - (snap.lg + snap.lf) * s
    alpha = sv - snap.lg * s
    beta = geom.mu * geom.pinv_norm * snap.lg * s
    inside = s < geom.validity_radius
    # alpha > 0 inside the validity ball, so the denominator is positive there
    den = np.where(inside, alpha, 1.0)[..., None] * geom.pinv_dir_norms() + beta[..., None]
    adv = np.where(inside[..., None], g[..., None] / den, 0.0)
    lam = np.zeros(s.shape + (n,))
    lam[..., :r] = np.where(inside[..., None], np.maximum(np.maximum(adv, g[..., None]), 0.0), 0.0)
    return lam


def default_plane(geom: GvsGeometry, dims=(0, 1)) -> np.ndarray:
    """Two orthonormal image directions: coordinate axes if they lie in the
    image, otherwise the two leading left singular vectors."""
    n = geom.svd.shape[0]
    axes = np.eye(n)[list(dims)]
    if all(linalg.in_image(geom.svd, a, IMAGE_TOL) for a in axes):
        return axes
    if geom.rank < 2:
        raise ValueError("image of G(0) is one-dimensional; no plane to draw in")
    return geom.svd.u[:, :2].T.copy()


@dataclass(frozen=True)
class Polylines:
    theta: np.ndarray
    ball: np.ndarray
    advanced: np.ndarray
    k_values: np.ndarray


def boundary_polyline(geom: GvsGeometry, snap: DynamicsSnapshot, x_norm: float, plane, segments: int = 256) -> Polylines:
    """Boundaries of the ball set and the advanced set in a 2-D image plane.

    Points are expressed in the coordinates of ``plane`` (rows p1, p2):
    ``(<v, p1>, <v, p2>)`` for each boundary velocity v.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.shape != (2, snap.n):
        raise ValueError(f"plane must have shape (2, {snap.n})")
    if not np.allclose(plane @ plane.T, np.eye(2), atol=1e-9):
        raise ValueError("plane vectors must be orthonormal")
    for p in plane:
        if not linalg.in_image(geom.svd, p, IMAGE_TOL):
            raise ValueError("plane vectors must lie in Im(G(0))")
    if segments < 8:
        raise ValueError("segments must be at least 8")
    theta = np.arange(segments) * (2.0 * math.pi / segments)
    if x_norm > geom.validity_radius:
        empty = np.zeros((0, 2))
        return Polylines(np.zeros(0), empty, empty, np.zeros(0))
    center = plane @ snap.f0
    circ = np.column_stack([np.cos(theta), np.sin(theta)])
    r = ball_radius(geom, snap, x_norm)
    ks = np.array([k_of_d(geom, snap, x_norm, c @ plane) for c in circ])
    return Polylines(theta, center + r * circ, center + ks[:, None] * circ, ks)


def write_polyline_csv(path, theta, points) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "x", "y"])
        for t, (x, y) in zip(theta, points):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


def gain_table(geom: GvsGeometry, snap: DynamicsSnapshot, num: int = 101) -> dict:
    """Ball gain and polygon gains on a uniform grid over [0, validity_radius]."""
    s = np.linspace(0.0, geom.validity_radius, num)
    lam = lambda_gains(geom, snap, s)[:, : geom.rank]
    return {
        "s": s.tolist(),
        "ball": np.asarray(ball_radius(geom, snap, s)).tolist(),
        "lambda": lam.tolist(),
        "validity_radius": geom.validity_radius,
        "mu": geom.mu,
    }


def write_gain_table(path, table: dict) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(table, indent=2) + "\n")
        return
    lam = table["lambda"]
    r = len(lam[0]) if lam else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "ball"] + [f"lambda_{i + 1}" for i in range(r)])
        for s, b, row in zip(table["s"], table["ball"], lam):
            w.writerow([repr(s), repr(b)] + [repr(v) for v in row])


# --------------------------------------------------------------------------
# consistent-dynamics oracle

@dataclass(frozen=True, eq=False)
class ConsistentSample:
    """Values (f_hat(x), G_hat(x)) of one system consistent with the snapshot."""

    f_hat: np.ndarray
    g_hat: np.ndarray
    x: np.ndarray


def sample_consistent(snap: DynamicsSnapshot, geom: GvsGeometry, x, rng=None, *, boundary: bool = False) -> ConsistentSample:
    """Draw f_hat(x), G_hat(x) from the family allowed by the snapshot.

    Perturbations are confined to Im(G(0)) through its left singular basis.
    With ``boundary=True`` both perturbations have the maximal allowed norm.
    """
    rng = np.random.default_rng(rng)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    xn = linalg.two_norm(x)
    if xn >= geom.lemma1_radius:
        raise ValueError("state lies outside the image-preserving radius")
    ur = geom.u_r
    r = geom.rank
    w = rng.standard_normal(r)
    w /= np.linalg.norm(w)
    e = rng.standard_normal((r, snap.m))
    theta_f, theta_g = (1.0, 1.0) if boundary else rng.uniform(0.0, 1.0, 2)
    df = ur @ w
    dg = ur @ e
    dg /= linalg.spectral_norm(dg)
    return ConsistentSample(
        f_hat=snap.f0 + snap.lf * xn * theta_f * df,
        g_hat=snap.g0 + snap.lg * xn * theta_g * dg,
        x=x,
    )


def gvs_member(sample: ConsistentSample, v, *, resid_tol: float = 1e-7, norm_tol: float = 1e-9) -> bool:
    """True when the sampled system reaches velocity ``v`` with ||u|| <= 1."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    w = v - sample.f_hat
    s = linalg.svd(sample.g_hat)
    gp = linalg.pinv(s)
    u = gp @ w
    resid = sample.g_hat @ u - w
    if linalg.two_norm(resid) > resid_tol * max(1.0, linalg.two_norm(v)):
        return False
    return linalg.two_norm(u) <= 1.0 + norm_tol

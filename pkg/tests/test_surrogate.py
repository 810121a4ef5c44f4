import math

import numpy as np
import pytest

from guarreach import gvs
from guarreach.gvs import DynamicsSnapshot
from guarreach.integrate import IntegratorSettings, integrate_batch
from guarreach.surrogate import (Kind, SurrogateSystem, check_admissible, greedy_input, greedy_steer,
                                 sample_input, sample_inputs)

from helpers import random_snapshot

QUAD = DynamicsSnapshot(f0=[-8.72664626, 13.08996939], g0=np.diag([111.111, 111.111]), lf=1.0, lg=1.0)
ACADEMIC = DynamicsSnapshot(f0=np.zeros(3), g0=[[10, 3, 0], [2, 7, 0], [0, 0, 2.5]], lf=1.0, lg=1.0)
RANK1 = DynamicsSnapshot(f0=[0.2, 0.0], g0=[[1.0, 0.0], [0.0, 0.0]], lf=1.0, lg=1.0)


def test_ball_velocity_example():
    sys = SurrogateSystem(Kind.BALL, QUAD)
    v = sys.velocity([3.0, 4.0], [0.6, 0.8])
    np.testing.assert_allclose(v, QUAD.f0 + (111.111 - 10.0) * np.array([0.6, 0.8]), rtol=1e-12)
    np.testing.assert_array_equal(sys.velocity([0.0, 0.0], [0.0, 0.0]), QUAD.f0)


def test_polygon_velocity_example():
    sys = SurrogateSystem("polygon", ACADEMIC)
    g = sys.geom
    v = sys.velocity(np.zeros(3), [0.0, -1.0, 0.0])
    np.testing.assert_allclose(v, -g.svd.sigma[1] * g.svd.u[:, 1], atol=1e-12)


def test_velocity_beyond_validity_is_drift():
    for kind in Kind:
        sys = SurrogateSystem(kind, QUAD)
        np.testing.assert_array_equal(sys.velocity([60.0, 0.0], [1.0, 0.0]), QUAD.f0)


@pytest.mark.parametrize("kind, u", [
    ("ball", [1.0, 0.1]),
    ("ball", [0.0, 0.5]),   # outside Im(G0) for the rank-1 snapshot
    ("polygon", [0.7, 0.4]),
    ("polygon", [0.0, 0.1]),  # beyond rank
])
def test_inadmissible_inputs_raise(kind, u):
    sys = SurrogateSystem(kind, RANK1)
    with pytest.raises(ValueError):
        sys.velocity([0.0, 0.0], u)


def test_wrong_input_shape_raises():
    with pytest.raises(ValueError):
        check_admissible(SurrogateSystem("ball", QUAD), [1.0, 0.0, 0.0])


def test_ball_samples_uniform_volume_ratio():
    # uniform in the r-ball: P(||u|| <= 1/2) = 0.5^r
    sys = SurrogateSystem("ball", ACADEMIC)
    u = sample_inputs(sys, np.random.default_rng(0), 100_000)
    nrm = np.linalg.norm(u, axis=1)
    assert nrm.max() <= 1 + 1e-12
    p = 0.5 ** 3
    sd = math.sqrt(p * (1 - p) / len(u))
    assert abs(np.mean(nrm <= 0.5) - p) <= 3 * sd


def test_polygon_samples():
    sys = SurrogateSystem("polygon", ACADEMIC)
    u = sample_inputs(sys, np.random.default_rng(1), 100_000)
    l1 = np.abs(u).sum(axis=1)
    assert l1.max() <= 1 + 1e-12
    # uniform in the 3-dim cross-polytope: P(||u||_1 <= 1/2) = 0.5^3
    p = 0.125
    assert abs(np.mean(l1 <= 0.5) - p) <= 3 * math.sqrt(p * (1 - p) / len(u))
    surf = sample_inputs(sys, np.random.default_rng(1), 1000, surface=True)
    np.testing.assert_allclose(np.abs(surf).sum(axis=1), 1.0, rtol=1e-12)


def test_rank1_samples_respect_support():
    rng = np.random.default_rng(2)
    ub = sample_inputs(SurrogateSystem("ball", RANK1), rng, 1000)
    up = sample_inputs(SurrogateSystem("polygon", RANK1), rng, 1000)
    assert np.all(ub[:, 1] == 0.0) and np.all(up[:, 1] == 0.0)
    for u in ub[:20]:
        check_admissible(SurrogateSystem("ball", RANK1), u)
    assert sample_input(SurrogateSystem("ball", RANK1), 3).shape == (2,)


def test_greedy_input_is_admissible():
    rng = np.random.default_rng(4)
    for _ in range(200):
        snap, _ = random_snapshot(rng)
        for kind in Kind:
            sys = SurrogateSystem(kind, snap)
            u = greedy_input(sys, rng.standard_normal(snap.n) * 0.01, rng.standard_normal(snap.n))
            check_admissible(sys, u)


def test_steer_to_start_takes_zero_time():
    sys = SurrogateSystem("ball", QUAD)
    res = greedy_steer(sys, [1.0, 2.0], 0.1, x0=[1.0, 2.0])
    assert res.reached and res.time == 0.0


def test_quadrocopter_steering():
    sys = SurrogateSystem("ball", QUAD)
    ok = greedy_steer(sys, [-15.0, -10.0], 0.25)
    assert ok.reached and ok.time <= 0.25
    assert np.linalg.norm(ok.states[-1] - [-15.0, -10.0]) <= 1e-3 * math.hypot(15, 10)
    assert np.all(np.diff(ok.times) > 0)
    short = greedy_steer(sys, [-15.0, -10.0], 0.05)
    assert not short.reached


def test_steer_argument_checks():
    with pytest.raises(ValueError):
        greedy_steer(SurrogateSystem("ball", QUAD), [0.0, 0.0], 0.01, dt=0.1)


def test_surrogate_velocities_are_guaranteed():
    # along sampled trajectories inside the validity radius every velocity
    # is realized by every consistent dynamics drawn at that state
    rng = np.random.default_rng(12)
    for _ in range(40):
        snap, geom = random_snapshot(rng)
        for kind in Kind:
            sys = SurrogateSystem(kind, snap)
            x0 = np.zeros((16, snap.n))
            u = sample_inputs(sys, rng, 16 * 4).reshape(16, 4, snap.n)
            horizon = 0.3 * geom.validity_radius / max(1.0, np.linalg.norm(snap.f0) + geom.svd.sigma[0])
            states = []
            integrate_batch(sys.rhs, x0, u, horizon / 4, horizon, IntegratorSettings(dt=horizon / 40),
                            on_step=lambda t, x: states.append(x.copy()))
            for k, xs in enumerate(states[::7]):
                for i in range(0, 16, 5):
                    x = xs[i]
                    if np.linalg.norm(x) >= geom.validity_radius:
                        continue
                    ui = u[i, min(3, k * 7 // 10)]
                    v = sys.rhs(x[None], ui[None])[0]
                    smp = gvs.sample_consistent(snap, geom, x, rng, boundary=True)
                    assert gvs.gvs_member(smp, v)


def _random_rotation(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def test_ball_rotation_equivariance():
    rng = np.random.default_rng(13)
    snap = DynamicsSnapshot(f0=np.zeros(3), g0=[[10, 3, 0], [2, 7, 0], [0, 0, 2.5]], lf=1, lg=1)
    sys = SurrogateSystem("ball", snap)
    R = _random_rotation(rng, 3)
    x0 = rng.standard_normal((8, 3)) * 0.1
    u = sample_inputs(sys, rng, 8 * 5).reshape(8, 5, 3)
    s = IntegratorSettings(dt=1e-3)
    xa = integrate_batch(sys.rhs, x0, u, 0.04, 0.2, s)
    xb = integrate_batch(sys.rhs, x0 @ R.T, u @ R.T, 0.04, 0.2, s)
    np.testing.assert_allclose(xb, xa @ R.T, atol=1e-9)


def test_quadrocopter_polygon_inside_ball_velocity_set():
    # both gains coincide when G0 is a multiple of the identity
    rng = np.random.default_rng(14)
    ball, poly = SurrogateSystem("ball", QUAD), SurrogateSystem("polygon", QUAD)
    for _ in range(500):
        x = rng.standard_normal(2) * rng.uniform(0, 60)
        vp = poly.rhs(x[None], sample_inputs(poly, rng, 1))[0]
        r = gvs.ball_radius(ball.geom, QUAD, np.linalg.norm(x))
        assert np.linalg.norm(vp - QUAD.f0) <= r * (1 + 1e-12) + 1e-12

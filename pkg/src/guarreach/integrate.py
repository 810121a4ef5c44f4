"""Fixed-step RK4 and adaptive Runge-Kutta-Fehlberg 4(5) integration of
batched dynamics under piecewise-constant inputs.

A right-hand side is any callable ``rhs(x, u)`` mapping arrays of shape
(N, n) and (N, k) to (N, n). Every row is advanced with arithmetic that does
not depend on the other rows, so splitting a batch never changes results.
Inputs are held over intervals of length ``hold`` and no step crosses a hold
boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RK4 = "rk4"
RKF45 = "rkf45"


class IntegratorError(RuntimeError):
    def __init__(self, message: str, t: float | None = None, index: int | None = None):
        super().__init__(message)
        self.t = t
        self.index = index


@dataclass(frozen=True)
class IntegratorSettings:
    method: str = RK4
    dt: float = 1e-3
    atol: float = 1e-9
    rtol: float = 1e-6

    def __post_init__(self):
        if self.method not in (RK4, RKF45):
            raise ValueError(f"unknown integrator {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


def hold_boundaries(horizon: float, hold: float) -> np.ndarray:
    """Times 0 = t_0 < t_1 < ... < t_K = horizon of the input switches."""
    k = max(1, int(math.ceil(horizon / hold - 1e-9)))
    edges = np.minimum(np.arange(k + 1) * hold, horizon)
    edges[-1] = horizon
    return edges


def rk4_step(rhs, x, u, h):
    k1 = rhs(x, u)
    k2 = rhs(x + (0.5 * h) * k1, u)
    k3 = rhs(x + (0.5 * h) * k2, u)
    k4 = rhs(x + h * k3, u)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_segment(rhs, x, u, duration, dt, record=None, t0=0.0):
    nsteps = int(math.floor(duration / dt + 1e-9))
    t = 0.0
    for _ in range(nsteps):
        x = rk4_step(rhs, x, u, dt)
        t += dt
        if record is not None:
            record(t0 + t, x)
    rest = duration - nsteps * dt
    if rest > 1e-12 * max(1.0, duration):
        x = rk4_step(rhs, x, u, rest)
        if record is not None:
            record(t0 + duration, x)
    return x


# Fehlberg tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)


def rkf45_step(rhs, x, u, h):
    """One embedded step; returns (5th order solution, error estimate norms).

    ``h`` has shape (N,)."""
    hc = h[:, None]
    ks = []
    for i in range(6):
        y = x
        for a, k in zip(_A[i], ks):
            y = y + hc * (a * k)
        ks.append(rhs(y, u))
    x4 = x
    x5 = x
    for b4, b5, k in zip(_B4, _B5, ks):
        x4 = x4 + hc * (b4 * k)
        x5 = x5 + hc * (b5 * k)
    with np.errstate(over="ignore", invalid="ignore"):
        err = np.sqrt(np.sum((x5 - x4) ** 2, axis=1))
    return x5, np.where(np.isnan(err), np.inf, err)


def _rkf45_segment(rhs, x, u, duration, h0, hmin, hmax, atol, rtol, t0=0.0, record=None):
    n_rows = x.shape[0]
    x = x.copy()
    t = np.zeros(n_rows)
    h = np.full(n_rows, min(h0, hmax))
    end_tol = 1e-12 * max(1.0, duration)
    active = np.arange(n_rows)
    while active.size:
        xa, ua = x[active], u[active]
        remaining = duration - t[active]
        ha = np.minimum(h[active], remaining)
        xn, err = rkf45_step(rhs, xa, ua, ha)
        tol = atol + rtol * np.sqrt(np.sum(xa * xa, axis=1))
        ok = err <= tol
        if not np.all(np.isfinite(xn[ok])):
            bad = active[ok][~np.all(np.isfinite(xn[ok]), axis=1)][0]
            raise IntegratorError("non-finite state", t0 + float(t[bad]), int(bad))
        failed = (~ok) & (ha <= hmin * (1 + 1e-12))
        if np.any(failed):
            i = active[failed][0]
            raise IntegratorError(
                f"step size underflow at t={t0 + t[i]:.6g}", t0 + float(t[i]), int(i)
            )
        with np.errstate(divide="ignore"):
            fac = np.where(err > 0, 0.9 * (tol / np.where(err > 0, err, 1.0)) ** 0.2, 5.0)
        fac = np.clip(fac, 0.2, 5.0)
        acc = active[ok]
        x[acc] = xn[ok]
        t[acc] += ha[ok]
        h[active] = np.clip(ha * fac, hmin, hmax)
        if record is not None and n_rows == 1 and ok[0]:
            record(t0 + float(t[0]), x)
        active = active[duration - t[active] > end_tol]
    return x


def integrate_batch(rhs, x0, inputs, hold: float, horizon: float, settings: IntegratorSettings = IntegratorSettings(),
                    on_boundary=None, on_step=None):
    """Integrate N trajectories with piecewise-constant inputs.

    Args:
        rhs: batched velocity map.
        x0: initial states, shape (N, n).
        inputs: held inputs, shape (N, K, k) with K = number of hold intervals.
        hold: input hold length.
        horizon: final time.
        on_boundary: optional callback ``(t, x)`` at each hold boundary
            (including t = 0).
        on_step: optional callback ``(t, x)`` after every accepted step.

    Returns:
        Final states, shape (N, n).
    """
    x = np.array(x0, dtype=np.float64)
    edges = hold_boundaries(horizon, hold)
    if inputs.shape[1] < len(edges) - 1:
        raise ValueError(f"need {len(edges) - 1} held inputs, got {inputs.shape[1]}")
    if on_boundary is not None:
        on_boundary(0.0, x)
    dt = min(settings.dt, hold)
    for k in range(len(edges) - 1):
        t0, t1 = edges[k], edges[k + 1]
        u = inputs[:, k, :]
        if settings.method == RK4:
            x = _rk4_segment(rhs, x, u, t1 - t0, dt, record=on_step, t0=t0)
        else:
            x = _rkf45_segment(rhs, x, u, t1 - t0, dt, dt / 64, hold,
                               settings.atol, settings.rtol, t0=t0, record=on_step)
        if on_boundary is not None:
            on_boundary(float(t1), x)
    return x


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray


def integrate(dyn, x0, input_signal, horizon: float, settings: IntegratorSettings = IntegratorSettings(),
              hold: float | None = None) -> Trajectory:
    """Integrate one trajectory and return every accepted step.

    ``dyn(x, u)`` may be a single-state map; it is vectorized here if the
    batched call fails. ``input_signal`` is an array of held inputs, shape
    (K, k), applied over consecutive intervals of length ``hold`` (default:
    horizon / K).
    """
    sig = np.atleast_2d(np.asarray(input_signal, dtype=np.float64))
    if hold is None:
        hold = horizon / sig.shape[0]
    x = np.asarray(x0, dtype=np.float64).reshape(1, -1)
    times, states = [0.0], [x[0].copy()]

    def rec(t, xs):
        times.append(t)
        states.append(xs[0].copy())

    integrate_batch(_batched(dyn), x, sig[None, :, :], hold, horizon, settings, on_step=rec)
    return Trajectory(np.array(times), np.array(states))


def _batched(dyn):
    def rhs(x, u):
        try:
            out = np.asarray(dyn(x, u), dtype=np.float64)
            if out.shape == x.shape:
                return out
        except (ValueError, TypeError, IndexError):
            pass
        return np.array([np.asarray(dyn(xi, ui), dtype=np.float64) for xi, ui in zip(x, u)])
    return rhs

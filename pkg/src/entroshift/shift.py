"""Shift functions solving h' = V_eps(u(h, t), ubar1(h, t), ubar2(h, t)) in the Filippov sense.

Between fronts of ``u`` the state is constant and the ODE is integrated with
the implicit midpoint rule, so the dissipation inequality holds exactly at
each segment midpoint. On a front the path either follows it at the
Rankine-Hugoniot speed or leaves to the side its velocity points to.
"""

import math
from dataclasses import dataclass

import numpy as np

from .flux import OrderingError, shift_dissipation, v_epsilon
from .fronts import POS_TOL, TIME_TOL
from .quadrature import gauss_legendre

CELL, FRONT = 0, 1
_FIXED_POINT_TOL = 1e-15


@dataclass(frozen=True)
class ShiftPath:
    """Piecewise-linear path through the samples ``(ts[k], xs[k])``.

    ``modes[k]`` says how segment k was produced: 0 inside a constant state
    of u, 1 riding a front. ``velocities`` holds the exact segment velocity
    when known; very short segments lose digits in a difference quotient.
    """

    ts: np.ndarray
    xs: np.ndarray
    modes: np.ndarray
    eps: float
    t_star: float
    x0: float
    velocities: np.ndarray = None

    @property
    def slopes(self):
        if self.velocities is not None:
            return self.velocities
        return np.diff(self.xs) / np.diff(self.ts)

    @property
    def lip_bound(self):
        return float(np.abs(self.slopes).max()) if self.ts.size > 1 else 0.0

    @property
    def t_end(self):
        return float(self.ts[-1])

    def __call__(self, t):
        return np.interp(t, self.ts, self.xs)

    def resample(self, ts):
        return ShiftPath(np.asarray(ts, dtype=float), self(ts),
                         np.zeros(max(len(ts) - 1, 0), dtype=int),
                         self.eps, self.t_star, self.x0)

    @classmethod
    def linear(cls, t_star, x0, speed, t_end):
        """Straight path, used for the cone boundaries."""
        ts = np.array([t_star, t_end], dtype=float)
        return cls(ts, x0 + speed * (ts - t_star), np.array([CELL]), 0.0, t_star, x0,
                   np.array([float(speed)]))

    def truncate(self, t_end):
        """The path restricted to [t_star, t_end]."""
        keep = int(np.searchsorted(self.ts, t_end, side="left"))
        ts = np.append(self.ts[:keep], t_end)
        xs = np.append(self.xs[:keep], self(t_end))
        vel = None if self.velocities is None else self.velocities[:keep]
        if ts.size >= 2 and ts[-1] <= ts[-2]:
            ts, xs = ts[:-1], xs[:-1]
            vel = None if vel is None else vel[:-1]
        return ShiftPath(ts, xs, self.modes[:ts.size - 1], self.eps, self.t_star, self.x0, vel)


def _check_order(ubar1, ubar2):
    d1, d2 = ubar1.datum, ubar2.datum
    xs = np.union1d(d1.xs, d2.xs)
    if np.any(d1(xs) < d2(xs) - 1e-12):
        raise OrderingError("ubar1 datum must dominate ubar2 datum")


def _velocity(model, state, ubar1, ubar2, x, t, eps):
    b1 = float(ubar1(x, t))
    b2 = min(float(ubar2(x, t)), b1)  # rounding can invert the ordering by an ulp
    return v_epsilon(model, state, b1, b2, eps)


def _midpoint_velocity(model, state, ubar1, ubar2, h, t, dt, eps, vmax):
    """Solve v = V(state, ubar(h + v dt/2, t + dt/2)) for v."""
    tm = t + 0.5 * dt

    def F(v):
        return _velocity(model, state, ubar1, ubar2, h + 0.5 * dt * v, tm, eps)

    v = F(0.0)
    for _ in range(12):
        nv = F(v)
        if abs(nv - v) <= _FIXED_POINT_TOL * max(1.0, abs(v)):
            return nv
        v = nv
    # contraction failed (steep ubar); bisect the continuous map v - F(v)
    lo, hi = -vmax - 1.0, vmax + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - F(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    v = 0.5 * (lo + hi)
    return F(v)


def _resolve_point(model, states, speeds, ubar1, ubar2, x, t, eps):
    """Filippov selection at a point carrying one or more fronts.

    ``states`` has one more entry than ``speeds``. Returns ("front", j) when
    front j can be followed, else ("sector", j) for the constant state j the
    path moves into.
    """
    V = [_velocity(model, s, ubar1, ubar2, x, t, eps) for s in states]
    for j, sigma in enumerate(speeds):
        lo, hi = min(V[j], V[j + 1]), max(V[j], V[j + 1])
        if lo - 1e-15 <= sigma <= hi + 1e-15:
            return "front", j
    bounds = [-math.inf] + list(speeds) + [math.inf]
    for j, v in enumerate(V):
        if bounds[j] <= v <= bounds[j + 1]:
            return "sector", j
    raise RuntimeError("no consistent Filippov selection")  # unreachable for ordered speeds


def build_shift(model, u, ubar1, ubar2, t_star, x0, eps, t_end, dt=None):
    """Construct a shift path from ``(t_star, x0)`` to ``t_end``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if t_end < t_star:
        raise ValueError("t_end must not precede t_star")
    if t_end > u.horizon + TIME_TOL:
        raise ValueError(f"t_end = {t_end} beyond solved horizon {u.horizon}")
    _check_order(ubar1, ubar2)
    horizon = t_end - t_star
    base_dt = dt if dt is not None else 1e-3 * max(horizon, 1e-12)
    vmax = float(np.abs(model.dA(np.array(model.working_interval))).max())

    ts, xs, modes, vel = [float(t_star)], [float(x0)], [], []
    t, h = float(t_star), float(x0)
    while t < t_end - TIME_TOL * max(1.0, t_end):
        step = min(base_dt, t_end - t, u.next_event(t) - t)
        pos, speed, left, right, idx = u.positions(t)
        near = np.nonzero(np.abs(pos - h) <= POS_TOL * max(1.0, abs(h)))[0]
        exclude = set(near.tolist())
        if near.size:
            states = [float(left[near[0]])] + [float(right[k]) for k in near]
            speeds = [float(speed[k]) for k in near]
            kind, j = _resolve_point(model, states, speeds, ubar1, ubar2, h, t, eps)
            if kind == "front":
                k = idx[near[j]]
                t_new = t + step
                h_new = u.x0[k] + u.speed[k] * (t_new - u.t0[k])
                ts.append(t_new)
                xs.append(h_new)
                modes.append(FRONT)
                vel.append(float(u.speed[k]))
                t, h = t_new, h_new
                continue
            state = states[j]
        else:
            k = np.searchsorted(pos, h, side="right")
            state = u.far_left if k == 0 else float(right[k - 1])

        h_new, step, v = _cell_step(model, state, ubar1, ubar2, h, t, step, eps, vmax,
                                    pos, speed, exclude)
        t = t + step
        h = h_new
        ts.append(t)
        xs.append(h)
        modes.append(CELL)
        vel.append(v)
    return ShiftPath(np.array(ts), np.array(xs), np.array(modes, dtype=int),
                     float(eps), float(t_star), float(x0), np.array(vel))


def _first_contact(h, v, pos, speed, exclude):
    tau, target = math.inf, None
    for k in range(pos.size):
        if k in exclude:
            continue
        gap = pos[k] - h
        rel = v - speed[k]
        if gap * rel > 0 and gap / rel < tau:
            tau, target = gap / rel, k
    return target, tau


def _cell_step(model, state, ubar1, ubar2, h, t, dt, eps, vmax, pos, speed, exclude):
    """One implicit-midpoint step inside a constant state, stopping on contact.

    On contact the step length is iterated to a fixed point dt = tau(dt), so the
    landing slope matches the midpoint velocity to rounding.
    """
    landing = None
    for _ in range(40):
        v = _midpoint_velocity(model, state, ubar1, ubar2, h, t, dt, eps, vmax)
        k, tau = _first_contact(h, v, pos, speed, exclude)
        if landing is None:
            if k is None or tau >= dt:
                return h + v * dt, dt, v
            landing = k
        elif k != landing or abs(tau - dt) <= 1e-14 * dt:
            break
        dt = tau
    return pos[landing] + speed[landing] * dt, dt, v


def dissipation_along(model, u, ubar1, ubar2, path):
    """D at each segment midpoint; returns ``(t_mid, D)``.

    D = q(u+;ubar2) - q(u-;ubar1) - h' (eta(u+|ubar2) - eta(u-|ubar1)).
    """
    ts, xs = path.ts, path.xs
    if ts.size < 2:
        return np.empty(0), np.empty(0)
    tm = 0.5 * (ts[:-1] + ts[1:])
    xm = 0.5 * (xs[:-1] + xs[1:])
    slopes = path.slopes
    D = np.empty(tm.size)
    for k in range(tm.size):
        um, up = u.trace(xm[k], tm[k])
        b1 = float(ubar1(xm[k], tm[k]))
        b2 = float(ubar2(xm[k], tm[k]))
        D[k] = shift_dissipation(model, um, up, b1, b2, slopes[k])
    return tm, D


def mollified_velocity(model, u, ubar1, ubar2, x, t, eps, n, order=3):
    """n int_x^{x+1/n} V_eps(u, ubar1, ubar2) dy, split at the fronts of u."""
    a, b = x, x + 1.0 / n
    pos, _, _, right, _ = u.positions(t)
    inner = pos[(pos > a) & (pos < b)]
    edges = np.concatenate([[a], inner, [b]])
    nodes, weights = gauss_legendre(order)
    widths = np.diff(edges)
    ys = edges[:-1, None] + widths[:, None] * nodes[None, :]
    mids = 0.5 * (edges[:-1] + edges[1:])
    k = np.searchsorted(pos, mids, side="right")
    states = np.concatenate([[u.far_left], right])[k]
    b1 = ubar1(ys.ravel(), t).reshape(ys.shape)
    b2 = ubar2(ys.ravel(), t).reshape(ys.shape)
    total = 0.0
    for i in range(ys.shape[0]):
        for j in range(ys.shape[1]):
            total += widths[i] * weights[j] * v_epsilon(
                model, float(states[i]), float(b1[i, j]), float(min(b2[i, j], b1[i, j])), eps)
    return n * total


def mollified_shift(model, u, ubar1, ubar2, t_star, x0, eps, t_end, n, dt=None):
    """Heun integration of the mollified ODE h' = v_n(h, t); a reference path."""
    _check_order(ubar1, ubar2)
    vmax = float(np.abs(model.dA(np.array(model.working_interval))).max())
    if dt is None:
        dt = min(1e-3 * (t_end - t_star), 0.1 / (n * 2.0 * max(vmax, 1e-12)))
    nsteps = max(1, int(math.ceil((t_end - t_star) / dt)))
    ts = np.linspace(t_star, t_end, nsteps + 1)
    xs = np.empty_like(ts)
    xs[0] = x0
    for i in range(nsteps):
        t, h = ts[i], xs[i]
        step = ts[i + 1] - t
        k1 = mollified_velocity(model, u, ubar1, ubar2, h, t, eps, n)
        k2 = mollified_velocity(model, u, ubar1, ubar2, h + step * k1, ts[i + 1], eps, n)
        xs[i + 1] = h + 0.5 * step * (k1 + k2)
    return ShiftPath(ts, xs, np.zeros(nsteps, dtype=int), float(eps), float(t_star), float(x0))

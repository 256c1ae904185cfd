"""Front tracking for piecewise-constant data.

Shocks travel at their Rankine-Hugoniot speed; rarefactions are split into
jumps of size at most ``delta``. Collisions are resolved by solving the
Riemann problem between the outer states.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .flux import entropy_flux, rh_speed, shock_dissipation
from .quadrature import composite_gauss, refine_edges

TIME_TOL = 1e-12
POS_TOL = 1e-11
MAX_EVENTS = 200_000


class ResolutionError(RuntimeError):
    """Too many interactions for the configured rarefaction step."""


@dataclass(frozen=True)
class Wave:
    speed: float
    left: float
    right: float


def solve_riemann(model, uL, uR, delta, nonentropic_allowed=False):
    """Waves leaving a jump from uL to uR, ordered left to right."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if uL == uR:
        return []
    if uL > uR or nonentropic_allowed:
        return [Wave(rh_speed(model, uL, uR), uL, uR)]
    n = max(1, math.ceil((uR - uL) / delta - 1e-12))
    levels = [uL + (uR - uL) * k / n for k in range(n)] + [uR]
    return [Wave(rh_speed(model, a, b), a, b) for a, b in zip(levels[:-1], levels[1:])]


class FrontSolution:
    """Exact piecewise-constant weak solution stored as front records.

    Record ``k`` lives on ``t0[k] <= t < t1[k]`` at position
    ``x0[k] + speed[k] (t - t0[k])``. Survivors have ``t1 = inf``.
    """

    def __init__(self, model, initial_states, initial_positions, horizon, delta,
                 nonentropic_allowed, records, events):
        self.model = model
        self.initial_states = np.asarray(initial_states, dtype=float)
        self.initial_positions = np.asarray(initial_positions, dtype=float)
        self.horizon = float(horizon)
        self.delta = float(delta)
        self.nonentropic_allowed = nonentropic_allowed
        rec = np.array(records, dtype=float).reshape(-1, 6)
        self.t0, self.t1, self.x0, self.speed, self.left, self.right = rec.T.copy()
        self.events = list(events)
        self.far_left = float(self.initial_states[0])
        self.far_right = float(self.initial_states[-1])
        times = np.concatenate([self.t0, self.t1[np.isfinite(self.t1)]])
        self.event_times = np.unique(times[times > 0])

    @property
    def n_records(self):
        return self.t0.size

    @property
    def sup_norm(self):
        vals = np.concatenate([self.initial_states, self.left, self.right])
        return float(np.abs(vals).max())

    def check_time(self, t):
        if t < 0 or t > self.horizon + TIME_TOL:
            raise ValueError(f"t = {t} outside solved horizon [0, {self.horizon}]")

    def alive(self, t):
        """Indices of fronts present at t, sorted left to right (right-continuous)."""
        mask = (self.t0 <= t + TIME_TOL) & (self.t1 > t + TIME_TOL)
        idx = np.nonzero(mask)[0]
        pos = self.x0[idx] + self.speed[idx] * (t - self.t0[idx])
        order = np.lexsort((self.speed[idx], pos))
        idx = idx[order]
        return idx, pos[order]

    def positions(self, t):
        idx, pos = self.alive(t)
        return pos, self.speed[idx], self.left[idx], self.right[idx], idx

    def __call__(self, x, t):
        """u(x, t); at a front the right state is returned."""
        pos, _, _, right, _ = self.positions(t)
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(pos, x, side="right")
        states = np.concatenate([[self.far_left], right])
        out = states[k]
        return float(out) if out.ndim == 0 else out

    def trace(self, h, t, pos_tol=POS_TOL):
        """One-sided states (u-, u+) at x = h(t), with h a path or a number."""
        self.check_time(t)
        x = float(h(t)) if callable(h) else float(h)
        pos, _, left, right, _ = self.positions(t)
        near = np.nonzero(np.abs(pos - x) <= pos_tol * max(1.0, abs(x)))[0]
        if near.size:
            return float(left[near[0]]), float(right[near[-1]])
        k = np.searchsorted(pos, x, side="right")
        u = self.far_left if k == 0 else float(right[k - 1])
        return u, u

    def next_event(self, t):
        """First time after t at which the set of fronts changes."""
        k = np.searchsorted(self.event_times, t + TIME_TOL, side="right")
        if k < self.event_times.size:
            return float(self.event_times[k])
        return math.inf

    def integral(self, a, b, t, fn=None):
        """int_a^b fn(u(x, t)) dx, exact for the piecewise-constant profile."""
        pos, _, _, right, _ = self.positions(t)
        states = np.concatenate([[self.far_left], right])
        edges = np.concatenate([[a], pos[(pos > a) & (pos < b)], [b]])
        mids = 0.5 * (edges[:-1] + edges[1:])
        vals = states[np.searchsorted(pos, mids, side="right")]
        if fn is not None:
            vals = np.asarray(fn(vals), dtype=float)
        return float(np.sum(np.diff(edges) * vals))

    def total_variation(self, t):
        _, _, left, right, _ = self.positions(t)
        return float(np.sum(np.abs(right - left)))

    def front_table(self):
        """Rows (t0, t1, x0, x1, speed, left, right) with t1 clipped to the horizon."""
        t1 = np.minimum(self.t1, self.horizon)
        x1 = self.x0 + self.speed * (t1 - self.t0)
        return np.column_stack([self.t0, t1, self.x0, x1, self.speed, self.left, self.right])

    def admissibility(self, tol=1e-12):
        """Per-front entropy production for the model's entropy.

        Returns a list of ``(record, dissipation, is_fan_step)``; fan steps are
        increasing jumps no larger than ``delta``.
        """
        out = []
        for k in range(self.n_records):
            l, r = self.left[k], self.right[k]
            lam = shock_dissipation(self.model, l, r)
            fan = (not self.nonentropic_allowed and l < r
                   and (r - l) <= self.delta * (1 + 1e-9))
            out.append((k, lam, bool(fan)))
        return out


class _Front:
    __slots__ = ("t0", "x0", "speed", "left", "right", "prev", "next", "alive", "rid")

    def __init__(self, t0, x0, wave, rid):
        self.t0, self.x0 = t0, x0
        self.speed, self.left, self.right = wave.speed, wave.left, wave.right
        self.prev = self.next = None
        self.alive = True
        self.rid = rid

    def pos(self, t):
        return self.x0 + self.speed * (t - self.t0)


def _collision_time(a, b):
    if a.speed <= b.speed:
        return math.inf
    return ((b.x0 - b.speed * b.t0) - (a.x0 - a.speed * a.t0)) / (a.speed - b.speed)


def evolve(model, states, positions, T, delta=None, nonentropic_allowed=False,
           max_events=MAX_EVENTS):
    """Front tracking from the step data ``states`` separated at ``positions``."""
    states = [float(s) for s in states]
    positions = [float(p) for p in positions]
    if len(states) != len(positions) + 1:
        raise ValueError("need one more state than jump positions")
    if any(b <= a for a, b in zip(positions[:-1], positions[1:])):
        raise ValueError("positions must be strictly increasing")
    if T < 0:
        raise ValueError("T must be nonnegative")
    if delta is None:
        spread = max(states) - min(states)
        delta = 1e-2 * spread if spread > 0 else 1.0
    model.check(*states)

    records = []
    fronts = []

    def new_front(t, x, wave):
        f = _Front(t, x, wave, len(records))
        records.append([t, math.inf, x, wave.speed, wave.left, wave.right])
        return f

    for x, uL, uR in zip(positions, states[:-1], states[1:]):
        for w in solve_riemann(model, uL, uR, delta, nonentropic_allowed):
            fronts.append(new_front(0.0, x, w))
    for a, b in zip(fronts[:-1], fronts[1:]):
        a.next, b.prev = b, a

    heap = []

    def push(a, b, now):
        tc = _collision_time(a, b)
        if tc <= T + TIME_TOL and tc >= now - TIME_TOL:
            heapq.heappush(heap, (max(tc, now), a.pos(max(tc, now)), a.rid, b.rid, a, b))

    for a, b in zip(fronts[:-1], fronts[1:]):
        push(a, b, 0.0)

    events = []
    while heap:
        tc, xc, _, _, a, b = heapq.heappop(heap)
        if not (a.alive and b.alive and a.next is b):
            continue
        if len(events) >= max_events:
            raise ResolutionError(
                f"more than {max_events} interactions; increase delta (now {delta:g})")
        scale = max(1.0, abs(xc))
        first, last = a, b
        while first.prev is not None and abs(first.prev.pos(tc) - xc) <= POS_TOL * scale:
            first = first.prev
        while last.next is not None and abs(last.next.pos(tc) - xc) <= POS_TOL * scale:
            last = last.next
        group = []
        f = first
        while True:
            group.append(f)
            if f is last:
                break
            f = f.next
        for f in group:
            f.alive = False
            records[f.rid][1] = tc
        prev, nxt = first.prev, last.next
        waves = solve_riemann(model, first.left, last.right, delta, nonentropic_allowed)
        new = [new_front(tc, xc, w) for w in waves]
        chain = ([prev] if prev else []) + new + ([nxt] if nxt else [])
        if prev is not None and nxt is None and not new:
            prev.next = None
        if nxt is not None and prev is None and not new:
            nxt.prev = None
        for p, q in zip(chain[:-1], chain[1:]):
            p.next, q.prev = q, p
            push(p, q, tc)
        events.append((tc, xc, len(group), len(new)))
    return FrontSolution(model, states, positions, T, delta, nonentropic_allowed,
                         records, events)


@dataclass(frozen=True)
class TentTest:
    """phi(x, t) = hat((x - xc)/rx) hat((t - tc)/rt), with hat(z) = max(0, 1 - |z|)."""

    xc: float
    rx: float
    tc: float
    rt: float

    def __call__(self, x, t):
        return (np.maximum(0.0, 1.0 - np.abs((x - self.xc) / self.rx))
                * np.maximum(0.0, 1.0 - np.abs((t - self.tc) / self.rt)))

    def dx(self, x, t):
        z = (x - self.xc) / self.rx
        ht = np.maximum(0.0, 1.0 - np.abs((t - self.tc) / self.rt))
        return np.where(np.abs(z) < 1, -np.sign(z) / self.rx, 0.0) * ht

    def dt(self, x, t):
        w = (t - self.tc) / self.rt
        hx = np.maximum(0.0, 1.0 - np.abs((x - self.xc) / self.rx))
        return np.where(np.abs(w) < 1, -np.sign(w) / self.rt, 0.0) * hx

    @property
    def t_support(self):
        return max(0.0, self.tc - self.rt), self.tc + self.rt

    @property
    def x_support(self):
        return self.xc - self.rx, self.xc + self.rx


def kruzhkov_pair(model, k):
    def eta_k(u):
        return np.abs(u - k)

    def q_k(u):
        return np.sign(u - k) * (model.A(u) - model.A(k))

    return eta_k, q_k


def kruzhkov_residual(sol, k, test):
    """Entropy-inequality functional for eta_k = |u - k| against a tent test.

    For the piecewise-constant solution this reduces to minus the sum over
    fronts of int phi(x_f(t), t) (q_k(r) - q_k(l) - sigma (eta_k(r) - eta_k(l))) dt.
    Nonnegative for solutions entropic for eta_k.
    """
    eta_k, q_k = kruzhkov_pair(sol.model, k)
    return -_front_production(sol, test, eta_k, q_k)


def entropy_residual(sol, test):
    """Same functional for the model's own entropy pair."""
    model = sol.model
    q = np.vectorize(lambda u: entropy_flux(model, u))
    return -_front_production(sol, test, model.eta, q)


def _front_production(sol, test, eta, q):
    ta, tb = test.t_support
    tb = min(tb, sol.horizon)
    total = 0.0
    for k in range(sol.n_records):
        lo = max(sol.t0[k], ta)
        hi = min(sol.t1[k], tb)
        if hi <= lo:
            continue
        l, r, s = sol.left[k], sol.right[k], sol.speed[k]
        lam = float(q(r) - q(l) - s * (eta(r) - eta(l)))
        if lam == 0.0:
            continue
        x0, t0 = sol.x0[k], sol.t0[k]
        cuts = [lo, hi, test.tc]
        if s != 0:
            for xk in (test.xc - test.rx, test.xc, test.xc + test.rx):
                cuts.append(t0 + (xk - x0) / s)
        edges = np.unique(np.clip(cuts, lo, hi))
        edges = refine_edges(edges, max(hi - lo, 1e-300) / 4)
        total += lam * composite_gauss(lambda t: test(x0 + s * (t - t0), t), edges, 4)
    return total

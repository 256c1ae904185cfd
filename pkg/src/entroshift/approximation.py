"""Piecewise increasing functions with downward jumps, and their monotone layers."""

from dataclasses import dataclass

import numpy as np

from .classical import MonotoneLipschitzFn
from .quadrature import composite_gauss, gauss_legendre

RAMP_POINTS = 64
FIT_SHARE = 0.4  # each of the two error contributions gets 0.4 eps, leaving slack for quadrature
MAX_LEVEL = 40  # bisection depth cap


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant: ``states[i]`` on (positions[i-1], positions[i])."""

    positions: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        st = np.atleast_1d(np.asarray(self.states, dtype=float))
        if st.size != pos.size + 1:
            raise ValueError("need exactly one more state than positions")
        if np.any(np.diff(pos) <= 0):
            raise ValueError("positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "states", st)

    def __call__(self, x):
        return self.states[np.searchsorted(self.positions, x, side="right")]

    @property
    def sup_norm(self):
        return float(np.abs(self.states).max())

    def restrict(self, M):
        """Drop jumps outside (-M, M) and merge equal neighbours."""
        inside = (self.positions > -M) & (self.positions < M)
        k0 = int(np.searchsorted(self.positions, -M, side="right"))
        pos = self.positions[inside]
        st = np.concatenate([[self.states[k0]], self.states[1:][inside]])
        keep = np.diff(st) != 0
        return StepFunction(pos[keep], np.concatenate([[st[0]], st[1:][keep]]))


class LiwasFn:
    """Nondecreasing Lipschitz pieces separated by downward jumps.

    ``pieces[i]`` is used on (jumps[i-1], jumps[i]); each piece is a
    :class:`MonotoneLipschitzFn` whose breakpoints cover that interval.
    """

    def __init__(self, jumps, pieces, M):
        self.jumps = np.asarray(jumps, dtype=float).reshape(-1)
        self.pieces = list(pieces)
        self.M = float(M)
        if len(self.pieces) != self.jumps.size + 1:
            raise ValueError("need one more piece than jumps")
        if np.any(np.diff(self.jumps) <= 0):
            raise ValueError("jumps must be strictly increasing")
        if np.any(np.abs(self.jumps) >= self.M):
            raise ValueError("jumps must lie inside (-M, M)")
        for i, x in enumerate(self.jumps):
            if self.left_limit(i) < self.right_limit(i) - 1e-12:
                raise ValueError(f"jump at {x:g} is not downward")

    @property
    def n_jumps(self):
        return int(self.jumps.size)

    def left_limit(self, i):
        return float(self.pieces[i](self.jumps[i]))

    def right_limit(self, i):
        return float(self.pieces[i + 1](self.jumps[i]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.jumps, x, side="right")
        out = np.empty(np.shape(x))
        flat_x, flat_k, flat_out = np.ravel(x), np.ravel(k), out.reshape(-1)
        for i, piece in enumerate(self.pieces):
            sel = flat_k == i
            if np.any(sel):
                flat_out[sel] = piece(flat_x[sel])
        return out if out.ndim else float(out)

    def breakpoints(self):
        """All breakpoints of all pieces, restricted to their own intervals."""
        edges = np.concatenate([[-np.inf], self.jumps, [np.inf]])
        pts = [p.xs[(p.xs > a) & (p.xs < b)] for p, a, b in zip(self.pieces, edges[:-1], edges[1:])]
        return np.unique(np.concatenate(pts + [self.jumps]))

    @property
    def sup_norm(self):
        return max(float(np.abs(p.vs).max()) for p in self.pieces)

    def to_dict(self):
        return {"M": self.M, "jumps": self.jumps.tolist(),
                "pieces": [{"xs": p.xs.tolist(), "vs": p.vs.tolist()} for p in self.pieces]}


# ---------------------------------------------------------------- mollifier

def _bump(y):
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) < 1
    out = np.zeros(y.shape)
    out[inside] = np.exp(-1.0 / (1.0 - y[inside] ** 2))
    return out


_RAMP = None


def bump_ramp():
    """CDF of the unit-mass C-infinity bump on [-1, 1], sampled at 64 points."""
    global _RAMP
    if _RAMP is None:
        z = np.linspace(-1.0, 1.0, RAMP_POINTS)
        panels = np.array([composite_gauss(_bump, np.linspace(a, b, 9), 12)
                           for a, b in zip(z[:-1], z[1:])])
        mass = np.concatenate([[0.0], np.cumsum(panels)])
        _RAMP = (z, mass / mass[-1])
    return _RAMP


def _ramp_error_unit():
    """int (Phi_pl - H)^2 over [-1, 1] for the sampled ramp, computed exactly."""
    z, F = bump_ramp()
    total = 0.0
    for a, b, fa, fb in zip(z[:-1], z[1:], F[:-1], F[1:]):
        if b <= 0:
            ga, gb = fa, fb
        elif a >= 0:
            ga, gb = fa - 1.0, fb - 1.0
        else:  # the midpoint z = 0 is a sample only for odd counts; split the panel
            fm = fa + (fb - fa) * (0.0 - a) / (b - a)
            total += (0 - a) * (fa * fa + fa * fm + fm * fm) / 3.0
            ga, gb, a = fm - 1.0, fb - 1.0, 0.0
        total += (b - a) * (ga * ga + ga * gb + gb * gb) / 3.0
    return total


def mollify_up_jumps(positions, sizes, delta, base=0.0, gaps=None):
    """Sum of ramps ``base + sum sizes[k] * Phi((x - positions[k]) / delta)``.

    Ramps must not overlap: ``delta`` has to be at most half the distance
    between consecutive up-jumps (and to any other point listed in ``gaps``).
    """
    positions = np.asarray(positions, dtype=float).reshape(-1)
    sizes = np.asarray(sizes, dtype=float).reshape(-1)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if np.any(sizes <= 0):
        raise ValueError("up-jump sizes must be positive")
    fence = np.sort(np.concatenate([positions, np.asarray(gaps if gaps is not None else [], float)]))
    if fence.size > 1 and 2 * delta > np.diff(fence).min() * (1 + 1e-12):
        raise ValueError(f"delta = {delta:g} too large for the jump spacing")
    if positions.size == 0:
        return MonotoneLipschitzFn.constant(base)
    z, F = bump_ramp()
    xs, vs, level = [], [], base
    for p, a in zip(positions, sizes):
        px, pv = p + delta * z, level + a * F
        if xs and px[0] <= xs[-1][-1]:  # ramps touching end to start
            px, pv = px[1:], pv[1:]
        xs.append(px)
        vs.append(pv)
        level += a
    return MonotoneLipschitzFn(np.concatenate(xs), np.concatenate(vs))


# ---------------------------------------------------------------- density construction

def _cell_moments(f, left, width, order=8, sub=8):
    """Per-cell mean of f and of f^2 by composite Gauss-Legendre."""
    nodes, weights = gauss_legendre(order)
    fine = np.linspace(0.0, 1.0, sub + 1)
    t = (fine[:-1, None] + nodes[None, :] / sub).ravel()
    wt = np.tile(weights / sub, sub)
    x = left[:, None] + width[:, None] * t[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    return fx @ wt, (fx * fx) @ wt


def fit_steps(f, M, tol):
    """L2 projection of f onto steps over an adaptively refined dyadic partition.

    Cells are bisected (Doerfler marking on the local error) until the total
    error is below tol.
    """
    left = np.linspace(-M, M, 2 ** 4 + 1)[:-1]
    width = np.full(left.size, 2 * M / 2 ** 4)
    mean, mean_sq = _cell_moments(f, left, width)
    while True:
        err2 = width * np.maximum(mean_sq - mean * mean, 0.0)
        total = float(err2.sum())
        if np.sqrt(total) < tol:
            break
        order = np.argsort(err2)[::-1]
        n_mark = int(np.searchsorted(np.cumsum(err2[order]), 0.5 * total)) + 1
        mark = np.zeros(left.size, dtype=bool)
        mark[order[:n_mark]] = True
        mark &= width > 2 * M * 2.0 ** -MAX_LEVEL
        if not mark.any():
            raise ValueError(f"step fit did not reach {tol:g} at depth {MAX_LEVEL}")
        half = 0.5 * width[mark]
        cl = np.concatenate([left[mark], left[mark] + half])
        cw = np.concatenate([half, half])
        cm, cs = _cell_moments(f, cl, cw)
        keep = ~mark
        left = np.concatenate([left[keep], cl])
        k = np.argsort(left, kind="stable")
        left = left[k]
        width = np.concatenate([width[keep], cw])[k]
        mean = np.concatenate([mean[keep], cm])[k]
        mean_sq = np.concatenate([mean_sq[keep], cs])[k]
    return StepFunction(left[1:], mean), float(np.sqrt(total))


def build_liwas(f, M, eps, delta=None):
    """LIWAS approximation of f on [-M, M] with L2 error below eps.

    ``f`` is either a vectorised callable, fitted by dyadic steps, or a
    :class:`StepFunction` taken as the step approximation itself.
    Returns ``(LiwasFn, report)`` where the report lists the error budget.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not M > 0:
        raise ValueError("M must be positive")
    if isinstance(f, StepFunction):
        steps, fit_err = f.restrict(M), 0.0
    else:
        steps, fit_err = fit_steps(f, M, FIT_SHARE * eps)
        steps = steps.restrict(M)
    jumps = np.diff(steps.states)
    up = jumps > 0
    x_up, a_up = steps.positions[up], jumps[up]
    x_down = steps.positions[~up]
    fence = np.sort(np.concatenate([steps.positions, [-M, M]]))
    gap = float(np.diff(fence).min())
    C = _ramp_error_unit()
    if delta is None:
        budget = FIT_SHARE * eps
        delta = 0.5 * gap
        if a_up.size:
            delta = min(delta, budget * budget / (C * float(np.sum(a_up ** 2))) * 0.999)
    elif 2 * delta > gap:
        raise ValueError(f"delta = {delta:g} exceeds half the jump spacing {gap:g}")
    ramp_err = float(np.sqrt(C * delta * np.sum(a_up ** 2)))

    # piece i lives between consecutive down-jumps; ramps never straddle one
    bounds = np.concatenate([[-np.inf], x_down, [np.inf]])
    pieces = []
    for i in range(x_down.size + 1):
        lo, hi = bounds[i], bounds[i + 1]
        base = float(steps.states[0]) if i == 0 else float(steps(lo))
        sel = (x_up > lo) & (x_up < hi)
        pieces.append(mollify_up_jumps(x_up[sel], a_up[sel], delta, base=base))
    liwas = LiwasFn(x_down, pieces, M)
    report = {"fit_error": fit_err, "ramp_error": ramp_err, "delta": float(delta),
              "n_up": int(a_up.size), "n_down": int(x_down.size),
              "bound": fit_err + ramp_err}
    return liwas, report


# ---------------------------------------------------------------- layers

def _piece_points(v0, k, lo, hi):
    """Samples of piece k on [lo, hi] (infinite ends dropped)."""
    p = v0.pieces[k]
    inner = p.xs[(p.xs > lo) & (p.xs < hi)]
    xs = np.concatenate([[lo] if np.isfinite(lo) else [], inner, [hi] if np.isfinite(hi) else []])
    if xs.size == 0:
        xs = p.xs[:1]
    return xs, p(xs)


def _running_max(xs, vs, m):
    """Exact running maximum of the polyline through (xs, vs), started at level m."""
    out_x, out_v = [xs[0]], [max(m, vs[0])]
    m = out_v[0]
    for xa, xb, va, vb in zip(xs[:-1], xs[1:], vs[:-1], vs[1:]):
        if vb <= m:
            out_x.append(xb)
            out_v.append(m)
        elif va >= m or xb == xa:
            out_x.append(xb)
            out_v.append(vb)
        else:
            out_x.append(xa + (m - va) / (vb - va) * (xb - xa))
            out_v.append(m)
            out_x.append(xb)
            out_v.append(vb)
        m = out_v[-1]
    return np.array(out_x), np.array(out_v)


def _clip_above(xs, vs, c):
    """min(c, g) for nondecreasing samples (xs, vs)."""
    k = int(np.searchsorted(vs, c, side="right"))
    if k == xs.size:
        return xs, vs
    if k == 0:
        return xs[:1], np.array([c])
    xa, xb, va, vb = xs[k - 1], xs[k], vs[k - 1], vs[k]
    xc = xa + (c - va) / (vb - va) * (xb - xa)
    return np.append(xs[:k], xc), np.append(vs[:k], c)


def _to_fn(xs, vs):
    xs = np.asarray(xs, dtype=float)
    vs = np.asarray(vs, dtype=float)
    # keep the last sample at repeated abscissae; the layers are continuous there
    last = np.append(np.diff(xs) > 0, True)
    return MonotoneLipschitzFn(xs[last], vs[last])


def _right_sup(v0, m):
    """sup over (x_m, x) of max(v0(x_m-), v0(y)), as samples on [x_m, inf)."""
    N = v0.n_jumps
    edges = np.concatenate([v0.jumps, [np.inf]])
    px, pv = [], []
    for k in range(m + 1, N + 1):
        x, v = _piece_points(v0, k, edges[k - 1], edges[k])
        px.append(x)
        pv.append(v)
    return _running_max(np.concatenate(px), np.concatenate(pv), v0.left_limit(m))


def layer_decompose(v0):
    """Nondecreasing Lipschitz layers v_1 >= ... >= v_{N+1}; v_i = v0 between jumps i-1 and i."""
    N = v0.n_jumps
    if N == 0:
        return [v0.pieces[0]]
    J = v0.jumps
    layers = []
    for i in range(1, N + 2):
        parts_x, parts_v = [], []
        if i == 1:
            x, v = _piece_points(v0, 0, -np.inf, J[0])
        else:
            prev = layers[-1]
            c = v0.right_limit(i - 2)
            left = np.append(prev.xs[prev.xs < J[i - 2]], J[i - 2])
            lx, lv = _clip_above(left, prev(left), c)
            parts_x.append(lx)
            parts_v.append(lv)
            hi = J[i - 1] if i <= N else np.inf
            x, v = _piece_points(v0, i - 1, J[i - 2], hi)
        parts_x.append(x)
        parts_v.append(v)
        if i <= N:
            rx, rv = _right_sup(v0, i - 1)
            parts_x.append(rx)
            parts_v.append(rv)
        layers.append(_to_fn(np.concatenate(parts_x), np.concatenate(parts_v)))
    return layers

"""Classical solutions with nondecreasing Lipschitz data (method of characteristics)."""

import bisect
from dataclasses import dataclass, field

import numpy as np

from .flux import OrderingError

ROOT_TOL = 1e-12
NUM_TOL = 1e-9


@dataclass(frozen=True)
class MonotoneLipschitzFn:
    """Nondecreasing piecewise-linear function with constant extension.

    Below the first breakpoint the value is ``vs[0]``, above the last it is
    ``vs[-1]``.
    """

    xs: np.ndarray
    vs: np.ndarray
    lip_const: float = field(default=0.0)

    def __post_init__(self):
        xs = np.atleast_1d(np.asarray(self.xs, dtype=float))
        vs = np.atleast_1d(np.asarray(self.vs, dtype=float))
        if xs.shape != vs.shape or xs.ndim != 1 or xs.size == 0:
            raise ValueError("xs and vs must be equal-length 1-d arrays")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        dv = np.diff(vs)
        scale = max(1.0, float(np.abs(vs).max()))
        if np.any(dv < -1e-12 * scale):
            raise OrderingError("values must be nondecreasing")
        vs = np.maximum.accumulate(vs)
        lip = float(np.max(np.diff(vs) / np.diff(xs))) if xs.size > 1 else 0.0
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "vs", vs)
        object.__setattr__(self, "lip_const", lip)

    @classmethod
    def constant(cls, c):
        return cls([0.0], [float(c)])

    @classmethod
    def from_function(cls, f, a, b, n):
        """Sample a nondecreasing function on ``n`` points of [a, b]."""
        xs = np.linspace(a, b, n)
        return cls(xs, np.maximum.accumulate(np.asarray(f(xs), dtype=float)))

    @property
    def left_value(self):
        return float(self.vs[0])

    @property
    def right_value(self):
        return float(self.vs[-1])

    @property
    def sup_norm(self):
        return float(np.abs(self.vs).max())

    def __call__(self, x):
        return np.interp(x, self.xs, self.vs)


class ClassicalSolution:
    """Solution of u_t + A(u)_x = 0 from a :class:`MonotoneLipschitzFn` datum."""

    def __init__(self, model, datum):
        self.model = model
        self.datum = datum

    def kinks(self, t):
        """Positions at time t of the characteristics issued from breakpoints."""
        d = self.datum
        return d.xs + t * self.model.dA(d.vs)

    def _foot_scalar(self, x, t):
        # plain-float path; the shift integrator calls this once per velocity evaluation
        d = self.datum
        dA, ddA = self.model.dA, self.model.ddA
        g = d.xs + t * dA(d.vs)
        k = bisect.bisect_right(g.tolist(), x)
        if k == 0 or k == d.xs.size:
            v = float(d.vs[0] if k == 0 else d.vs[-1])
            return x - t * float(dA(v)), v
        xa, xb = float(d.xs[k - 1]), float(d.xs[k])
        va, vb = float(d.vs[k - 1]), float(d.vs[k])
        if vb <= va:
            return x - t * float(dA(va)), va
        slope = (vb - va) / (xb - xa)
        lo, hi = va, vb
        v = 0.5 * (lo + hi)
        for _ in range(100):
            G = xa + (v - va) / slope + t * float(dA(v)) - x
            corr = G / (1.0 / slope + t * float(ddA(v)))
            if G < 0:
                lo = v
            elif G > 0:
                hi = v
            step = v - corr
            if abs(corr) <= ROOT_TOL * max(1.0, abs(v)):
                v = step
                break
            v = step if lo < step < hi else 0.5 * (lo + hi)
        v = min(max(v, va), vb)
        return xa + (v - va) / slope, v

    def foot(self, x, t):
        """Characteristic foot x0 with x = x0 + t A'(v0(x0)) and the value v0(x0)."""
        if isinstance(x, (float, int)) and t != 0:
            return self._foot_scalar(float(x), float(t))
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        d = self.datum
        if t == 0:
            out = (x.copy(), d(x))
            return (out[0][0], out[1][0]) if scalar else out
        dA, ddA = self.model.dA, self.model.ddA
        xs, vs = d.xs, d.vs
        g = xs + t * dA(vs)
        k = np.searchsorted(g, x, side="right")
        x0 = np.empty_like(x)
        v = np.empty_like(x)

        left = k == 0
        v[left] = vs[0]
        x0[left] = x[left] - t * dA(vs[0])
        right = k == xs.size
        v[right] = vs[-1]
        x0[right] = x[right] - t * dA(vs[-1])

        mid = ~(left | right)
        if np.any(mid):
            j = k[mid] - 1
            xm = x[mid]
            xa, xb = xs[j], xs[j + 1]
            va, vb = vs[j], vs[j + 1]
            flat = vb <= va
            vm = np.where(flat, va, 0.0)
            slope = np.where(flat, 1.0, (vb - va) / np.where(flat, 1.0, xb - xa))
            # in-piece unknown is v; G(v) = xa + (v - va)/slope + t A'(v) - x is increasing
            lo, hi = va.copy(), vb.copy()
            vv = 0.5 * (lo + hi)
            active = ~flat
            for _ in range(100):
                if not np.any(active):
                    break
                G = xa + (vv - va) / slope + t * dA(vv) - xm
                dG = 1.0 / slope + t * ddA(vv)
                lo = np.where(active & (G < 0), vv, lo)
                hi = np.where(active & (G > 0), vv, hi)
                corr = G / dG
                step = vv - corr
                conv = np.abs(corr) <= ROOT_TOL * np.maximum(1.0, np.abs(vv))
                inside = conv | ((step > lo) & (step < hi))
                new = np.where(inside, step, 0.5 * (lo + hi))
                vv = np.where(active, new, vv)
                active = active & ~conv
            vm = np.where(flat, va, vv)
            v[mid] = vm
            x0[mid] = np.where(flat, xm - t * dA(va), xa + (vm - va) / slope)
        if scalar:
            return float(x0[0]), float(v[0])
        return x0, v

    def evaluate(self, x, t):
        if t < 0:
            raise ValueError("t must be nonnegative")
        _, v = self.foot(x, t)
        return v

    __call__ = evaluate


def oleinik_modulus(values_or_sol, t, grid):
    """max over sampled pairs of (v(x+z) - v(x)) t / z.

    The largest secant slope over all pairs of a sampled function is attained
    by adjacent samples, so only neighbours are compared.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size < 2:
        raise ValueError("grid needs at least two points")
    if callable(values_or_sol):
        vals = np.asarray(values_or_sol(grid, t) if isinstance(values_or_sol, ClassicalSolution)
                          else values_or_sol(grid), dtype=float)
    else:
        vals = np.asarray(values_or_sol, dtype=float)
    slopes = np.diff(vals) / np.diff(grid)
    return float(max(0.0, slopes.max()) * t)


def comparison_check(sol1, sol2, grid, times, tol=NUM_TOL):
    """True iff sol1 >= sol2 - tol at all sampled (x, t)."""
    grid = np.asarray(grid, dtype=float)
    if np.any(sol1.datum(grid) < sol2.datum(grid) - tol):
        raise OrderingError("datum1 must dominate datum2")
    for t in np.atleast_1d(times):
        if np.any(sol1.evaluate(grid, float(t)) < sol2.evaluate(grid, float(t)) - tol):
            return False
    return True

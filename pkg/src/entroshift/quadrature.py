"""Adaptive Simpson and fixed Gauss-Legendre rules."""

import math
import os

import numpy as np

DEFAULT_QUAD_TOL = 1e-10
_MAX_DEPTH = 50


def quad_tol():
    """Absolute tolerance, overridable through ``ENTROSHIFT_QUAD_TOL``."""
    raw = os.environ.get("ENTROSHIFT_QUAD_TOL")
    if raw is None:
        return DEFAULT_QUAD_TOL
    value = float(raw)
    if not value > 0:
        raise ValueError(f"ENTROSHIFT_QUAD_TOL must be positive, got {raw!r}")
    return value


def adaptive_simpson(f, a, b, tol=None, vectorized=False):
    """Integrate f over [a, b] to absolute tolerance ``tol``.

    Uses the Richardson-corrected Simpson estimate on each accepted panel.
    Reversed limits give the negated integral. With ``vectorized=True`` f
    takes arrays and the panels of each refinement level are evaluated in one
    call; the acceptance rule is the same as in the recursive form.
    """
    if tol is None:
        tol = quad_tol()
    if a == b:
        return 0.0
    if vectorized:
        return _simpson_levels(f, float(a), float(b), tol)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, _MAX_DEPTH)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def _simpson_levels(f, a, b, tol):
    lo = np.array([a])
    hi = np.array([b])
    fl, fm, fh = (np.asarray(f(np.array([x])), dtype=float) for x in (a, 0.5 * (a + b), b))
    whole = (hi - lo) / 6.0 * (fl + 4.0 * fm + fh)
    total = 0.0
    for depth in range(_MAX_DEPTH + 1):
        mid = 0.5 * (lo + hi)
        quarter = np.concatenate([0.5 * (lo + mid), 0.5 * (mid + hi)])
        fq = np.asarray(f(quarter), dtype=float)
        n = lo.size
        flm, frm = fq[:n], fq[n:]
        left = (mid - lo) / 6.0 * (fl + 4.0 * flm + fm)
        right = (hi - mid) / 6.0 * (fm + 4.0 * frm + fh)
        delta = left + right - whole
        done = np.abs(delta) <= 15.0 * tol if depth < _MAX_DEPTH else np.ones(n, bool)
        total += float(np.sum((left + right + delta / 15.0)[done]))
        keep = ~done
        if not keep.any():
            break
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        fl, fm, fh, flm, frm = fl[keep], fm[keep], fh[keep], flm[keep], frm[keep]
        left, right = left[keep], right[keep]
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        fl, fm, fh = np.concatenate([fl, fm]), np.concatenate([flm, frm]), np.concatenate([fm, fh])
        whole = np.concatenate([left, right])
        tol *= 0.5
    return total


_GL_CACHE = {}


def gauss_legendre(order):
    """Nodes and weights on [0, 1]."""
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[order]


def composite_gauss(f, edges, order=6):
    """Sum of Gauss-Legendre rules over consecutive panels given by ``edges``.

    ``f`` must accept an array of abscissae. Panels of zero width are skipped.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2:
        return 0.0
    widths = np.diff(edges)
    keep = widths > 0
    if not np.any(keep):
        return 0.0
    lo = edges[:-1][keep]
    widths = widths[keep]
    nodes, weights = gauss_legendre(order)
    x = lo[:, None] + widths[:, None] * nodes[None, :]
    vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    return float(np.sum(widths[:, None] * weights[None, :] * vals))


def refine_edges(edges, max_width):
    """Split panels so that none is wider than ``max_width``."""
    edges = np.unique(np.asarray(edges, dtype=float))
    out = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((b - a) / max_width)))
        out.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(out)


def checked_gauss(f, a, b, tol=None, max_width=0.5):
    """20-point Gauss-Legendre panels, accepted when a 10-point rule agrees to tol.

    Falls back to vectorised adaptive Simpson otherwise. ``f`` takes arrays.
    """
    if tol is None:
        tol = quad_tol()
    if a == b:
        return 0.0
    if b < a:
        return -checked_gauss(f, b, a, tol, max_width)
    n = max(1, int(math.ceil((b - a) / max_width)))
    edges = np.linspace(a, b, n + 1)
    fine = composite_gauss(f, edges, 20)
    coarse = composite_gauss(f, edges, 10)
    if abs(fine - coarse) <= tol:
        return fine
    return adaptive_simpson(f, a, b, tol, vectorized=True)

"""Gluing evolved monotone layers along shifts into an approximant psi of u(., T)."""

from dataclasses import dataclass, field

import numpy as np

from .approximation import LiwasFn, StepFunction, build_liwas, layer_decompose
from .classical import ClassicalSolution, MonotoneLipschitzFn
from .flux import derive_constants, relative_entropy, relative_flux
from .quadrature import composite_gauss, gauss_legendre, refine_edges
from .shift import ShiftPath, build_shift, dissipation_along

NUM_TOL = 1e-9
MAX_LAYERS = 65
GAUSS_ORDER = 8


class RefinementError(RuntimeError):
    """The requested budget cannot be met at the configured resolution."""


def _rel_entropy_vec(model, a, b):
    return model.eta(a) - model.eta(b) - model.deta(b) * (a - b)


def _cell_integral(model, u, layer, a, b, t, max_width):
    """int_a^b eta(u(x, t) | layer(x, t)) dx, split where either side is not smooth."""
    if b <= a:
        return 0.0
    pos = u.positions(t)[0]
    kinks = layer.kinks(t)
    cuts = np.concatenate([[a, b], pos[(pos > a) & (pos < b)], kinks[(kinks > a) & (kinks < b)]])
    edges = refine_edges(np.unique(cuts), max_width)
    # u is right-continuous in x; Gauss nodes never sit on an edge
    return composite_gauss(lambda x: _rel_entropy_vec(model, u(x, t), layer(x, t)), edges,
                           GAUSS_ORDER)


def relative_entropy_total(model, u, layers, boundaries, t, max_width=None):
    """sum_i int_{b_i}^{b_{i+1}} eta(u(x, t) | layers[i](x, t)) dx."""
    boundaries = np.asarray(boundaries, dtype=float)
    if boundaries.size != len(layers) + 1:
        raise ValueError("need one more boundary than layers")
    if np.any(np.diff(boundaries) < -NUM_TOL):
        raise ValueError("boundaries must be ordered")
    if max_width is None:
        max_width = max(float(boundaries[-1] - boundaries[0]), 1e-12) / 64.0
    return float(sum(_cell_integral(model, u, lay, boundaries[i], boundaries[i + 1], t, max_width)
                     for i, lay in enumerate(layers)))


# ---------------------------------------------------------------- collisions

def partition_blocks(positions, tol):
    """Maximal runs of equal positions, as pairs (i, j) with block = i..j-1."""
    positions = np.asarray(positions, dtype=float)
    starts = [0] + [k for k in range(1, positions.size)
                    if positions[k] - positions[k - 1] > tol]
    ends = starts[1:] + [positions.size]
    return list(zip(starts, ends))


def detect_collision(paths, t_end=None, coll_tol=1e-8):
    """First time two consecutive paths come within ``coll_tol``.

    Returns ``(t_ss, blocks)`` where ``blocks`` lists every maximal run
    (i, j) of coincident paths at t_ss (singletons included). If no
    collision happens, t_ss is the common end time and ``blocks`` is empty.
    """
    grid = np.unique(np.concatenate([p.ts for p in paths]))
    if t_end is not None:
        grid = grid[grid <= t_end]
    X = np.array([p(grid) for p in paths])
    gaps = np.diff(X, axis=0)
    hit = gaps <= coll_tol
    hit[:, 0] = False  # starts are distinct by construction
    rows = np.nonzero(hit.any(axis=0))[0]
    if rows.size == 0:
        return float(grid[-1]), []
    k = int(rows[0])
    # exact linear crossing inside (grid[k-1], grid[k])
    t_ss = grid[k]
    for g in np.nonzero(hit[:, k])[0]:
        g0, g1 = gaps[g, k - 1], gaps[g, k]
        tc = grid[k - 1] + (g0 - coll_tol) / (g0 - g1) * (grid[k] - grid[k - 1])
        t_ss = min(t_ss, tc)
    pos = np.array([p(t_ss) for p in paths])
    # t_ss puts the closing gap at exactly coll_tol; group with some slack
    return float(t_ss), partition_blocks(pos, 2.0 * coll_tol + 1e-14 * (1 + np.abs(pos).max()))


# ---------------------------------------------------------------- stages

@dataclass
class Stage:
    t_start: float
    t_end: float
    layer_ids: list  # 0-based indices into the original layer list
    paths: list  # cones included: paths[0] and paths[-1]
    eps_shift: float
    blocks: list = field(default_factory=list)
    max_dissipation: float = -np.inf

    @property
    def merged(self):
        return [(i, j) for i, j in self.blocks if j - i >= 2]

    def boundaries(self, t):
        return np.array([p(t) for p in self.paths])


def _cones(R, s, T, t_star):
    """h_0 = -R + (t - T) s and h_last = R - (t - T) s."""
    return (ShiftPath.linear(t_star, -R + (t_star - T) * s, s, T),
            ShiftPath.linear(t_star, R - (t_star - T) * s, -s, T))


def _run_stages(model, u, sols, ids, starts, t_star, T, R, s, eps_shift, coll_tol, dt, stages):
    """One induction stage on layers ``ids``; returns their boundaries at T."""
    n = len(ids)
    left, right = _cones(R, s, T, t_star)
    eps_i = eps_shift / (T * max(n - 1, 1))
    paths = [left]
    for k in range(1, n):
        paths.append(build_shift(model, u, sols[ids[k - 1]], sols[ids[k]], t_star,
                                 float(starts[k - 1]), eps_i, T, dt=dt))
    paths.append(right)
    stage = Stage(float(t_star), float(T), list(ids), paths, eps_i)
    stages.append(stage)
    if n == 1:
        return np.array([-R, R])
    t_ss, blocks = detect_collision(paths, T, coll_tol)
    if not blocks or t_ss >= T:
        b = np.array([p(T) for p in paths])
        b[0], b[-1] = -R, R
        return np.clip(np.maximum.accumulate(b), -R, R)
    if len(blocks) == n + 1:
        raise RefinementError(f"collision at t = {t_ss:g} produced no merged block")
    stage.t_end = t_ss
    stage.blocks = blocks
    # layers v_{i_2}, ..., v_{i_L} (1-based) carry on from the block positions
    heads = [i for i, _ in blocks]
    sub_ids = [ids[i - 1] for i in heads[1:]]
    sub_starts = [paths[i](t_ss) for i in heads[1:-1]]
    sub = _run_stages(model, u, sols, sub_ids, sub_starts, t_ss, T, R, s, eps_shift,
                      coll_tol, dt, stages)
    out = np.empty(n + 1)
    for m, (i, j) in enumerate(blocks):
        out[i:j] = sub[m]
    return out


# ---------------------------------------------------------------- psi

class PsiFn:
    """psi = v_{i+1}(., T) on (x_i, x_{i+1}), restricted to [-R, R]."""

    def __init__(self, layers, boundaries, T):
        self.layers = list(layers)
        self.boundaries = np.asarray(boundaries, dtype=float)
        self.T = float(T)
        self.R = float(self.boundaries[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        # right-continuous cell lookup; empty cells are never selected
        k = np.clip(np.searchsorted(self.boundaries, x, side="right") - 1, 0, len(self.layers) - 1)
        out = np.empty(x.shape)
        for i in np.unique(k):
            sel = k == i
            out[sel] = self.layers[i](x[sel], self.T)
        return out if out.ndim else float(out)

    def cells(self):
        """Nonempty cells as (a, b, layer index)."""
        b = self.boundaries
        return [(b[i], b[i + 1], i) for i in range(len(self.layers)) if b[i + 1] > b[i]]

    def jumps(self):
        cells = self.cells()
        return np.array([c[0] for c in cells[1:]])

    def sample_grid(self, n=4001):
        """Uniform grid on [-R, R] plus the boundaries and both sides of each jump."""
        base = np.linspace(-self.R, self.R, n)
        j = self.jumps()
        eps = 1e-12 * max(1.0, self.R)
        return np.unique(np.concatenate([base, j - eps, j]))

    def as_liwas(self, n_per_cell=200):
        """Piecewise-linear interpolant of psi as a :class:`LiwasFn`."""
        pieces, jumps = [], []
        for a, b, i in self.cells():
            xs = np.linspace(a, b, n_per_cell)
            pieces.append(MonotoneLipschitzFn(xs, self.layers[i](xs, self.T)))
            jumps.append(a)
        return LiwasFn(jumps[1:], pieces, self.R * (1 + 1e-9) + 1e-12)


@dataclass
class PsiResult:
    psi: PsiFn
    boundaries: np.ndarray
    rel_entropy_total: float
    oleinik_modulus: float
    sup_norm: float
    merge_log: list
    stages: list
    initial_total: float
    fit_report: dict
    constants: object
    eps: float
    eps_shift: float
    cell_entropies: list
    certificates: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.certificates.values())


def condition_e_modulus(psi, grid=None):
    """max (psi(x+z) - psi(x)) T / z over adjacent grid points."""
    grid = psi.sample_grid() if grid is None else np.asarray(grid, dtype=float)
    vals = psi(grid)
    slopes = np.diff(vals) / np.diff(grid)
    return float(max(0.0, slopes.max()) * psi.T)


def step_data(u):
    """Initial data of a front solution as a :class:`StepFunction`."""
    return StepFunction(u.initial_positions, u.initial_states)


def build_psi(model, u, T, R, eps, fit_share=0.5, dt=None, coll_tol=None, constants=None):
    """Approximant psi of u(., T) on [-R, R] with int eta(u | psi) <= eps.

    ``fit_share`` of eps goes to the initial fit, the rest to shift dissipation.
    """
    if not (T > 0 and R > 0 and eps > 0):
        raise ValueError("T, R and eps must be positive")
    if T > u.horizon + 1e-12:
        raise ValueError(f"u is solved only up to t = {u.horizon}")
    K = derive_constants(model) if constants is None else constants
    s = K.s
    M = R + s * T
    coll_tol = 1e-8 * R if coll_tol is None else coll_tol
    u0 = step_data(u)
    target = np.sqrt(fit_share * eps / K.c_dstar)
    v0, fit = build_liwas(u0, M, target)
    if v0.n_jumps + 1 > MAX_LAYERS:
        raise RefinementError(f"{v0.n_jumps} downward jumps exceed the cap of {MAX_LAYERS - 1}")
    layers0 = layer_decompose(v0)
    sols = [ClassicalSolution(model, d) for d in layers0]
    eps_shift = (1.0 - fit_share) * eps

    stages = []
    bT = _run_stages(model, u, sols, list(range(len(sols))), v0.jumps, 0.0, T, R, s,
                     eps_shift, coll_tol, dt, stages)
    psi = PsiFn(sols, bT, T)
    cell_ent = [relative_entropy_total(model, u, [sols[i]], [a, b], T) for a, b, i in psi.cells()]
    total = float(sum(cell_ent))
    b0 = np.concatenate([[-M], v0.jumps, [M]])
    initial = relative_entropy_total(model, u, sols, b0, 0.0)
    grid = psi.sample_grid()
    res = PsiResult(
        psi=psi, boundaries=bT, rel_entropy_total=total,
        oleinik_modulus=condition_e_modulus(psi, grid),
        sup_norm=float(np.abs(psi(grid)).max()),
        merge_log=[(st.t_end, st.merged) for st in stages if st.merged],
        stages=stages, initial_total=initial, fit_report=fit, constants=K, eps=float(eps),
        eps_shift=float(eps_shift), cell_entropies=cell_ent)
    res.certificates = certify(model, u, res)
    return res


def stage_dissipation(model, u, stage, sols):
    """Largest sampled D over the interior shifts of a stage, up to its end time."""
    worst = -np.inf
    for k in range(1, len(stage.paths) - 1):
        sub = stage.paths[k].truncate(stage.t_end)
        _, D = dissipation_along(model, u, sols[stage.layer_ids[k - 1]],
                                 sols[stage.layer_ids[k]], sub)
        if D.size:
            worst = max(worst, float(D.max() - stage.eps_shift))
    return worst


def certify(model, u, res, tol=1e-6):
    """Pass/fail flags for the three properties of psi and the budget chain."""
    K = res.constants
    c = 1.0 / float(np.min(model.ddA(np.linspace(-model.B, model.B, 10_001)) * np.ones(10_001)))
    sols = res.psi.layers
    excess = max((stage_dissipation(model, u, st, sols) for st in res.stages
                  if len(st.layer_ids) > 1), default=-np.inf)
    u_sup = u.sup_norm
    return {
        "relative_entropy": res.rel_entropy_total <= res.eps + tol,
        "condition_e": res.oleinik_modulus <= c * (1 + tol),
        "sup_norm": res.sup_norm <= u_sup + NUM_TOL,
        "initial_fit": res.initial_total <= K.c_dstar * res.fit_report["bound"] ** 2 + NUM_TOL,
        "shift_dissipation": excess <= NUM_TOL,
        "budget_chain": res.rel_entropy_total <= res.initial_total + res.eps_shift + tol,
    }


def contraction_pairs(model, u, res, n_pairs=20, seed=0):
    """Sampled (t, tau, total(t), total(tau), allowance) within single stages."""
    rng = np.random.default_rng(seed)
    sols = res.psi.layers
    stages = [st for st in res.stages if st.t_end > st.t_start]
    out = []
    for _ in range(n_pairs):
        st = stages[int(rng.integers(len(stages)))]
        t, tau = np.sort(rng.uniform(st.t_start, st.t_end, 2))
        layers = [sols[i] for i in st.layer_ids]
        a = relative_entropy_total(model, u, layers, st.boundaries(t), t)
        b = relative_entropy_total(model, u, layers, st.boundaries(tau), tau)
        allowance = st.eps_shift * (len(st.layer_ids) - 1) * (tau - t)
        out.append((float(t), float(tau), a, b, allowance))
    return out


def l2_distance(psi, u, t, order=GAUSS_ORDER):
    """||psi - u(., t)||_{L2[-R, R]}, split at fronts, cell edges and layer kinks."""
    R = psi.R
    cuts = [np.array([-R, R]), psi.boundaries, u.positions(t)[0]]
    cuts += [lay.kinks(psi.T) for lay in psi.layers]
    edges = np.unique(np.concatenate(cuts))
    edges = refine_edges(edges[(edges >= -R) & (edges <= R)], 2 * R / 256)
    val = composite_gauss(lambda x: (psi(x) - u(x, t)) ** 2, edges, order)
    return float(np.sqrt(val))


# ---------------------------------------------------------------- decay certificate

def _line_crossings(x0, v0, t0, c, sh, a, b):
    """Times in (a, b) where x0 + v0 (t - t0) meets c + sh t."""
    dv = v0 - sh
    with np.errstate(divide="ignore", invalid="ignore"):
        tc = (c - x0 + v0 * t0) / dv
    tc = tc[np.isfinite(tc)]
    return tc[(tc > a) & (tc < b)]


def certify_monotone_decay(model, u, ubar, interval, times, speeds=(0.0, 0.0), tol=1e-8,
                           order=6):
    """Check t -> int_{h1}^{h2} eta(u | ubar) dx minus boundary fluxes is nonincreasing.

    The window is h1 = c + speeds[0] t, h2 = d + speeds[1] t. The subtracted
    term integrates q(u(h1+); ubar) - q(u(h2-); ubar) + h2' eta(u(h2-)|ubar)
    - h1' eta(u(h1+)|ubar) exactly in time (splitting at every crossing).
    """
    c, d = map(float, interval)
    s1, s2 = map(float, speeds)
    times = np.sort(np.asarray(times, dtype=float))
    h1 = lambda t: c + s1 * t
    h2 = lambda t: d + s2 * t
    if np.any(h2(times) <= h1(times)):
        raise ValueError("window collapses within the sampled times")

    def flux(t):
        a, b = h1(t), h2(t)
        ua = float(u(a, t))  # right state at a front
        pos = u.positions(t)[0]
        k = np.searchsorted(pos, b, side="left")
        ub = u.far_left if k == 0 else float(u.positions(t)[3][k - 1])
        ba, bb = float(ubar(a, t)), float(ubar(b, t))
        return (relative_flux(model, ua, ba) - relative_flux(model, ub, bb)
                + s2 * relative_entropy(model, ub, bb) - s1 * relative_entropy(model, ua, ba))

    kinks_x = ubar.datum.xs
    kinks_v = model.dA(ubar.datum.vs) * np.ones_like(kinks_x)
    nodes, weights = gauss_legendre(order)

    def flux_integral(a, b):
        cut = [np.array([a, b]), u.event_times[(u.event_times > a) & (u.event_times < b)]]
        for cc, sh in ((c, s1), (d, s2)):
            cut.append(_line_crossings(u.x0, u.speed, u.t0, cc, sh, a, b))
            cut.append(_line_crossings(kinks_x, kinks_v, np.zeros_like(kinks_x), cc, sh, a, b))
        edges = np.unique(np.concatenate(cut))
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += (hi - lo) * sum(w * flux(lo + (hi - lo) * z) for z, w in zip(nodes, weights))
        return total

    raw = np.array([relative_entropy_total(model, u, [ubar], [h1(t), h2(t)], t) for t in times])
    fluxes = np.array([flux_integral(a, b) for a, b in zip(times[:-1], times[1:])])
    corrected = raw - np.concatenate([[0.0], np.cumsum(fluxes)])
    increase = np.diff(corrected)
    return {
        "times": times, "raw": raw, "boundary_flux": fluxes, "corrected": corrected,
        "max_increase": float(increase.max()) if increase.size else 0.0,
        "raw_nonincreasing": bool(np.all(np.diff(raw) <= tol)),
        "flagged": bool(np.any(increase > tol)),
    }

"""The nine acceptance criteria at their stated sizes and tolerances.

Each test records one line in ``RESULTS``; conftest prints them at the end of
the run.
"""

import numpy as np
from scipy import integrate
from scipy.special import roots_legendre

from entroshift.approximation import StepFunction, build_liwas
from entroshift.checks import d_sm_at_equal_entropy, jensen_gap, random_shift_case
from entroshift.classical import (ClassicalSolution, MonotoneLipschitzFn, comparison_check,
                                  oleinik_modulus)
from entroshift.cli import main
from entroshift.flux import (FluxEntropyModel, rh_speed, shift_dissipation, shock_dissipation,
                             v_epsilon)
from entroshift.fronts import TentTest, evolve, kruzhkov_residual
from entroshift.pipeline import build_psi, certify_monotone_decay, l2_distance
from entroshift.shift import build_shift, dissipation_along, mollified_shift

RESULTS = {}

MODELS = {
    "burgers/square": FluxEntropyModel.from_spec("burgers", "square", B=2.0),
    "quartic/cosh": FluxEntropyModel.from_spec("quartic", "exp-cosh", B=2.0),
}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    assert ok, detail


def lambda_double_integral(model, uL, uR, order=48):
    """(1/2)(uR - uL)^-1 times the double integral of (eta'(u)-eta'(v))(A'(u)-A'(v))."""
    z, w = roots_legendre(order)
    lo, hi = min(uL, uR), max(uL, uR)
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * z
    wx = 0.5 * (hi - lo) * w
    U, V = np.meshgrid(x, x, indexing="ij")
    F = (model.deta(U) - model.deta(V)) * (model.dA(U) - model.dA(V))
    return 0.5 * float(wx @ F @ wx) / (uR - uL)


def test_criterion_1_shock_sign_law():
    rng = np.random.default_rng(1)
    worst, sign_fail, n_pairs = 0.0, 0, 0
    for name, m in MODELS.items():
        pairs = rng.uniform(-2, 2, (1400, 2))
        pairs = pairs[np.abs(pairs[:, 0] - pairs[:, 1]) > 1e-3][:1000]
        assert len(pairs) == 1000
        for uL, uR in pairs:
            lam = shock_dissipation(m, uL, uR)
            sign_fail += (lam < 0) != (uL > uR)
            worst = max(worst, abs(lam - lambda_double_integral(m, uL, uR)))
        n_pairs += len(pairs)
        # adaptive two-dimensional quadrature on a few pairs as a second oracle
        for uL, uR in pairs[:5]:
            lo, hi = min(uL, uR), max(uL, uR)
            f = lambda v, u: (m.deta(u) - m.deta(v)) * (m.dA(u) - m.dA(v))
            ref = 0.5 * integrate.dblquad(f, lo, hi, lo, hi, epsabs=1e-13)[0] / (uR - uL)
            worst = max(worst, abs(shock_dissipation(m, uL, uR) - ref))
    record(1, sign_fail == 0 and worst <= 1e-8,
           f"{n_pairs} pairs, sign failures {sign_fail}, max |Lambda - oracle| {worst:.2e}")


def test_criterion_2_velocity_bound():
    g = np.linspace(-2, 2, 50)
    worst, count = -np.inf, 0
    for m in MODELS.values():
        for eps in (0.0, 0.1):
            for u in g:
                bound = abs(float(m.dA(u)))
                for i, uL in enumerate(g):
                    for uR in g[:i + 1]:
                        worst = max(worst, abs(v_epsilon(m, u, uL, uR, eps)) - bound)
                        count += 1
    record(2, worst <= 1e-9, f"{count} grid triples, max |V| - |A'(u)| = {worst:.2e}")


def test_criterion_3_relative_flux_inequalities():
    rng = np.random.default_rng(3)
    worst_rh, worst_sm, worst_jensen = -np.inf, -np.inf, 0.0
    for m in MODELS.values():
        for a, b, c, d in rng.uniform(-2, 2, (1000, 4)):
            uL, uR = max(a, b), min(a, b)
            um, up = max(c, d), min(c, d)
            if um == up:
                continue
            worst_rh = max(worst_rh, shift_dissipation(m, um, up, uL, uR, rh_speed(m, um, up)))
        for a, b in rng.uniform(-2, 2, (1000, 2)):
            uL, uR = max(a, b), min(a, b)
            if uL - uR < 1e-3:
                continue
            dsm, _ = d_sm_at_equal_entropy(m, uL, uR)
            gap, mass, _ = jensen_gap(m, uL, uR)
            worst_sm = max(worst_sm, dsm)
            worst_jensen = max(worst_jensen, abs(dsm + mass * gap) / max(1.0, abs(dsm)))
    ok = worst_rh <= 1e-9 and worst_sm < -1e-12 and worst_jensen <= 1e-8
    record(3, ok, f"max d_rh {worst_rh:.2e}, max d_sm {worst_sm:.2e}, "
                  f"Jensen mismatch {worst_jensen:.2e}")


def _residual(model, sol, h, x=np.linspace(-0.7, 0.7, 15), t=1.0):
    vt = (sol(x, t + h) - sol(x, t - h)) / (2 * h)
    Ax = (model.A(sol(x + h, t)) - model.A(sol(x - h, t))) / (2 * h)
    return float(np.abs(vt + Ax).max())


def test_criterion_4_classical_solver():
    rng = np.random.default_rng(4)
    grid = np.linspace(-4, 4, 2001)
    min_order, worst_ol, comp_ok = np.inf, -np.inf, 0
    for m in MODELS.values():
        d = MonotoneLipschitzFn.from_function(lambda x: 0.8 * np.tanh(x), -3, 3, 40001)
        sol = ClassicalSolution(m, d)
        r = [_residual(m, sol, h) for h in (4e-2, 2e-2, 1e-2)]
        min_order = min(min_order, float(np.log2(r[0] / r[1])), float(np.log2(r[1] / r[2])))
        C = 1.0 / float(np.min(m.ddA(np.linspace(-2, 2, 10_001)) * np.ones(10_001)))
        for _ in range(5):
            xs = np.sort(rng.uniform(-2, 2, 6))
            vs = np.sort(rng.uniform(-1.8, 1.8, 6))
            s1 = ClassicalSolution(m, MonotoneLipschitzFn(xs, vs))
            for t in (0.5, 1.0, 2.0):
                worst_ol = max(worst_ol, oleinik_modulus(s1, t, grid) - C)
            lower = MonotoneLipschitzFn(xs, vs - rng.uniform(0.0, 0.2))
            comp_ok += comparison_check(s1, ClassicalSolution(m, lower), grid, [0.5, 1.0, 2.0])
    ok = min_order >= 1.8 and worst_ol <= 1e-6 and comp_ok == 10
    record(4, ok, f"observed order {min_order:.3f}, Oleinik excess {worst_ol:.2e}, "
                  f"comparison {comp_ok}/10")


def test_criterion_5_shift_construction():
    rng = np.random.default_rng(5)
    worst_lip, worst_D = -np.inf, -np.inf
    for m in MODELS.values():
        vmax = float(np.abs(m.dA(np.array([-m.B, m.B]))).max())
        for _ in range(5):
            u, top, bot, x0, eps = random_shift_case(m, rng)
            h = build_shift(m, u, top, bot, 0.0, x0, eps, 1.0)
            _, D = dissipation_along(m, u, top, bot, h)
            worst_lip = max(worst_lip, h.lip_bound - vmax)
            worst_D = max(worst_D, float(D.max()) - eps)
    m = MODELS["burgers/square"]
    u = evolve(m, [1.0, -1.0], [0.0], 1.0)
    top = ClassicalSolution(m, MonotoneLipschitzFn.constant(1.0))
    bot = ClassicalSolution(m, MonotoneLipschitzFn.constant(-1.0))
    # starts at -0.2 so the path reaches the shock (t = 0.6) and stays on it
    h = build_shift(m, u, top, bot, 0.0, -0.2, 0.0, 1.0)
    hn = mollified_shift(m, u, top, bot, 0.0, -0.2, 0.0, 1.0, 1000)
    sup = float(np.abs(hn.xs - h(hn.ts)).max())
    ok = worst_lip <= 1e-9 and worst_D <= 1e-9 and sup <= 1e-2
    record(5, ok, f"10 scenarios: Lip excess {worst_lip:.2e}, D - eps {worst_D:.2e}; "
                  f"mollified n=1000 sup gap {sup:.2e}")


def _l2(f, g, M, breaks, order=12, width=0.01):
    z, w = roots_legendre(order)
    pts = np.unique(np.concatenate([[-M, M], breaks, np.linspace(-M, M, int(2 * M / width) + 1)]))
    pts = pts[(pts >= -M) & (pts <= M)]
    a, b = pts[:-1, None], pts[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * z
    vals = (f(x.ravel()) - g(x.ravel())).reshape(x.shape) ** 2
    return float(np.sqrt(np.sum(0.5 * (b - a) * w * vals)))


def test_criterion_6_liwas_density():
    rng = np.random.default_rng(6)
    M = 2.0
    saw_jumps = np.array([0.7 - k for k in range(4)])
    cases = [("sin 3x", lambda x: np.sin(3 * x), np.array([])),
             ("sawtooth", lambda x: 2.0 * ((x + 0.3) % 1.0) - 1.0, saw_jumps)]
    for k in range(3):
        s = StepFunction(np.sort(rng.uniform(-1.8, 1.8, 5)), rng.uniform(-2, 2, 6))
        cases.append((f"steps {k}", s, s.positions))
    worst, failures = 0.0, []
    for name, f, jumps in cases:
        sup_f = float(np.abs(f(np.linspace(-M, M, 100_001))).max())
        for eps in (0.1, 0.01):
            v, _ = build_liwas(f, M, eps)
            err = _l2(f, v, M, np.concatenate([v.breakpoints(), jumps]))
            worst = max(worst, err / eps)
            if isinstance(f, StepFunction):
                contained = set(v.jumps.tolist()) <= set(jumps.tolist())
            else:
                # every down-jump of the result sits on a jump of f or a dyadic cell edge
                cell = 2 * M * 2.0 ** -40
                contained = np.all(np.abs(np.round((v.jumps + M) / cell) * cell - M - v.jumps) == 0)
            if not (err < eps and v.sup_norm <= sup_f and contained):
                failures.append((name, eps))
    record(6, not failures, f"{2 * len(cases)} fits, max L2 error / eps {worst:.3f}, "
                            f"failures {failures}")


def test_criterion_7_end_to_end():
    m = MODELS["burgers/square"]
    u = evolve(m, [1.5, 0.5, 1.0, -1.0], [-1.0, -0.5, 0.5], 1.0, delta=1e-3)
    res = build_psi(m, u, 1.0, 2.0, 1e-2)
    C = 1.0 / float(np.min(m.ddA(np.linspace(-2, 2, 10_001)) * np.ones(10_001)))
    merging = evolve(m, [2.0, 0.0, -2.0], [-1.0, 1.0], 2.0)
    mres = build_psi(m, merging, 2.0, 2.0, 0.05)
    ok = (res.rel_entropy_total <= 1e-2 + 1e-6 and res.oleinik_modulus <= C * (1 + 1e-6)
          and res.sup_norm <= u.sup_norm and res.passed
          and len(mres.merge_log) >= 1 and mres.passed)
    record(7, ok, f"rel entropy {res.rel_entropy_total:.3e}, modulus {res.oleinik_modulus:.4f} "
                  f"(C = {C:g}), sup {res.sup_norm:g}; merge_log {mres.merge_log}")


def test_criterion_8_convergence():
    m = MODELS["burgers/square"]
    c_star = float(np.min(m.ddeta(np.linspace(-2, 2, 10_001)) * np.ones(10_001))) / 2
    C = 1.0 / float(np.min(m.ddA(np.linspace(-2, 2, 10_001)) * np.ones(10_001)))
    u = evolve(m, [1.5, 0.5, 1.0, -1.0], [-1.0, -0.5, 0.5], 1.0, delta=1e-3)
    dists, bounds, cond = [], [], True
    for j in range(4):
        eps_j = 1e-2 * 2.0 ** -j
        # int eta(u | psi) <= eps_j^2 gives ||psi - u|| <= eps_j / sqrt(c*)
        res = build_psi(m, u, 1.0, 2.0, eps_j ** 2)
        dists.append(l2_distance(res.psi, u, 1.0))
        bounds.append(eps_j / np.sqrt(c_star))
        cond &= res.oleinik_modulus <= C * (1 + 1e-6) and res.passed
    within = all(d <= b for d, b in zip(dists, bounds))
    monotone = all(b <= a * (1 + 1e-9) for a, b in zip(dists[:-1], dists[1:]))
    record(8, within and monotone and cond,
           "L2 " + ", ".join(f"{d:.3e}<={b:.3e}" for d, b in zip(dists, bounds))
           + f"; monotone {monotone}")


def test_criterion_9_negative_control(tmp_path):
    m = FluxEntropyModel.from_spec("burgers", "square", B=1.0)
    lam = shock_dissipation(m, -1.0, 1.0)
    u = evolve(m, [-1.0, 1.0], [0.0], 1.0, nonentropic_allowed=True)
    kr = kruzhkov_residual(u, 0.0, TentTest(0.0, 1.0, 0.5, 0.5))
    ubar = ClassicalSolution(m, MonotoneLipschitzFn([-0.5, 0.5], [-1.0, 1.0]))
    dec = certify_monotone_decay(m, u, ubar, (-3.0, 3.0), np.linspace(0, 1, 11))
    code = main(["run", "--scenario", "nonentropic.json", "--out", str(tmp_path)])
    ok = abs(lam - 4 / 3) <= 1e-8 and kr < 0 and dec["flagged"] and code == 1
    record(9, ok, f"Lambda {lam:.10f}, Kruzhkov residual {kr:.4f}, decay flagged "
                  f"{dec['flagged']}, exit code {code}")

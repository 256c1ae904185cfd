"""Seeded property sweeps over the pointwise functionals and the shift builder."""

import numpy as np

from .classical import ClassicalSolution, MonotoneLipschitzFn
from .flux import (equal_entropy_state, relative_entropy, relative_flux, rh_speed,
                   shift_dissipation, shock_dissipation, v_epsilon)
from .fronts import evolve
from .shift import build_shift, dissipation_along

TOL = 1e-9


def jensen_gap(model, uL, uR, n=64):
    """E[A] - A(E[u]) under the measure eta'' dv on [uR, uL]; positive by Jensen."""
    x, w = np.polynomial.legendre.leggauss(n)
    v = 0.5 * (uL + uR) + 0.5 * (uL - uR) * x
    w = 0.5 * (uL - uR) * w * model.ddeta(v) * np.ones_like(v)
    mass = w.sum()
    mean_u = (w * v).sum() / mass
    mean_A = (w * model.A(v)).sum() / mass
    return float(mean_A - model.A(mean_u)), float(mass), float(mean_u)


def d_sm_at_equal_entropy(model, uL, uR):
    """q(u; uR) - q(u; uL) at the state with eta(u|uL) = eta(u|uR)."""
    u = equal_entropy_state(model, uL, uR)
    return relative_flux(model, u, uR) - relative_flux(model, u, uL), u


def lemma_checks(model, samples=1000, seed=0, bound=None):
    """Pass counts per property; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    B = model.B if bound is None else bound
    report = {}

    pairs = rng.uniform(-B, B, (samples, 2))
    pairs = pairs[np.abs(pairs[:, 0] - pairs[:, 1]) > 1e-3]
    ok = sum((shock_dissipation(model, a, b) < 0) == (a > b) for a, b in pairs)
    report["shock_sign"] = (int(ok), int(len(pairs)))

    trip = rng.uniform(-B, B, (samples, 3))
    ok = 0
    for u, a, b in trip:
        uL, uR = max(a, b), min(a, b)
        eps = float(rng.choice([0.0, 0.1]))
        ok += abs(v_epsilon(model, u, uL, uR, eps)) <= abs(float(model.dA(u))) + TOL
    report["velocity_bound"] = (int(ok), samples)

    quad = rng.uniform(-B, B, (samples, 4))
    ok = 0
    for a, b, c, d in quad:
        uL, uR = max(a, b), min(a, b)
        um, up = max(c, d), min(c, d)
        if um == up:
            ok += 1
            continue
        ok += shift_dissipation(model, um, up, uL, uR, rh_speed(model, um, up)) <= TOL
    report["d_rh"] = (int(ok), samples)

    ok = 0
    for a, b in rng.uniform(-B, B, (samples, 2)):
        uL, uR = max(a, b), min(a, b)
        if uL - uR < 1e-3:
            ok += 1
            continue
        d, u = d_sm_at_equal_entropy(model, uL, uR)
        gap, mass, _ = jensen_gap(model, uL, uR)
        ok += d < -1e-12 and gap > 0 and abs(d + mass * gap) <= 1e-8 * max(1.0, abs(d))
    report["d_sm"] = (int(ok), samples)

    ok = 0
    for a, b in rng.uniform(-B, B, (samples, 2)):
        if a == b:
            ok += 1
            continue
        ok += relative_entropy(model, a, b) > 0
    report["relative_entropy_positive"] = (int(ok), samples)

    report["shift_dissipation"] = shift_sweep(model, max(1, min(10, samples // 100)), rng)
    return report


def random_shift_case(model, rng):
    """Random step data, ordered constant-or-ramp references and a start point."""
    B = model.B
    n = int(rng.integers(1, 4))
    pos = np.sort(rng.uniform(-1.0, 1.0, n))
    states = rng.uniform(-0.9 * B, 0.9 * B, n + 1)
    u = evolve(model, states, pos, 1.0, delta=0.05 * B)
    lo, hi = np.sort(rng.uniform(-0.9 * B, 0.9 * B, 2))
    w = float(rng.uniform(0.2, 1.0))
    top = MonotoneLipschitzFn([-w, w], [lo + 0.5 * (hi - lo), hi])
    bottom = MonotoneLipschitzFn([-w, w], [lo, lo + 0.5 * (hi - lo)])
    x0 = float(rng.uniform(-1.0, 1.0))
    eps = float(rng.choice([0.0, 0.01, 0.1]))
    return u, ClassicalSolution(model, top), ClassicalSolution(model, bottom), x0, eps


def shift_sweep(model, n, rng):
    ok = 0
    for _ in range(n):
        u, top, bottom, x0, eps = random_shift_case(model, rng)
        path = build_shift(model, u, top, bottom, 0.0, x0, eps, 1.0)
        _, D = dissipation_along(model, u, top, bottom, path)
        vmax = float(np.abs(model.dA(np.array([-model.B, model.B]))).max())
        ok += D.max() <= eps + TOL and path.lip_bound <= vmax + TOL
    return (int(ok), n)

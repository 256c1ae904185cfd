import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import roots_legendre

from entroshift.approximation import (LiwasFn, StepFunction, build_liwas, layer_decompose,
                                      mollify_up_jumps)
from entroshift.classical import ClassicalSolution, MonotoneLipschitzFn


def l2_error(f, g, M, breaks=(), order=12, max_width=0.01):
    """Gauss-Legendre on every interval between breakpoints, cut to max_width."""
    pts = np.unique(np.concatenate([[-M, M], np.asarray(breaks, float),
                                    np.linspace(-M, M, int(2 * M / max_width) + 1)]))
    pts = pts[(pts >= -M) & (pts <= M)]
    z, w = roots_legendre(order)
    a, b = pts[:-1, None], pts[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * z
    # evaluate one-sided values strictly inside each interval
    vals = (f(x.ravel()) - g(x.ravel())).reshape(x.shape) ** 2
    return float(np.sqrt(np.sum(0.5 * (b - a) * w * vals)))


def rel_entropy(model, a, b):
    return model.eta(a) - model.eta(b) - model.deta(b) * (a - b)


def sawtooth(x):
    return 2.0 * ((x + 0.3) % 1.0) - 1.0


def staircase(k0=1.0):
    return LiwasFn([-0.5, 0.5], [MonotoneLipschitzFn.constant(v) for v in (k0, 0.0, -1.0)], 2.0)


def test_constant_input():
    v, rep = build_liwas(lambda x: np.full_like(x, 0.7), 1.0, 0.1)
    assert v.n_jumps == 0 and rep["n_up"] == 0
    assert v(np.linspace(-1, 1, 5)) == pytest.approx(0.7)


def test_single_down_step_reproduced():
    f = lambda x: np.where(x < 0, 1.0, -1.0)
    v, rep = build_liwas(f, 1.0, 0.1)
    assert rep["fit_error"] == 0.0 and v.n_jumps == 1
    assert v.jumps[0] == 0.0
    x = np.linspace(-1, 1, 41)
    np.testing.assert_array_equal(v(x), f(x))


@pytest.mark.parametrize("eps", [0.1, 0.01])
@pytest.mark.parametrize("name,f", [("sin", lambda x: np.sin(3 * x)), ("saw", sawtooth)])
def test_l2_error_smooth_and_sawtooth(name, f, eps):
    M = 2.0
    v, rep = build_liwas(f, M, eps)
    err = l2_error(f, v, M, np.concatenate([v.breakpoints(), [0.7 - k for k in range(4)]]))
    assert err < eps
    assert err <= rep["bound"] * (1 + 1e-6)
    assert v.sup_norm <= float(np.abs(f(np.linspace(-M, M, 40001))).max()) + 1e-12


@given(seed=st.integers(0, 10_000), eps=st.sampled_from([0.1, 0.01]))
@settings(max_examples=20, deadline=None)
def test_random_steps(seed, eps):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    s = StepFunction(np.sort(rng.uniform(-1.8, 1.8, n)), rng.uniform(-2, 2, n + 1))
    v, rep = build_liwas(s, 2.0, eps)
    down = s.positions[np.diff(s.states) < 0]
    np.testing.assert_array_equal(v.jumps, down)
    assert v.sup_norm <= s.sup_norm
    assert l2_error(s, v, 2.0, np.concatenate([v.breakpoints(), s.positions])) < eps


def test_mollified_unit_jump():
    r = mollify_up_jumps([0.0], [1.0], 0.1)
    assert r(-0.1) == 0.0 and r(0.1) == 1.0
    assert r(0.0) == pytest.approx(0.5, abs=1e-12)
    assert r.xs[0] == pytest.approx(-0.1) and r.xs[-1] == pytest.approx(0.1)
    assert mollify_up_jumps([], [], 0.1)(np.array([0.3]))[0] == 0.0


def test_mollifier_error_rate():
    step = lambda x: (x > 0).astype(float)
    errs = [l2_error(step, mollify_up_jumps([0.0], [1.0], d), 1.0, [0.0, -d, d])
            for d in (0.04, 0.01)]
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=1e-3)


def test_layers_of_single_step():
    v0 = LiwasFn([0.0], [MonotoneLipschitzFn.constant(1.0), MonotoneLipschitzFn.constant(-1.0)], 1.0)
    a, b = layer_decompose(v0)
    x = np.linspace(-3, 3, 13)
    assert np.all(a(x) == 1.0) and np.all(b(x) == -1.0)


def test_layers_without_jumps():
    p = MonotoneLipschitzFn([-1, 1], [-0.5, 0.5])
    (lay,) = layer_decompose(LiwasFn([], [p], 2.0))
    assert lay is p


def test_staircase_layers():
    l1, l2, l3 = layer_decompose(staircase())
    x = np.linspace(-2, 2, 81)
    assert np.all(l1(x) == 1.0) and np.all(l3(x) == -1.0)
    assert np.all(l2(x) == 0.0)
    assert np.all(l1(x) >= l2(x)) and np.all(l2(x) >= l3(x))


def random_liwas(rng, M=2.0):
    s = StepFunction(np.sort(rng.uniform(-1.5, 1.5, 6)), rng.uniform(-1.5, 1.5, 7))
    return build_liwas(s, M, 0.05)[0]


def test_layer_properties(model):
    rng = np.random.default_rng(13)
    x = np.linspace(-3, 3, 1201)
    for _ in range(5):
        v0 = random_liwas(rng)
        layers = layer_decompose(v0)
        edges = np.concatenate([[-np.inf], v0.jumps, [np.inf]])
        for i, lay in enumerate(layers):
            assert lay.sup_norm <= v0.sup_norm + 1e-12
            inside = (x > edges[i]) & (x < edges[i + 1])
            np.testing.assert_allclose(lay(x[inside]), v0(x[inside]), atol=1e-12)
        sols = [ClassicalSolution(model, lay) for lay in layers]
        for t in (0.0, 0.5, 1.5):
            vals = np.array([s(x, t) for s in sols])
            assert np.all(np.diff(vals, axis=0) <= 1e-12)

        # gluing identity for a sampled g
        g = np.cos(2 * x)
        glued = np.empty_like(x)
        for i, lay in enumerate(layers):
            inside = (x > edges[i]) & (x < edges[i + 1])
            glued[inside] = rel_entropy(model, g[inside], lay(x[inside]))
        direct = rel_entropy(model, g, v0(x))
        off = ~np.isin(x, v0.jumps)
        np.testing.assert_allclose(glued[off], direct[off], atol=1e-12)

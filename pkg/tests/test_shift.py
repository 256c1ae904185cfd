import numpy as np
import pytest

from entroshift.checks import random_shift_case
from entroshift.classical import ClassicalSolution, MonotoneLipschitzFn
from entroshift.flux import OrderingError, v_epsilon
from entroshift.fronts import evolve
from entroshift.shift import (FRONT, ShiftPath, build_shift, dissipation_along,
                              mollified_shift)


def const(model, c):
    return ClassicalSolution(model, MonotoneLipschitzFn.constant(c))


def test_stationary_shock_is_captured(burgers):
    u = evolve(burgers, [1.0, -1.0], [0.0], 1.0)
    h = build_shift(burgers, u, const(burgers, 1.0), const(burgers, -1.0), 0.0, 0.0, 0.0, 1.0)
    assert np.all(h.xs == 0.0)
    assert np.all(h.modes == FRONT)
    _, D = dissipation_along(burgers, u, const(burgers, 1.0), const(burgers, -1.0), h)
    assert np.all(np.abs(D) <= 1e-14)


def test_constant_state_constant_speed(model):
    u = evolve(model, [0.4], [], 1.0)
    top, bot = const(model, 1.0), const(model, -0.5)
    h = build_shift(model, u, top, bot, 0.0, 0.2, 0.05, 1.0)
    v = v_epsilon(model, 0.4, 1.0, -0.5, 0.05)
    np.testing.assert_allclose(h.slopes, v, rtol=1e-13, atol=1e-15)
    assert h(1.0) == pytest.approx(0.2 + v, abs=1e-12)


def test_path_absorbed_by_front(burgers):
    u = evolve(burgers, [1.0, -1.0], [0.0], 3.0)
    h = build_shift(burgers, u, const(burgers, 1.0), const(burgers, -1.0), 0.0, -0.5, 0.0, 3.0)
    # speed 1/3 in the left state, lands on the shock at t = 1.5
    assert h(0.75) == pytest.approx(-0.25, abs=1e-12)
    assert h(1.5) == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.abs(h(np.linspace(1.5, 3.0, 31))) <= 1e-12)


def test_linear_and_truncate():
    p = ShiftPath.linear(0.5, 1.0, -2.0, 2.0)
    assert p(1.5) == pytest.approx(-1.0)
    q = p.truncate(1.0)
    assert q.t_end == 1.0 and q(1.0) == pytest.approx(0.0)
    assert q.lip_bound == 2.0


def test_order_enforced(burgers):
    u = evolve(burgers, [0.0], [], 1.0)
    with pytest.raises(OrderingError):
        build_shift(burgers, u, const(burgers, -1.0), const(burgers, 1.0), 0.0, 0.0, 0.0, 1.0)


def test_random_cases_certified(model):
    rng = np.random.default_rng(21)
    vmax = float(np.abs(model.dA(np.array([-model.B, model.B]))).max())
    for _ in range(4):
        u, top, bot, x0, eps = random_shift_case(model, rng)
        h = build_shift(model, u, top, bot, 0.0, x0, eps, 1.0)
        _, D = dissipation_along(model, u, top, bot, h)
        assert D.max() <= eps + 1e-9
        assert h.lip_bound <= vmax + 1e-9
        # stored velocities agree with the sampled slopes
        seg = np.diff(h.ts) > 1e-9
        fd = np.diff(h.xs)[seg] / np.diff(h.ts)[seg]
        np.testing.assert_allclose(h.slopes[seg], fd, atol=1e-6)


def test_mollified_paths_approach_event_driven(burgers):
    u = evolve(burgers, [1.0, -1.0], [0.0], 1.0)
    top, bot = const(burgers, 1.0), const(burgers, -1.0)
    h = build_shift(burgers, u, top, bot, 0.0, -0.5, 0.0, 1.0)
    ts = np.linspace(0.0, 1.0, 11)
    errs = []
    for n in (10, 100):
        hn = mollified_shift(burgers, u, top, bot, 0.0, -0.5, 0.0, 1.0, n, dt=1e-3)
        errs.append(float(np.abs(hn(ts) - h(ts)).max()))
    assert errs[1] < errs[0]
    assert errs[1] < 1e-2

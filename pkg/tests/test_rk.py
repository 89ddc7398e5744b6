import numpy as np
import pytest

from mkdv2c.errors import DomainError
from mkdv2c.rk import (
    OdeResult,
    SecondOrderDense,
    integrate_adaptive,
    oracle_terminal_state,
)


def _exp_rhs(t, y):
    return np.array([y[0]])


def test_reaches_end_with_requested_accuracy():
    res = integrate_adaptive(_exp_rhs, 0.0, [1.0], 1.0, rtol=1e-10, atol=1e-10)
    assert res.status == "completed"
    assert res.ts[-1] == 1.0
    assert abs(res.ys[-1, 0] - np.e) < 1e-9


def test_zero_length_interval_returns_single_node():
    res = integrate_adaptive(_exp_rhs, 0.5, [2.0], 0.5, rtol=1e-10, atol=1e-10)
    assert res.status == "completed"
    assert len(res.ts) == 1
    assert res.ys[0, 0] == 2.0


def test_backward_integration():
    res = integrate_adaptive(_exp_rhs, 1.0, [np.e], 0.0, rtol=1e-11, atol=1e-11)
    assert abs(res.ys[-1, 0] - 1.0) < 1e-9


def test_blowup_ends_in_underflow_status():
    # y' = y^2 from y(0)=1 blows up at t=1
    res = integrate_adaptive(lambda t, y: y * y, 0.0, [1.0], 2.0, rtol=1e-10, atol=1e-10)
    assert res.status == "underflow"
    assert res.event_t == pytest.approx(1.0, abs=1e-3)


def test_guard_crossing_is_localized():
    # y' = -1 from 1: guard y > 0 crosses exactly at t = 1
    res = integrate_adaptive(
        lambda t, y: np.array([-1.0]), 0.0, [1.0], 5.0,
        rtol=1e-10, atol=1e-10, guard=lambda t, y: y[0],
    )
    assert res.status == "guard"
    assert res.event_t == pytest.approx(1.0, abs=1e-9)
    assert res.ts[-1] <= 1.0


def test_tolerance_controls_terminal_error():
    # nonlinear oscillator y'' = -y^3; compare against a very tight run
    def f(t, y):
        return np.array([y[1], -y[0] ** 3])

    ref = oracle_terminal_state(f, 0.0, [1.0, 0.0], 10.0, rtol=1e-13, atol=1e-13)
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        res = integrate_adaptive(f, 0.0, np.array([1.0, 0.0]), 10.0, rtol=tol, atol=tol)
        errs.append(np.max(np.abs(res.ys[-1] - ref)))
    assert errs[0] > errs[1] > errs[2]
    slope = np.polyfit(np.log([1e-6, 1e-8, 1e-10]), np.log(errs), 1)[0]
    assert 0.5 < slope < 1.5


def test_max_step_is_respected():
    res = integrate_adaptive(_exp_rhs, 0.0, [1.0], 1.0, rtol=1e-6, atol=1e-6, max_step=1e-2)
    assert np.max(np.diff(res.ts)) <= 1e-2 + 1e-12


class TestSecondOrderDense:
    def _dense_for(self, func, dfunc, d2func, nodes):
        ys = np.stack([func(nodes), dfunc(nodes)], axis=1)
        fs = np.stack([dfunc(nodes), d2func(nodes)], axis=1)
        return SecondOrderDense(nodes, ys, fs, [(0, 1)])

    def test_reproduces_quintic_exactly(self):
        # p(t) = t^5 is reproduced exactly by the quintic Hermite pieces
        nodes = np.linspace(0.0, 2.0, 5)
        dense = self._dense_for(
            lambda t: t ** 5, lambda t: 5 * t ** 4, lambda t: 20 * t ** 3, nodes
        )
        ts = np.linspace(0.0, 2.0, 41)
        assert np.allclose(dense.positions(ts)[:, 0], ts ** 5, atol=1e-12)
        assert np.allclose(dense.velocities(ts)[:, 0], 5 * ts ** 4, atol=1e-11)
        assert np.allclose(dense.accelerations(ts)[:, 0], 20 * ts ** 3, atol=1e-10)

    def test_sixth_order_interpolation_error(self):
        nodes = np.linspace(0.0, np.pi, 30)
        dense = self._dense_for(np.sin, np.cos, lambda t: -np.sin(t), nodes)
        ts = np.linspace(0.0, np.pi, 301)
        h = nodes[1] - nodes[0]
        err = np.max(np.abs(dense.positions(ts)[:, 0] - np.sin(ts)))
        assert err < h ** 6  # ~ |f^(6)| h^6 / 46080 with plenty of slack

    def test_refuses_extrapolation(self):
        nodes = np.linspace(0.0, 1.0, 4)
        dense = self._dense_for(np.sin, np.cos, lambda t: -np.sin(t), nodes)
        with pytest.raises(DomainError):
            dense.positions(1.5)
        with pytest.raises(DomainError):
            dense.state(-0.1)

    def test_state_layout_matches_components(self):
        nodes = np.linspace(0.0, 1.0, 6)
        ys = np.stack([np.sin(nodes), np.cos(nodes), np.cos(nodes), -np.sin(nodes)], axis=1)
        fs = np.stack([np.cos(nodes), -np.sin(nodes), -np.sin(nodes), -np.cos(nodes)], axis=1)
        dense = SecondOrderDense(nodes, ys, fs, [(0, 1), (2, 3)])
        st = dense.state(0.4)
        assert st.shape == (4,)
        assert st[0] == pytest.approx(np.sin(0.4), abs=1e-10)
        assert st[1] == pytest.approx(np.cos(0.4), abs=1e-10)
        assert st[2] == pytest.approx(np.cos(0.4), abs=1e-10)
        assert st[3] == pytest.approx(-np.sin(0.4), abs=1e-10)


def test_dense_output_accuracy_on_integrated_airy(airy_table):
    # integrate y'' = (t/3) y and compare dense values off the solver nodes
    def f(t, y):
        return np.array([y[1], (t / 3.0) * y[0]])

    y0 = np.array([airy_table[0, 1], airy_table[0, 2]])
    res = integrate_adaptive(f, 0.0, y0, 2.0, rtol=1e-12, atol=1e-12)
    dense = SecondOrderDense(res.ts, res.ys, res.fs, [(0, 1)])
    vals = dense.positions(airy_table[:, 0])[:, 0]
    assert np.max(np.abs(vals - airy_table[:, 1])) < 1e-11

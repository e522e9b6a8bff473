import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqbqr.control import (AnfisController, PidController, PvPanel, Scenario, TrainingSample,
                           anfis_infer, anfis_train, build_training_set, closed_loop_metrics,
                           closed_loop_simulate, default_model, demo_dataset, fit_panel,
                           linear_dataset, loss_and_grad, normalized_firing, pid_step,
                           pv_operating_point)
from mqbqr.control.anfis import AnfisModel, rmse
from mqbqr.control.closed_loop import write_closed_loop_csv
from mqbqr.csvio import read_csv
from mqbqr.errors import DomainError
from mqbqr.simulator import find_steady_state

# -- PID


def test_pid_zero_error_constant():
    c = PidController(0.1, 0.2, 0.3, nominal=0.4)
    assert [pid_step(c, 0.0, 1e-3) for _ in range(5)] == [0.4] * 5


def test_pid_proportional_only():
    assert pid_step(PidController(0.1, 0.0, 0.0, nominal=0.4), 1.0, 1e-3) == pytest.approx(0.5)


def test_pid_anti_windup_three_steps():
    c = PidController(Kp=1.0, Ki=1.0, Kd=0.0, nominal=0.5, D_max=0.95)
    for _ in range(3):
        assert pid_step(c, 100.0, 1e-3) == 0.95
        assert c.integrator == 0.0
    # once the error drops the integrator resumes from where it was frozen
    assert pid_step(c, 0.1, 1e-3) == pytest.approx(0.5 + 0.1 + 1e-4)
    assert c.integrator == pytest.approx(1e-4)


def test_pid_clamp_validation():
    with pytest.raises(ValueError):
        PidController(1, 1, D_min=0.9, D_max=0.1)


# -- ANFIS inference


def test_single_rule_is_affine():
    m = AnfisModel(np.array([[-2.0, 0.0, 2.0]]), np.array([[-2.0, 0.0, 2.0]]),
                   np.array([[0.1, -0.05, 0.5]]))
    for e, de in [(0.3, 0.2), (-0.7, 0.9), (0.0, 0.0)]:
        assert anfis_infer(m, e, de) == pytest.approx(0.1 * e - 0.05 * de + 0.5, abs=1e-15)


def test_symmetric_model_centre():
    m = default_model(5, 0.42)
    K = m.K
    p = np.linspace(-0.1, 0.1, K * K)   # antisymmetric under rule reversal
    conseq = m.conseq.copy()
    conseq[:, 0] = p
    conseq[:, 1] = -p
    m = AnfisModel(m.mf_e, m.mf_de, conseq)
    assert anfis_infer(m, 0.0, 0.0) == pytest.approx(0.42, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_firing_strengths_sum_to_one(e, de):
    assert normalized_firing(default_model(4), e, de).sum() == pytest.approx(1.0, abs=1e-12)


def test_scalar_and_vector_paths_agree():
    m, _ = anfis_train(default_model(3), demo_dataset(100), 20)
    e = np.linspace(-1, 1, 9)
    de = np.linspace(1, -1, 9)
    v = anfis_infer(m, e, de)
    s = [anfis_infer(m, a, b) for a, b in zip(e, de)]
    np.testing.assert_allclose(v, s, rtol=0, atol=1e-14)


def test_sample_duty_validated():
    with pytest.raises(ValueError):
        TrainingSample(0.0, 0.0, 1.5)


# -- ANFIS training


def test_zero_epochs_is_identity():
    m = default_model(3)
    m2, hist = anfis_train(m, linear_dataset(20), 0)
    assert m2 is m and hist == []


def test_gradient_check():
    data = demo_dataset(150, seed=2)
    m, _ = anfis_train(default_model(4), data, 5)
    e, de, t = (np.array(x) for x in zip(*[(s.e, s.de, s.duty) for s in data]))
    _, g = loss_and_grad(m, e, de, t)
    v = m.params_vector()
    rng = np.random.default_rng(7)
    for i in rng.choice(len(v), 10, replace=False):
        h = 1e-6 * max(1.0, abs(v[i]))
        up, dn = v.copy(), v.copy()
        up[i] += h
        dn[i] -= h
        fd = (loss_and_grad(m.with_vector(up), e, de, t)[0]
              - loss_and_grad(m.with_vector(dn), e, de, t)[0]) / (2 * h)
        assert abs(g[i] - fd) <= 1e-4 * abs(fd) + 1e-10


def test_linear_target_converges():
    data = linear_dataset(200, seed=0)
    m, hist = anfis_train(default_model(5, 0.4), data, 200)
    assert len(hist) == 200
    assert hist[-1] < 1e-3


def test_demo_training_decreases():
    data = demo_dataset(300)
    m0 = default_model(4, 0.5)
    e, de, t = (np.array(x) for x in zip(*[(s.e, s.de, s.duty) for s in data]))
    _, hist = anfis_train(m0, data, 50)
    assert hist[-1] < rmse(m0, e, de, t)


def test_training_is_deterministic():
    a = anfis_train(default_model(3), demo_dataset(100, 5), 10)[0].params_vector()
    b = anfis_train(default_model(3), demo_dataset(100, 5), 10)[0].params_vector()
    assert np.array_equal(a, b)


# -- closed loop


def test_metrics_by_hand():
    t = np.arange(10.0)
    v = np.array([0, 5, 11, 10.5, 9.7, 10.1, 10, 10, 10, 10.0])
    ts, os_, sse = closed_loop_metrics(t, v, 10.0)
    assert ts == 5.0 and os_ == pytest.approx(10.0) and sse == 0.0


def test_equilibrium_hold(t3):
    ss = find_steady_state(t3, with_measurements=False)
    Vref = float(ss.x_periodic[6])
    c = PidController(1e-3, 1e-2, 0.0, nominal=t3.D)
    r = closed_loop_simulate(t3, c, Vref, 0.02)
    assert np.max(np.abs(r.duty - t3.D)) < 1e-9
    assert r.steady_state_error < 1e-9


def test_training_set_basics(t3):
    pid = PidController(1e-3, 1e-2, 1e-6, nominal=0.45)
    assert build_training_set(t3, pid, []) == []
    sc = [Scenario(30.0, 0.01), Scenario(40.0, 0.01)]
    a = build_training_set(t3, pid, sc, seed=3, max_samples=300)
    b = build_training_set(t3, pid, sc, seed=3, max_samples=300)
    assert a == b and len(a) == 300
    assert all(pid.D_min <= s.duty <= pid.D_max for s in a)


def test_pid_reaches_52(loop52):
    r = loop52["pid_run"]
    tail = r.Vo[-len(r.Vo) // 10:]
    assert np.max(np.abs(tail - 52.0)) <= 1.04


def test_anfis_reaches_52(loop52):
    r = loop52["anfis_run"]
    tail = r.Vo[-len(r.Vo) // 10:]
    assert np.max(np.abs(tail - 52.0)) <= 1.04


def test_metrics_from_csv(loop52, tmp_path):
    r = loop52["pid_run"]
    _, rows = read_csv(write_closed_loop_csv(r, tmp_path / "c.csv"))
    t = np.array([float(x[0]) for x in rows])
    v = np.array([float(x[1]) for x in rows])
    ts, os_, sse = closed_loop_metrics(t, v, 52.0)
    assert ts == pytest.approx(r.settling_time, rel=1e-8)
    assert os_ == pytest.approx(r.overshoot, rel=1e-6)
    assert sse == pytest.approx(r.steady_state_error, rel=1e-5, abs=1e-8)


def test_anfis_controller_clamps():
    m = AnfisModel(np.array([[-2.0, 0.0, 2.0]]), np.array([[-2.0, 0.0, 2.0]]),
                   np.array([[0.0, 0.0, 0.99]]))
    assert AnfisController(m, 0.05, 0.9).step(0.0, 1e-5) == 0.9


# -- PV panel


def test_pv_points():
    panel = PvPanel()
    fit = fit_panel(panel)
    assert pv_operating_point(panel, 37.8, fit) == pytest.approx(0.0, abs=1e-9)
    assert pv_operating_point(panel, 0.0, fit) == pytest.approx(8.3, rel=1e-12)
    assert pv_operating_point(panel, 36.3, fit) == pytest.approx(7.35, rel=0.01)
    assert panel.pmax_conflict == pytest.approx(53.805)
    with pytest.raises(DomainError):
        pv_operating_point(panel, 40.0, fit)

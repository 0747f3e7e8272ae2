import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pinswitch import switchnet as sn
from pinswitch.dynamics import DynamicsSpec, cnn_spec
from pinswitch.instances import SLOW_EMBEDDED
from pinswitch.markov import SwitchPath, assemble_generator, sample_path

ZERO = DynamicsSpec(f=lambda x, t=0.0: np.zeros_like(x), n=1)
CP = sn.CouplingParams(kappa=10.0, eps=1.0)


def exact_forced(t):
    # x' = -x + sin t, x(0) = 1
    return 1.5 * np.exp(-t) + 0.5 * (np.sin(t) - np.cos(t))


def integrate_scalar(h, T=1.0):
    y, n = np.array([1.0]), int(round(T / h))
    for k in range(n):
        y = sn.rk4_step(lambda v, t: -v + np.sin(t), y, k * h, h)
    return y[0]


def test_rk4_single_step_closed_form():
    y = sn.rk4_step(lambda v, t: -v, np.array([1.0]), 0.0, 0.1)
    assert y[0] == pytest.approx(sum((-0.1) ** k / np.prod(range(1, k + 1)) for k in range(5)), abs=1e-15)
    assert y[0] == pytest.approx(0.9048375, abs=1e-15)


def test_rk4_zero_field_identity():
    y = np.array([1.0, -2.0])
    np.testing.assert_array_equal(sn.rk4_step(lambda v, t: np.zeros_like(v), y, 0.0, 0.3), y)


def test_rk4_halving_shrinks_error_sixteen_fold():
    err = [abs(integrate_scalar(h) - exact_forced(1.0)) for h in (0.1, 0.05)]
    assert 14 < err[0] / err[1] < 18


def test_rk4_order_on_forced_decay():
    hs = (0.1, 0.05, 0.025)
    err = [abs(integrate_scalar(h) - exact_forced(1.0)) for h in hs]
    orders = [np.log2(err[i] / err[i + 1]) for i in range(2)]
    assert all(3.7 <= p <= 4.3 for p in orders), orders


def test_rk4_flags_nan():
    with pytest.raises(sn.DivergenceError):
        sn.rk4_step(lambda v, t: v * np.nan, np.array([1.0]), 0.0, 0.1)


def test_coupled_rhs_hand_example():
    L = np.array([[-1.0, 1.0], [1.0, -1.0]])
    dX, ds = sn.coupled_rhs(np.array([[2.0], [0.0]]), np.zeros(1), 0.0, L, np.array([1.0, 0.0]),
                            ZERO, sn.CouplingParams(1.0, 1.0))
    np.testing.assert_array_equal(dX.ravel(), [-4.0, 2.0])
    assert ds[0] == 0.0


def test_coupled_rhs_decouples_without_coupling():
    dyn = cnn_spec()
    X = np.random.default_rng(1).uniform(-2, 2, (4, 3))
    L = np.array([[-1.0, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1], [1, 0, 0, -1]])
    dX, _ = sn.coupled_rhs(X, np.zeros(3), 0.0, L, np.ones(4), dyn, sn.CouplingParams(1e-300, 1e-300))
    np.testing.assert_allclose(dX, dyn.f(X), atol=1e-250)


def test_coupled_rhs_dimension_error():
    with pytest.raises(ValueError):
        sn.coupled_rhs(np.zeros((3, 2)), np.zeros(3), 0.0, np.zeros((3, 3)), np.zeros(3), cnn_spec(), CP)


@settings(max_examples=50)
@given(st.floats(-5, 5), st.integers(2, 6), st.data())
def test_coupling_term_vanishes_on_consensus(cval, m, data):
    W = data.draw(hnp.arrays(float, (m, m), elements=st.floats(0, 5)))
    L = W - np.diag(np.diag(W))
    L -= np.diag(L.sum(axis=1))
    X = np.full((m, 2), cval)
    dX, _ = sn.coupled_rhs(X, np.full(2, cval), 0.0, L, np.ones(m),
                           DynamicsSpec(f=lambda x, t=0.0: np.zeros_like(x), n=2), CP)
    assert np.max(np.abs(dX)) <= 1e-12 * max(1.0, np.abs(L).max() * abs(cval))


def test_varsigma_examples():
    assert sn.varsigma(np.zeros((2, 3)), np.zeros(3)) == 0.0
    assert sn.varsigma(np.array([[1.0, -3.0, 2.0]]), np.zeros(3)) == 3.0
    assert sn.varsigma(np.array([[1.0, 0, 0], [0, 2.0, 0]]), np.zeros(3)) == 2.0


def test_topology_validation(slow_topo):
    assert slow_topo.m == 5 and slow_topo.N == 5
    with pytest.raises(ValueError):
        sn.SwitchedTopology(L=[np.array([[-1.0, 1.0], [1.0, -1.0]])], C=[np.diag([0.5, 0.0])])
    with pytest.raises(ValueError):
        sn.SwitchedTopology(L=[np.array([[-1.0, 1.0], [1.0, 0.0]])], C=[np.diag([1.0, 0.0])])
    with pytest.raises(ValueError):
        sn.CouplingParams(0.0, 1.0)


def _slow_run(slow_topo, seed, horizon=10.0, keep_steps=False, x0=None):
    gen = assemble_generator(SLOW_EMBEDDED, np.full(5, 0.5))
    path = sample_path(gen, 0, horizon, seed=seed)
    rng = np.random.default_rng(seed)
    s0 = rng.uniform(-1, 1, 3)
    x0 = rng.uniform(-1, 1, (5, 3)) if x0 is None else x0(s0)
    return path, sn.simulate(slow_topo, cnn_spec(), CP, path, x0, s0, 0.01, horizon, keep_steps=keep_steps)


def test_consensus_subspace_is_invariant(slow_topo):
    _, rec = _slow_run(slow_topo, 3, x0=lambda s0: np.tile(s0, (5, 1)))
    assert rec.varsigma.max() < 1e-10


def test_steps_are_split_at_jumps(slow_topo):
    path, rec = _slow_run(slow_topo, 8, horizon=20.0, keep_steps=True)
    assert len(path.times) > 3
    for tj in path.times[1:]:
        assert np.min(np.abs(rec.step_times - tj)) == 0.0
    assert np.all(np.diff(rec.step_times) > 0)


def test_recorded_state_follows_path(slow_topo):
    path, rec = _slow_run(slow_topo, 8, horizon=20.0)
    for t, sig in zip(rec.t[1::37], rec.state[1::37]):
        # samples are taken at step ends, so the state is the one active just before t
        assert sig == path.state_at(np.nextafter(t, -np.inf))


def test_single_state_path_matches_fixed_integrator(slow_topo):
    path = SwitchPath(states=np.array([2]), times=np.array([0.0]), horizon=1.0)
    rng = np.random.default_rng(0)
    x0, s0 = rng.uniform(-1, 1, (5, 3)), rng.uniform(-1, 1, 3)
    dyn = cnn_spec()
    rec = sn.simulate(slow_topo, dyn, CP, path, x0, s0, 0.01, 1.0)
    rhs = sn._network_rhs(slow_topo.L[2], np.diag(slow_topo.C[2]).copy(), dyn, CP, 5, 3)
    y = np.concatenate([x0.ravel(), s0])
    for k in range(100):
        y = sn.rk4_step(rhs, y, k * 0.01, 0.01)
    assert rec.varsigma[-1] == sn.varsigma(y[:15].reshape(5, 3), y[15:])


def test_slow_instance_decays(slow_topo):
    _, rec = _slow_run(slow_topo, 1)
    assert not rec.diverged
    assert rec.varsigma[-1] < 1e-2 * rec.varsigma[0]


def test_divergence_is_flagged():
    dyn = DynamicsSpec(f=lambda x, t=0.0: 50.0 * x, n=1)
    topo = sn.SwitchedTopology(L=[np.zeros((2, 2))], C=[np.zeros(2)])
    path = SwitchPath(states=np.array([0]), times=np.array([0.0]), horizon=10.0)
    rec = sn.simulate(topo, dyn, sn.CouplingParams(1.0, 1.0), path, np.ones((2, 1)), np.zeros(1), 0.01, 10.0)
    assert rec.diverged
    assert rec.t[-1] < 10.0


def test_path_shorter_than_horizon_rejected(slow_topo):
    path = SwitchPath(states=np.array([0]), times=np.array([0.0]), horizon=1.0)
    with pytest.raises(ValueError):
        sn.simulate(slow_topo, cnn_spec(), CP, path, np.zeros((5, 3)), np.zeros(3), 0.01, 2.0)


def test_trajectory_csv_header(slow_topo):
    _, rec = _slow_run(slow_topo, 2, horizon=0.1)
    lines = rec.to_csv().splitlines()
    assert lines[0] == "t,sigma_state,varsigma," + ",".join(f"err_node_{i}" for i in range(1, 6))
    assert len(lines) == len(rec.t) + 1
    assert rec.to_csv(per_node=False).splitlines()[0] == "t,sigma_state,varsigma"


def test_stride_and_default_stride(slow_topo):
    assert sn.default_stride(1e-4, 1.0) == 1
    assert sn.default_stride(1e-4, 100.0) == 10
    gen = assemble_generator(SLOW_EMBEDDED, np.full(5, 0.5))
    path = sample_path(gen, 0, 1.0, seed=0)
    rec = sn.simulate(slow_topo, cnn_spec(), CP, path, np.ones((5, 3)), np.zeros(3), 0.01, 1.0, stride=10)
    np.testing.assert_allclose(rec.t, np.linspace(0, 1, 11), atol=1e-12)


def test_fit_zero_series_and_exponential():
    t = np.linspace(0, 5, 501)
    assert sn.fit_log_rate(t, np.zeros_like(t))[0] == 0.0
    rate, icpt, se = sn.fit_log_rate(t, np.exp(-t) ** 2)
    assert rate == pytest.approx(-2.0, abs=1e-3)
    assert icpt == pytest.approx(0.0, abs=1e-9)


def test_mean_square_error_single_zero_run():
    rec = sn.TrajectoryRecord(t=np.linspace(0, 1, 5), state=np.zeros(5, int), varsigma=np.zeros(5),
                              node_err=np.zeros((5, 2)), sq_err=np.zeros(5))
    fit = sn.mean_square_error([rec])
    assert fit.rate == 0.0
    np.testing.assert_array_equal(fit.mse, 0.0)


def test_mean_square_error_grid_mismatch():
    a = sn.TrajectoryRecord(t=np.linspace(0, 1, 5), state=np.zeros(5, int), varsigma=np.zeros(5),
                            node_err=np.zeros((5, 2)), sq_err=np.ones(5))
    b = sn.TrajectoryRecord(t=np.linspace(0, 2, 5), state=np.zeros(5, int), varsigma=np.zeros(5),
                            node_err=np.zeros((5, 2)), sq_err=np.ones(5))
    with pytest.raises(ValueError):
        sn.mean_square_error([a, b])

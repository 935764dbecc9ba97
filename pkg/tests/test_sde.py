"""Solver, flow derivative, inverse flow, and the flow-decomposition matrix."""

import numpy as np
import pytest

import lentparticle as lp
from lentparticle.errors import HypothesisViolationError
from lentparticle.sde import ZPath, validate_model, zero_z

from conftest import random_axis_config, random_config, rel_gap

UNIT1 = lp.unit_ratio_spec(1)
UNIT2 = lp.unit_ratio_spec(2)

TWO_JUMPS = lp.JumpConfiguration(horizon=1.0, times=[0.3, 0.7], marks=[[0.5], [-0.2]])


def _null_model(d=1, r=1):
    return lp.SdeModel(
        state_dim=d,
        mark_dim=r,
        initial=np.full(d, 2.0),
        c=lambda t, x, u: np.zeros(d),
        c_jac_x=lambda t, x, u: np.zeros((d, d)),
        c_grad_u=lambda t, x, u: np.zeros((d, r)),
    )


def test_null_model_is_constant():
    model = _null_model()
    traj = lp.solve_sde(model, TWO_JUMPS)
    assert traj.final_state[0] == 2.0
    flow = lp.inverse_flow(model, traj, TWO_JUMPS)
    assert np.array_equal(flow.k_final, np.eye(1))
    assert np.array_equal(flow.kbar_final, np.eye(1))
    g = lp.sde_gamma(model, traj, flow, TWO_JUMPS, UNIT1)
    assert np.all(g.matrix == 0.0)


def test_additive_model_sums_marks():
    model = lp.SdeModel(
        state_dim=1,
        mark_dim=1,
        initial=np.zeros(1),
        c=lambda t, x, u: np.array([u[0]]),
        c_jac_x=lambda t, x, u: np.zeros((1, 1)),
        c_grad_u=lambda t, x, u: np.eye(1),
    )
    traj = lp.solve_sde(model, TWO_JUMPS)
    assert traj.final_state[0] == pytest.approx(0.3)


def test_multiplicative_model_hand_values():
    model = lp.linear_scalar_model(a=1.0, x0=1.0)
    traj = lp.solve_sde(model, TWO_JUMPS)
    assert traj.final_state[0] == pytest.approx(1.2)
    flow = lp.inverse_flow(model, traj, TWO_JUMPS)
    assert flow.k_final[0, 0] == pytest.approx(1.2)
    assert flow.kbar_final[0, 0] == pytest.approx(1.0 / 1.2)
    g = lp.sde_gamma(model, traj, flow, TWO_JUMPS, UNIT1)
    assert g.matrix[0, 0] == pytest.approx(0.25, abs=1e-14)


def test_flow_single_jump_linear_2d():
    A = np.array([[0.3, -0.1], [0.2, 0.5]])
    model = lp.linear_multid_model(A, [1.0, -1.0])
    cfg = lp.JumpConfiguration(horizon=1.0, times=[0.4], marks=[[0.6]])
    traj = lp.solve_sde(model, cfg)
    flow = lp.flow_derivative(model, traj, cfg)
    assert np.allclose(flow.k_final, np.eye(2) + 0.6 * A, rtol=0, atol=1e-15)


def test_inverse_flow_identity_on_random_models():
    rng = np.random.default_rng(3)
    for seed in range(20):
        A = 0.5 * rng.normal(size=(2, 2))
        model = lp.linear_multid_model(A, rng.normal(size=2))
        cfg = random_config(seed, n_min=5, n_max=5)
        traj = lp.solve_sde(model, cfg)
        flow = lp.inverse_flow(model, traj, cfg)
        d = 2
        for kbar, k in zip(flow.kbar_after, flow.k_after):
            cond = np.linalg.cond(k)
            assert np.abs(kbar @ k - np.eye(d)).max() <= 1e-10 * cond
        assert flow.identity_gap <= 1e-10


def test_flow_linearity_in_initial_condition():
    # linear models: X_t(x) - X_t(x') = K_t (x - x')
    A = np.array([[0.4, 0.2], [-0.3, 0.1]])
    cfg = random_config(11, n_min=4, n_max=6)
    x1 = np.array([1.0, 2.0])
    x2 = np.array([-0.5, 0.3])
    m1 = lp.linear_multid_model(A, x1)
    m2 = lp.linear_multid_model(A, x2)
    t1 = lp.solve_sde(m1, cfg)
    t2 = lp.solve_sde(m2, cfg)
    flow = lp.flow_derivative(m1, t1, cfg)
    lhs = t1.final_state - t2.final_state
    rhs = flow.k_final @ (x1 - x2)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12)


def test_singular_jump_factor_raises():
    model = lp.linear_scalar_model(a=1.0, x0=1.0)
    cfg = lp.JumpConfiguration(horizon=1.0, times=[0.5], marks=[[-1.0]])  # I + u = 0
    traj = lp.solve_sde(model, cfg)
    with pytest.raises(HypothesisViolationError):
        lp.inverse_flow(model, traj, cfg)


def test_gamma_engine_matches_resolve_oracle_scalar():
    model = lp.linear_scalar_model(a=0.8, x0=1.5)
    for seed in range(100):
        cfg = random_config(seed)
        traj = lp.solve_sde(model, cfg)
        flow = lp.inverse_flow(model, traj, cfg)
        e = lp.sde_gamma(model, traj, flow, cfg, UNIT1)
        o = lp.sde_gamma_oracle(model, cfg, None, UNIT1)
        assert np.abs(e.matrix - o.matrix).max() <= 1e-6 * (1.0 + np.abs(e.matrix).max())


def test_gamma_engine_matches_resolve_oracle_2d():
    rng = np.random.default_rng(17)
    A = 0.4 * rng.normal(size=(2, 2))
    model = lp.linear_multid_model(A, [1.0, -0.5])
    for seed in range(100):
        cfg = random_config(seed, n_min=2, n_max=6)
        traj = lp.solve_sde(model, cfg)
        flow = lp.inverse_flow(model, traj, cfg)
        e = lp.sde_gamma(model, traj, flow, cfg, UNIT1)
        o = lp.sde_gamma_oracle(model, cfg, None, UNIT1)
        assert np.abs(e.matrix - o.matrix).max() <= 1e-6 * (1.0 + np.abs(e.matrix).max())


def test_gamma_engine_matches_resolve_oracle_degenerate_3d():
    model = lp.degenerate_3d_model()
    for seed in range(100):
        cfg = random_axis_config(seed)
        traj = lp.solve_sde(model, cfg)
        flow = lp.inverse_flow(model, traj, cfg)
        e = lp.sde_gamma(model, traj, flow, cfg, UNIT2)
        o = lp.sde_gamma_oracle(model, cfg, None, UNIT2)
        assert np.abs(e.matrix - o.matrix).max() <= 1e-6 * (1.0 + np.abs(e.matrix).max())


def test_sde_gamma_consistent_with_functional_route():
    # c = x u realizes the stochastic exponential: both routes agree
    model = lp.linear_scalar_model(a=1.0, x0=1.0)
    F = lp.doleans_pair()
    for seed in range(20):
        cfg = random_config(seed)
        traj = lp.solve_sde(model, cfg)
        flow = lp.inverse_flow(model, traj, cfg)
        g_sde = lp.sde_gamma(model, traj, flow, cfg, UNIT1)
        g_fun = lp.lent_particle_gamma(F, cfg, UNIT1)
        assert abs(g_sde.matrix[0, 0] - g_fun.matrix[1, 1]) <= 1e-10 * (
            1.0 + abs(g_fun.matrix[1, 1])
        )


def test_degenerate_model_det_positive_with_rank_condition():
    # >= 2 distinct first-axis jumps and >= 1 second-axis jump span R^3
    cfg = lp.JumpConfiguration(
        horizon=1.0,
        times=[0.2, 0.5, 0.8],
        marks=[[0.5, 0.0], [0.3, 0.0], [0.0, 0.7]],
    )
    model = lp.degenerate_3d_model()
    traj = lp.solve_sde(model, cfg)
    flow = lp.inverse_flow(model, traj, cfg)
    g = lp.sde_gamma(model, traj, flow, cfg, UNIT2)
    assert g.det > 0
    vectors = [
        np.array([1.0, 2.0 * c, c])
        for c in (0.8 - 0.5, 0.8 - 0.3)  # Y1_t minus each first-axis jump
    ] + [np.array([0.0, 1.0, 2.0])]
    assert lp.span_dimension(vectors) == 3


def test_z_driver_pure_jump():
    # dX = sigma(X) dZ with sigma = diag(x): multiplicative in the Z jumps
    model = lp.SdeModel(
        state_dim=1,
        mark_dim=1,
        initial=np.array([1.0]),
        c=lambda t, x, u: np.zeros(1),
        c_jac_x=lambda t, x, u: np.zeros((1, 1)),
        c_grad_u=lambda t, x, u: np.zeros((1, 1)),
        sigma=lambda t, x: np.array([[x[0]]]),
        sigma_jac_x=lambda t, x: np.array([[[1.0]]]),
        aux_dim=1,
    )
    cfg = lp.JumpConfiguration(horizon=1.0, times=[0.5], marks=[[0.4]])
    z = ZPath(dim=1, horizon=1.0, jump_times=np.array([0.25, 0.75]),
              jump_sizes=np.array([[0.1], [-0.2]]))
    traj = lp.solve_sde(model, cfg, z)
    # X: 1 -> 1.1 (Z jump) -> 1.1 (N jump adds 0) -> 1.1*0.8
    assert traj.final_state[0] == pytest.approx(1.1 * 0.8)
    flow = lp.inverse_flow(model, traj, cfg, z)
    assert flow.k_final[0, 0] == pytest.approx(1.1 * 0.8)
    assert flow.identity_gap <= 1e-12


def test_deterministic_z_slope_matches_exponential():
    # dX = X dZ with dZ = 0.5 dt integrates to X_T = e^{0.5 T}
    model = lp.SdeModel(
        state_dim=1,
        mark_dim=1,
        initial=np.array([1.0]),
        c=lambda t, x, u: np.zeros(1),
        c_jac_x=lambda t, x, u: np.zeros((1, 1)),
        c_grad_u=lambda t, x, u: np.zeros((1, 1)),
        sigma=lambda t, x: np.array([[x[0]]]),
        sigma_jac_x=lambda t, x: np.array([[[1.0]]]),
        aux_dim=1,
    )
    cfg = lp.JumpConfiguration(horizon=1.0, times=[], marks=np.empty((0, 1)))
    z = ZPath(dim=1, horizon=1.0, jump_times=np.empty(0), jump_sizes=np.empty((0, 1)),
              slope=lambda t: np.array([0.5]))
    traj = lp.solve_sde(model, cfg, z)
    assert traj.final_state[0] == pytest.approx(np.exp(0.5), rel=1e-7)
    flow = lp.inverse_flow(model, traj, cfg, z)
    assert abs(flow.kbar_final[0, 0] * flow.k_final[0, 0] - 1.0) < 1e-6


def test_compensated_drift_callable():
    # c = u with compensator rate b: X_t = sum marks - b t exactly (linear drift)
    b = 0.7
    model = lp.SdeModel(
        state_dim=1,
        mark_dim=1,
        initial=np.zeros(1),
        c=lambda t, x, u: np.array([u[0]]),
        c_jac_x=lambda t, x, u: np.zeros((1, 1)),
        c_grad_u=lambda t, x, u: np.eye(1),
        drift=lambda t, x: np.array([-b]),
        drift_jac_x=lambda t, x: np.zeros((1, 1)),
    )
    traj = lp.solve_sde(model, TWO_JUMPS)
    assert traj.final_state[0] == pytest.approx(0.3 - b, rel=1e-8)


def test_validate_model_catches_wrong_jacobian():
    good = lp.linear_scalar_model(a=1.0, x0=1.0)
    probes = [(0.0, np.array([1.0]), np.array([0.5]))]
    assert validate_model(good, probes) == []
    bad = lp.SdeModel(
        state_dim=1,
        mark_dim=1,
        initial=np.array([1.0]),
        c=good.c,
        c_jac_x=lambda t, x, u: np.array([[10.0]]),
    )
    assert validate_model(bad, probes) != []


def test_trajectory_mismatch_detected():
    model = lp.linear_scalar_model()
    other = lp.JumpConfiguration(horizon=1.0, times=[0.1], marks=[[0.3]])
    traj = lp.solve_sde(model, TWO_JUMPS)
    with pytest.raises(lp.DomainError):
        lp.flow_derivative(model, traj, other)


def test_trajectory_csv(tmp_path):
    model = lp.linear_scalar_model()
    traj = lp.solve_sde(model, TWO_JUMPS)
    flow = lp.inverse_flow(model, traj, TWO_JUMPS)
    out = tmp_path / "traj.csv"
    lp.sde.write_trajectory_csv(traj, flow, str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "event_time,kind,x_1,k_1_1,kbar_1_1"
    assert len(lines) == 3


def test_zero_z_helper():
    z = zero_z(2.0)
    assert z.jump_times.size == 0 and z.horizon == 2.0


def test_max_step_cap_is_honored():
    model = lp.SdeModel(
        state_dim=1,
        mark_dim=1,
        initial=np.array([1.0]),
        c=lambda t, x, u: np.zeros(1),
        c_jac_x=lambda t, x, u: np.zeros((1, 1)),
        drift=lambda t, x: np.array([x[0]]),
        drift_jac_x=lambda t, x: np.eye(1),
    )
    cfg = lp.JumpConfiguration(horizon=1.0, times=[], marks=np.empty((0, 1)))
    loose = lp.solve_sde(model, cfg)
    tight = lp.solve_sde(model, cfg, max_step=1e-3)
    assert loose.final_state[0] == pytest.approx(np.e, rel=1e-8)
    assert tight.final_state[0] == pytest.approx(np.e, rel=1e-8)


def test_nonconvergent_drift_raises_stiffness():
    # drift oscillating below any step size: refinements can never agree
    model = lp.SdeModel(
        state_dim=1,
        mark_dim=1,
        initial=np.array([0.0]),
        c=lambda t, x, u: np.zeros(1),
        c_jac_x=lambda t, x, u: np.zeros((1, 1)),
        drift=lambda t, x: np.array([np.sin(1e9 * t)]),
        drift_jac_x=lambda t, x: np.zeros((1, 1)),
    )
    cfg = lp.JumpConfiguration(horizon=1.0, times=[], marks=np.empty((0, 1)))
    with pytest.raises(lp.StiffnessError):
        lp.solve_sde(model, cfg)

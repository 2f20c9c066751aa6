import numpy as np
import pytest

import oracles
from kinex import (
    ClassSystem,
    NoiseKind,
    SdeConfig,
    drift,
    em_step,
    find_equilibrium,
    negativity_guard,
    realization_rng,
    run_ensemble,
    run_trajectory,
    vertex,
)

TABLE_DETERMINISTIC = np.array([37.2, 19.8, 12.1, 8.4, 6.2, 4.9, 3.9, 3.3, 2.8, 1.5]) / 100


def test_config_validation():
    with pytest.raises(ValueError):
        SdeConfig(dt=0)
    with pytest.raises(ValueError):
        SdeConfig(steps=0)
    with pytest.raises(ValueError):
        SdeConfig(sample_every=0)
    with pytest.raises(ValueError):
        SdeConfig(noise_kind="loud")
    with pytest.raises(ValueError):
        SdeConfig(seed=-1)
    assert SdeConfig(sqrt_gamma=1e-3).gamma == pytest.approx(1e-6)


def test_noiseless_step_at_equilibrium(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=0.0)
    x1 = em_step(equilibrium, default_system, cfg, realization_rng(0))
    assert np.abs(x1 - equilibrium).max() < 1e-12


def test_step_is_bitwise_reproducible(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=1e-3, noise_kind="additive")
    a = em_step(equilibrium, default_system, cfg, realization_rng(42))
    b = em_step(equilibrium, default_system, cfg, realization_rng(42))
    assert a.tobytes() == b.tobytes()
    c = em_step(equilibrium, default_system, cfg, realization_rng(43))
    assert a.tobytes() != c.tobytes()


@pytest.mark.parametrize("kind", ["additive", "multiplicative", "conserving"])
def test_step_conserves_population(default_system, equilibrium, kind):
    cfg = SdeConfig(sqrt_gamma=1e-3, noise_kind=kind)
    rng = realization_rng(1)
    mu0 = equilibrium @ default_system.incomes
    for _ in range(100):
        x1 = em_step(equilibrium, default_system, cfg, rng)
        assert abs(x1.sum() - 1) < 1e-14
        if kind == "conserving":
            assert abs(x1 @ default_system.incomes - mu0) < 1e-12


def test_step_increment_matches_formula(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=2e-3, dt=0.5, noise_kind="additive")
    xi = realization_rng(9).standard_normal(10)
    expected = (equilibrium + 0.5 * drift(equilibrium, default_system)
                + np.sqrt(4e-6 * 0.5) * (xi - xi.mean()))
    np.testing.assert_allclose(em_step(equilibrium, default_system, cfg, realization_rng(9)),
                               expected, atol=1e-16)


def test_guard_passes_nonnegative_candidate(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=1e-3)
    out = negativity_guard(equilibrium, equilibrium, default_system, cfg, realization_rng(0))
    assert out.state is equilibrium
    assert out.redraws == 0 and not out.fell_back


def test_guard_redraws_adversarial_step(default_system):
    x = np.full(10, 0.1)
    x[9] = 1e-6
    x[0] += 0.1 - 1e-6
    cfg = SdeConfig(sqrt_gamma=1e-4, noise_kind="additive")
    candidate = x.copy()
    candidate[9] -= 1e-3
    candidate[0] += 1e-3
    out = negativity_guard(candidate, x, default_system, cfg, realization_rng(3))
    assert out.redraws >= 1 and not out.fell_back
    assert out.state.min() >= 0
    assert abs(out.state.sum() - 1) < 1e-14


def test_guard_falls_back_to_drift(default_system):
    x = np.full(10, 0.1)
    x[9] = 0.0
    x[0] = 0.2
    cfg = SdeConfig(sqrt_gamma=1.0, noise_kind="additive", max_retries=5)
    candidate = x.copy()
    candidate[9] = -0.5
    out = negativity_guard(candidate, x, default_system, cfg, realization_rng(3))
    assert out.fell_back and out.redraws == 5
    np.testing.assert_allclose(out.state, x + drift(x, default_system))


def test_guard_never_triggers_without_noise(default_system):
    cfg = SdeConfig(sqrt_gamma=0.0, steps=5000, noise_kind="additive")
    traj = run_trajectory(vertex(1, 10), default_system, cfg)
    assert traj.rejected_steps == 0 and traj.fallback_steps == []
    assert traj.states.min() >= 0


def test_trajectory_sample_count(default_system, equilibrium):
    traj = run_trajectory(equilibrium, default_system, SdeConfig(sqrt_gamma=1e-4))
    assert len(traj) == 201
    np.testing.assert_array_equal(traj.times, np.arange(0, 20001, 100))
    np.testing.assert_array_equal(traj.states[0], equilibrium)


def test_trajectory_odd_cadence(default_system, equilibrium):
    traj = run_trajectory(equilibrium, default_system, SdeConfig(steps=10, sample_every=3))
    np.testing.assert_array_equal(traj.times, [0, 3, 6, 9])


def test_noiseless_trajectory_reaches_equilibrium(fast_system):
    traj = run_trajectory(vertex(3, 10), fast_system, SdeConfig(sqrt_gamma=0.0))
    eq = find_equilibrium(vertex(3, 10), fast_system)
    assert np.abs(traj.final - eq.state).max() < 1e-6


def test_conserving_trajectory_keeps_income(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=1e-3, noise_kind="conserving", seed=5)
    traj = run_trajectory(equilibrium, default_system, cfg)
    mu = traj.states @ default_system.incomes
    assert np.abs(mu - mu[0]).max() < 1e-8
    assert np.abs(traj.states.sum(axis=1) - 1).max() < 1e-10


def test_multiplicative_trajectory_stays_on_simplex(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=1e-2, noise_kind="multiplicative", steps=5000, sample_every=1)
    traj = run_trajectory(equilibrium, default_system, cfg)
    assert traj.states.min() >= 0
    assert np.abs(traj.states.sum(axis=1) - 1).max() < 1e-10


def test_find_equilibrium_reproduces_table(default_system):
    res = find_equilibrium(vertex(3, 10), default_system)
    assert res.converged and res.residual < 1e-12
    np.testing.assert_allclose(res.state, TABLE_DETERMINISTIC, atol=0.003)
    assert res.state @ default_system.incomes == pytest.approx(30.0, abs=1e-10)


def test_equilibrium_depends_only_on_income(default_system, equilibrium, rng):
    for _ in range(3):
        x0 = oracles.random_state_with_income(rng, default_system.incomes, 30.0)
        res = find_equilibrium(x0, default_system)
        assert res.converged
        assert np.abs(res.state - equilibrium).max() < 1e-4


def test_find_equilibrium_returns_immediately_at_fixed_point(default_system, equilibrium):
    res = find_equilibrium(equilibrium, default_system)
    assert res.steps == 0 and res.converged
    np.testing.assert_array_equal(res.state, equilibrium)


def test_find_equilibrium_reports_nonconvergence(default_system):
    res = find_equilibrium(vertex(3, 10), default_system, max_steps=5)
    assert not res.converged
    assert res.steps == 5 and res.residual >= 1e-12


def test_two_class_equilibrium_is_the_initial_state():
    sys = ClassSystem.build(2, 10.0, 1.0)
    x0 = np.array([0.3, 0.7])
    res = find_equilibrium(x0, sys)
    assert res.converged and res.steps == 0
    np.testing.assert_array_equal(res.state, x0)


def test_equilibrium_independent_of_time_step(default_system, equilibrium):
    res = find_equilibrium(vertex(3, 10), default_system, dt=7.0)
    assert np.abs(res.state - equilibrium).max() < 1e-8


def test_dt_refinement_is_first_order(fast_system):
    x0 = vertex(3, 10)
    horizon = 200.0
    finals = {}
    for dt in (2.0, 1.0, 0.5, 0.25):
        cfg = SdeConfig(dt=dt, sqrt_gamma=0.0, steps=int(horizon / dt), sample_every=int(horizon / dt))
        finals[dt] = run_trajectory(x0, fast_system, cfg).final
    e1 = np.abs(finals[2.0] - finals[1.0]).max()
    e2 = np.abs(finals[1.0] - finals[0.5]).max()
    e3 = np.abs(finals[0.5] - finals[0.25]).max()
    assert e1 / e2 == pytest.approx(2.0, rel=0.1)
    assert e2 / e3 == pytest.approx(2.0, rel=0.1)


def test_ensemble_reproducible_and_order_independent(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=1e-3, noise_kind="conserving", steps=500, sample_every=50, seed=11)
    a = run_ensemble(equilibrium, default_system, cfg, 4)
    b = run_ensemble(equilibrium, default_system, cfg, 4, workers=2)
    for ta, tb in zip(a, b):
        assert ta.states.tobytes() == tb.states.tobytes()
    assert a[0].states.tobytes() != a[1].states.tobytes()


def test_single_realization_equals_trajectory(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=1e-3, steps=300, seed=77)
    [ens] = run_ensemble(equilibrium, default_system, cfg, 1)
    traj = run_trajectory(equilibrium, default_system, cfg, realization_rng(77, 0))
    assert ens.states.tobytes() == traj.states.tobytes()
    # the default stream of a lone trajectory is realization 0
    assert run_trajectory(equilibrium, default_system, cfg).states.tobytes() == traj.states.tobytes()


def test_ensemble_rejects_zero_realizations(default_system, equilibrium):
    with pytest.raises(ValueError):
        run_ensemble(equilibrium, default_system, SdeConfig(), 0)


def test_none_noise_kind_ignores_gamma(default_system, equilibrium):
    cfg = SdeConfig(sqrt_gamma=1.0, noise_kind=NoiseKind.NONE, steps=100, sample_every=100)
    traj = run_trajectory(equilibrium, default_system, cfg)
    assert np.abs(traj.final - equilibrium).max() < 1e-9

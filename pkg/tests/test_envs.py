import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from obsquant.envs import PointReacher, Pendulum, angle_normalize, make_env

H = Pendulum.dt


INERTIA = Pendulum.m * Pendulum.l**2 / 3.0


def modified_hamiltonian(theta, theta_dot):
    """Shadow energy of the rod, conserved by the integrator to O(dt^3) per step.

    With unit-inertia coordinates H(q, v) = v^2/2 + 15 cos q the update is
    velocity-first symplectic Euler; backward error analysis gives the
    modified H below, scaled back to physical energy by the rod's inertia.
    """
    h = 0.5 * theta_dot**2 + 15.0 * math.cos(theta)
    hq = -15.0 * math.sin(theta)
    hqq = -15.0 * math.cos(theta)
    hp = theta_dot
    hpp = 1.0
    # velocity-first symplectic Euler: H~ = H - (h/2) Hp Hq + (h^2/12)(Hpp Hq^2 + Hqq Hp^2)
    return INERTIA * (h - 0.5 * H * hp * hq + H**2 / 12.0 * (hpp * hq**2 + hqq * hp**2))


def test_same_seed_same_observation():
    a, b = Pendulum(), Pendulum()
    assert np.array_equal(a.reset(seed=3), b.reset(seed=3))
    r1, r2 = PointReacher(), PointReacher()
    assert np.array_equal(r1.reset(seed=3), r2.reset(seed=3))


def test_different_seeds_differ():
    obs = {tuple(Pendulum().reset(seed=s)) for s in range(50)}
    assert len(obs) == 50


@given(st.integers(0, 2**31 - 1))
def test_trig_identity(seed):
    env = Pendulum()
    obs = env.reset(seed=seed)
    for _ in range(5):
        assert abs(obs[0] ** 2 + obs[1] ** 2 - 1.0) < 1e-12
        obs = env.step([env._rng.uniform(-2, 2)]).obs


def test_equilibrium_stays_at_rest():
    env = Pendulum()
    env.set_state(0.0, 0.0)
    for _ in range(200):
        r = env.step([0.0])
        assert r.reward == 0.0
    assert np.array_equal(env.state, [0.0, 0.0])


def test_hanging_reward():
    env = Pendulum()
    env.set_state(math.pi, 0.0)
    assert env.step([0.0]).reward == pytest.approx(-math.pi**2, abs=1e-12)


def test_reward_uses_wrapped_angle_and_clipped_torque():
    env = Pendulum()
    env.set_state(2 * math.pi + 0.5, 1.0)
    r = env.step([5.0]).reward
    assert r == pytest.approx(-(0.25 + 0.1 + 0.001 * 4.0))


def test_angle_normalize_range():
    xs = np.linspace(-50, 50, 10001)
    ys = np.array([angle_normalize(x) for x in xs])
    assert ys.min() >= -math.pi and ys.max() < math.pi
    assert np.allclose(np.cos(xs), np.cos(ys)) and np.allclose(np.sin(xs), np.sin(ys))


def test_energy_matches_unit_inertia_hamiltonian(rng):
    env = Pendulum()
    for th, thd in rng.uniform(-4, 4, (50, 2)):
        env.set_state(th, thd)
        assert env.energy() == pytest.approx(INERTIA * (0.5 * thd**2 + 15.0 * math.cos(th)), rel=1e-12, abs=1e-12)


def test_raw_energy_is_not_conserved_per_step():
    # why the oracle needs the shadow energy: raw energy swings far more than 1e-2
    env = Pendulum()
    env.set_state(2.0, 0.0)
    e = [env.energy()]
    for _ in range(100):
        env.step([0.0])
        e.append(env.energy())
    assert np.abs(np.diff(e)).max() > 0.1


def test_shadow_energy_drift_bounded(rng):
    """Undriven, unclipped rollouts: the integrator's shadow energy barely moves."""
    worst = 0.0
    env = Pendulum()
    for _ in range(200):
        # start low enough that |theta_dot| never reaches the clip at 8
        env.set_state(rng.uniform(-math.pi, math.pi), 0.0)
        if 0.5 * env.state[1] ** 2 + 15 * math.cos(env.state[0]) + 15 > 0.5 * 7.5**2:
            continue
        prev = modified_hamiltonian(*env.state)
        for _ in range(200):
            env.step([0.0])
            assert abs(env.state[1]) < 8.0
            cur = modified_hamiltonian(*env.state)
            worst = max(worst, abs(cur - prev))
            prev = cur
    assert worst <= 1e-2


def test_observation_bounds_and_episode_length(rng):
    for env, bound in ((Pendulum(), 8.0), (PointReacher(), 127.0)):
        obs = env.reset(seed=1)
        steps = 0
        while True:
            a = rng.uniform(-3, 3, env.spec.act_dim)
            r = env.step(a)
            steps += 1
            assert np.all(np.abs(r.obs) <= bound)
            assert not r.terminated
            if r.done:
                break
        assert steps == env.spec.max_episode_steps
        assert r.truncated


def test_determinism_same_actions():
    def roll(env_name):
        env = make_env(env_name)
        out = [env.reset(seed=9)]
        a_rng = np.random.default_rng(4)
        for _ in range(150):
            out.append(env.step(a_rng.uniform(-2, 2, env.spec.act_dim)).obs)
        return np.array(out)

    for name in ("pendulum", "reacher"):
        assert np.array_equal(roll(name), roll(name))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_action_rejected(bad):
    for env in (Pendulum(), PointReacher()):
        env.reset(seed=0)
        with pytest.raises(ValueError):
            env.step(np.full(env.spec.act_dim, bad))


def test_reacher_shapes_and_reward():
    env = PointReacher()
    obs = env.reset(seed=2)
    assert obs.shape == (6,) and env.spec.act_dim == 2
    r = env.step([0.0, 0.0])
    assert r.reward == pytest.approx(-np.linalg.norm(r.obs[:2] - r.obs[4:]))


def test_unknown_env():
    with pytest.raises(ValueError):
        make_env("walker")

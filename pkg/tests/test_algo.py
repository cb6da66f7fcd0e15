import math

import numpy as np
import pytest

import obsquant.buffer.replay as replay_mod
import obsquant.buffer.rollout as rollout_mod
from obsquant.algo import (
    PpoConfig,
    PpoModel,
    SacConfig,
    SacModel,
    SacOptimizers,
    TrainRecord,
    actor_loss_and_grads,
    alpha_loss_and_grad,
    polyak,
    ppo_loss_and_grads,
    q_targets,
    read_csv,
    sac_update,
    train,
    write_csv,
)
from obsquant.buffer import FloatObsStore, ReplayBatch, ReplayBuffer, RolloutBatch
from obsquant.nn import Adam, gaussian_log_prob
from obsquant.quant import make_scheme, quantize

from gradcheck import CASES
from oracles import curve_bits

SMALL_SAC = SacConfig(batch_size=32, hidden=(16, 16), learning_starts=50)
SMALL_PPO = PpoConfig(n_steps=128, batch_size=32, n_epochs=2, hidden=(16, 16))


@pytest.mark.parametrize("name", sorted(CASES))
def test_loss_gradients_match_finite_differences(name):
    for seed in range(15):
        assert CASES[name](seed) < 1e-4, (name, seed)


def _ppo_batch(model, rng, n=16, shift=0.0):
    obs = rng.standard_normal((n, model.obs_dim))
    actions = rng.standard_normal((n, model.act_dim))
    logp, _, _ = gaussian_log_prob(model.policy(obs), model.log_std, actions)
    return RolloutBatch(obs, actions, rng.standard_normal(n), logp - shift, rng.standard_normal(n), rng.standard_normal(n))


def test_ppo_ratio_one_at_collection_policy(rng):
    cfg = PpoConfig(hidden=(8,))
    model = PpoModel(3, 2, cfg, rng)
    losses, _ = ppo_loss_and_grads(model, _ppo_batch(model, rng), cfg)
    assert losses.clip_fraction == 0.0
    # ratio 1 everywhere: the surrogate is minus the mean normalized advantage, i.e. zero
    assert abs(losses.policy) < 1e-12


def test_ppo_clipped_samples_carry_no_policy_gradient(rng):
    cfg = PpoConfig(hidden=(8,), vf_coef=0.0, ent_coef=0.0)
    model = PpoModel(3, 2, cfg, rng)
    batch = _ppo_batch(model, rng, shift=0.5)  # ratio e^0.5 > 1.2
    batch.advantages = np.abs(batch.advantages) + 1.0
    cfg_raw = PpoConfig(hidden=(8,), vf_coef=0.0, ent_coef=0.0, normalize_advantage=False)
    losses, grads = ppo_loss_and_grads(model, batch, cfg_raw)
    assert losses.clip_fraction == 1.0
    assert all(np.all(g == 0.0) for g in grads)


def test_ppo_entropy_gradient_on_log_std(rng):
    cfg = PpoConfig(hidden=(8,), vf_coef=0.0, ent_coef=0.3)
    model = PpoModel(3, 2, cfg, rng)
    batch = _ppo_batch(model, rng, shift=0.5)
    batch.advantages = np.abs(batch.advantages) + 1.0
    cfg = PpoConfig(hidden=(8,), vf_coef=0.0, ent_coef=0.3, normalize_advantage=False)
    _, grads = ppo_loss_and_grads(model, batch, cfg)
    # everything clipped, so only the entropy bonus moves log_std
    assert np.allclose(grads[len(model.policy.params)], -0.3)


def _sac(rng, obs_dim=3, act_dim=2, **kw):
    cfg = SacConfig(hidden=(8, 8), batch_size=4, **kw)
    return SacModel(obs_dim, act_dim, cfg, rng), cfg


def _replay_batch(rng, n, obs_dim, act_dim, dones):
    return ReplayBatch(rng.standard_normal((n, obs_dim)), rng.uniform(-1, 1, (n, act_dim)),
                       rng.standard_normal(n), rng.standard_normal((n, obs_dim)), np.asarray(dones, dtype=float))


def test_terminal_target_is_reward(rng):
    model, cfg = _sac(rng)
    batch = _replay_batch(rng, 6, 3, 2, [1, 1, 1, 0, 0, 0])
    y = q_targets(model, batch, 0.7, cfg.gamma, rng.standard_normal((6, 2)))
    assert np.array_equal(y[:3], batch.rewards[:3])
    assert not np.allclose(y[3:], batch.rewards[3:])


def test_polyak_tau_one_copies_and_small_tau_interpolates(rng):
    model, _ = _sac(rng)
    for p in model.q1.params:
        p += 1.0
    before = [p.copy() for p in model.q1_target.params]
    polyak(model.q1_target, model.q1, 0.25)
    for t, b, o in zip(model.q1_target.params, before, model.q1.params):
        assert np.allclose(t, 0.75 * b + 0.25 * o)
    polyak(model.q1_target, model.q1, 1.0)
    for t, o in zip(model.q1_target.params, model.q1.params):
        assert np.array_equal(t, o)


def test_temperature_moves_toward_target_entropy():
    logp_high = np.full(8, 3.0)   # entropy far below target -> raise alpha
    logp_low = np.full(8, -9.0)   # entropy far above target -> lower alpha
    for logp, direction in ((logp_high, 1.0), (logp_low, -1.0)):
        log_alpha = np.array([0.0])
        opt = Adam([log_alpha], lr=0.1)
        _, g = alpha_loss_and_grad(0.0, logp, -2.0)
        opt.step([log_alpha], [np.array([g])])
        assert np.sign(log_alpha[0]) == direction


def test_twin_critics_are_symmetric(rng):
    model, _ = _sac(rng)
    obs = rng.standard_normal((5, 3))
    noise = rng.standard_normal((5, 2))
    loss, grads, _ = actor_loss_and_grads(model, obs, noise, 0.3)
    model.q1, model.q2 = model.q2, model.q1
    loss2, grads2, _ = actor_loss_and_grads(model, obs, noise, 0.3)
    assert loss == loss2
    assert all(np.array_equal(a, b) for a, b in zip(grads, grads2))


def test_sac_update_needs_a_full_batch(rng):
    model, cfg = _sac(rng)
    buf = ReplayBuffer(10, 3, 2)
    buf.add(np.zeros(3), np.zeros(2), 0.0, np.zeros(3), False)
    with pytest.raises(ValueError):
        sac_update(model, SacOptimizers(model, cfg), buf, cfg, rng)


def test_configs_validate():
    with pytest.raises(ValueError):
        PpoConfig(clip_range=1.5)
    with pytest.raises(ValueError):
        SacConfig(tau=0.0)
    with pytest.raises(ValueError):
        SacConfig(batch_size=10, buffer_size=5)


def test_zero_steps_gives_empty_curve():
    assert train("sac", "pendulum", 0) == []
    assert train("ppo", "pendulum", 0, quantize=True) == []
    with pytest.raises(ValueError):
        train("dqn", "pendulum", 10)


@pytest.mark.parametrize("algo,cfg,steps", [("sac", SMALL_SAC, 300), ("ppo", SMALL_PPO, 600)])
def test_training_is_deterministic(algo, cfg, steps):
    for q in (False, True):
        a = train(algo, "pendulum", steps, quantize=q, seed=3, config=cfg, log_every=100)
        b = train(algo, "pendulum", steps, quantize=q, seed=3, config=cfg, log_every=100)
        assert curve_bits(a) == curve_bits(b)
    c = train(algo, "pendulum", steps, seed=4, config=cfg, log_every=100)
    assert curve_bits(a) != curve_bits(c)


class _RoundedFloatStore(FloatObsStore):
    """Reference quantized store: keeps quantize(obs) as plain floats."""

    def __init__(self, scheme, obs_dim, capacity):
        super().__init__(obs_dim, capacity)
        self.scheme = scheme

    def write(self, index, obs):
        super().write(index, quantize(np.asarray(obs, dtype=np.float64), self.scheme))


@pytest.mark.parametrize("algo,cfg,steps", [("sac", SMALL_SAC, 300), ("ppo", SMALL_PPO, 400)])
def test_packing_is_transparent_to_learning(algo, cfg, steps, monkeypatch):
    """The packed store and a plain float store of the same rounded values train identically."""
    scheme = make_scheme(127, 2 if algo == "sac" else 1)
    packed = train(algo, "pendulum", steps, quantize=True, scheme=scheme, seed=1, config=cfg, log_every=50)

    def factory(s, obs_dim, capacity):
        return FloatObsStore(obs_dim, capacity) if s is None else _RoundedFloatStore(s, obs_dim, capacity)

    monkeypatch.setattr(replay_mod, "make_obs_store", factory)
    monkeypatch.setattr(rollout_mod, "make_obs_store", factory)
    reference = train(algo, "pendulum", steps, quantize=True, scheme=scheme, seed=1, config=cfg, log_every=50)
    assert curve_bits(packed) == curve_bits(reference)


@pytest.mark.parametrize("algo,cfg,steps", [("sac", SMALL_SAC, 300), ("ppo", SMALL_PPO, 400)])
def test_identity_quantizer_reproduces_baseline(algo, cfg, steps, monkeypatch):
    """With an identity store behind the quantize flag, nothing else in training may differ."""
    baseline = train(algo, "pendulum", steps, seed=2, config=cfg, log_every=50)
    identity = lambda s, obs_dim, capacity: FloatObsStore(obs_dim, capacity)  # noqa: E731
    monkeypatch.setattr(replay_mod, "make_obs_store", identity)
    monkeypatch.setattr(rollout_mod, "make_obs_store", identity)
    flagged = train(algo, "pendulum", steps, quantize=True, seed=2, config=cfg, log_every=50)
    assert curve_bits(flagged) == curve_bits(baseline)


def test_quantization_changes_training_data():
    a = train("sac", "pendulum", 300, seed=1, config=SMALL_SAC, log_every=50)
    b = train("sac", "pendulum", 300, quantize=True, seed=1, config=SMALL_SAC, log_every=50)
    assert curve_bits(a) != curve_bits(b)


def test_record_cadence_and_alpha_column():
    recs = train("ppo", "pendulum", 250, seed=0, config=SMALL_PPO, log_every=100)
    assert [r.step for r in recs] == [100, 200, 250]
    assert all(math.isnan(r.alpha) for r in recs)
    recs = train("sac", "pendulum", 250, seed=0, config=SMALL_SAC, log_every=100)
    assert all(r.alpha > 0 for r in recs)
    # pendulum episodes last 200 steps, so returns exist from step 200 on
    assert math.isnan(recs[0].return_mean) and not math.isnan(recs[-1].return_mean)


def test_csv_round_trip(tmp_path):
    recs = [TrainRecord(100, -1234.5678901234567, 12.25, 0.125, math.nan, 1e-300, 0.5),
            TrainRecord(200, -1.0, 0.0, 3.0, -0.1, 2.0, math.nan)]
    path = tmp_path / "curve.csv"
    write_csv(recs, path)
    back = read_csv(path)
    assert path.read_text().splitlines()[0] == "step,return_mean,return_std,ms_per_step,loss_policy,loss_value_or_q,alpha"
    for a, b in zip(recs, back):
        for x, y in zip(a.curve_key() + (a.ms_per_step,), b.curve_key() + (b.ms_per_step,)):
            assert (x == y) or (math.isnan(x) and math.isnan(y))

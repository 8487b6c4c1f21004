import numpy as np
import pytest

from textmotion.refine import (
    DenoisingMdp,
    DivergenceError,
    GaussianDenoisingPolicy,
    PpoConfig,
    Trajectory,
    default_sigma_schedule,
    estimate_mean_reward,
    kl_regularizer,
    post_train,
    ppo_loss,
    rollout,
)


def bandit_reward(target):
    def fn(m):
        d = m - target
        return float(np.exp(-np.sum(d * d)))

    return fn


def test_sigma_schedule_shape():
    s = default_sigma_schedule(5)
    assert s[0] == 0.5 and s[-1] == 0.05
    assert np.all(np.diff(s) < 0)
    assert default_sigma_schedule(1).tolist() == [0.5]


def test_rollout_degenerate_sigma_hits_bias():
    target = np.array([0.7, -0.3])
    mdp = DenoisingMdp(num_steps=1, dim=2, sigmas=[1e-12])
    policy = GaussianDenoisingPolicy.around_target(mdp, target)
    reward_fn = bandit_reward(target)
    tr = rollout(mdp, policy, reward_fn, 0)
    assert np.allclose(tr.final_motion, target, atol=1e-9)
    assert tr.reward == pytest.approx(reward_fn(target), abs=1e-9)


def test_rollout_deterministic_under_seed():
    mdp = DenoisingMdp(num_steps=3, dim=4)
    policy = GaussianDenoisingPolicy.initial(mdp, scale=0.2)
    reward_fn = bandit_reward(np.zeros(4))
    a = rollout(mdp, policy, reward_fn, 42)
    b = rollout(mdp, policy, reward_fn, 42)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.actions, b.actions)
    assert a.reward == b.reward


def test_rollout_terminal_reward_structure():
    mdp = DenoisingMdp(num_steps=3, dim=2)
    policy = GaussianDenoisingPolicy.initial(mdp)
    calls = []

    def reward_fn(m):
        calls.append(m.copy())
        return 1.0

    tr = rollout(mdp, policy, reward_fn, 1)
    assert tr.states.shape == (3, 2) and tr.actions.shape == (3, 2)
    # exactly one reward evaluation, on the final denoised motion
    assert len(calls) == 1
    assert np.array_equal(calls[0], tr.actions[-1])
    # the chain is consistent: each action becomes the next state
    assert np.array_equal(tr.states[1], tr.actions[0])
    assert np.array_equal(tr.states[2], tr.actions[1])


def collect(mdp, policy, reward_fn, n, seed=0):
    rng = np.random.default_rng(seed)
    return [rollout(mdp, policy, reward_fn, rng) for _ in range(n)]


def test_ppo_loss_identity_ratio_zero_with_baseline():
    mdp = DenoisingMdp(num_steps=2, dim=3)
    policy = GaussianDenoisingPolicy.initial(mdp, scale=0.1)
    batch = collect(mdp, policy, bandit_reward(np.ones(3)), 16)
    loss, _ = ppo_loss(batch, policy, mdp, PpoConfig(use_baseline=True))
    assert abs(loss) < 1e-12


def test_ppo_loss_identity_ratio_without_baseline():
    mdp = DenoisingMdp(num_steps=2, dim=3)
    policy = GaussianDenoisingPolicy.initial(mdp, scale=0.1)
    batch = collect(mdp, policy, bandit_reward(np.ones(3)), 16)
    loss, _ = ppo_loss(batch, policy, mdp, PpoConfig(use_baseline=False))
    mean_reward = np.mean([tr.reward for tr in batch])
    assert loss == pytest.approx(-mean_reward, rel=1e-12)


def test_ppo_loss_clip_bound_worked_example():
    # single trajectory with advantage 1 and ratio 1 + 2 eps: the clipped
    # branch wins and the per-step surrogate is exactly -(1 + eps)
    eps = 1e-3
    mdp = DenoisingMdp(num_steps=1, dim=1)
    policy = GaussianDenoisingPolicy.initial(mdp)
    tr = rollout(mdp, policy, lambda m: 1.0, 0)
    true_logp = policy.log_prob(tr.actions[0], tr.states[0], 0, mdp.condition)
    tr.log_probs = np.array([true_logp - np.log(1.0 + 2 * eps)])
    loss, grad = ppo_loss([tr], policy, mdp, PpoConfig(clip_epsilon=eps, use_baseline=False))
    assert loss == pytest.approx(-(1.0 + eps), rel=1e-12)
    assert np.allclose(grad, 0.0)  # clip active: flat in the parameters


def test_ppo_loss_surrogate_magnitude_bounded():
    eps = 1e-3
    mdp = DenoisingMdp(num_steps=2, dim=2)
    policy = GaussianDenoisingPolicy.initial(mdp, scale=0.1)
    batch = collect(mdp, policy, bandit_reward(np.ones(2)), 32, seed=3)
    rng = np.random.default_rng(0)
    jittered = policy.with_params(policy.get_params() + rng.normal(scale=0.05, size=policy.get_params().size))
    config = PpoConfig(clip_epsilon=eps, use_baseline=True)
    rewards = np.array([tr.reward for tr in batch])
    adv = np.abs(rewards - rewards.mean()).max()
    loss, _ = ppo_loss(batch, jittered, mdp, config)
    assert abs(loss) <= (1.0 + eps) * adv + 1e-12


def test_ppo_loss_gradient_matches_finite_differences():
    mdp = DenoisingMdp(num_steps=1, dim=1)
    rng = np.random.default_rng(4)
    h = 1e-6
    for _ in range(20):
        policy = GaussianDenoisingPolicy.initial(mdp, scale=float(rng.uniform(-0.3, 0.3)))
        policy.biases += rng.normal(scale=0.3, size=policy.biases.shape)
        batch = collect(mdp, policy, bandit_reward(np.ones(1)), 8, seed=int(rng.integers(1e6)))
        jittered = policy.with_params(
            policy.get_params() + rng.normal(scale=3e-4, size=policy.get_params().size)
        )
        config = PpoConfig(use_baseline=True)
        _, grad = ppo_loss(batch, jittered, mdp, config)
        params = jittered.get_params()
        for idx in range(params.size):
            hi, lo = params.copy(), params.copy()
            hi[idx] += h
            lo[idx] -= h
            f_hi, _ = ppo_loss(batch, jittered.with_params(hi), mdp, config)
            f_lo, _ = ppo_loss(batch, jittered.with_params(lo), mdp, config)
            fd = (f_hi - f_lo) / (2 * h)
            denom = max(abs(fd), abs(grad[idx]), 1e-6)
            assert abs(grad[idx] - fd) / denom <= 1e-3


def test_kl_zero_at_reference():
    mdp = DenoisingMdp(num_steps=2, dim=3)
    policy = GaussianDenoisingPolicy.initial(mdp, scale=0.2)
    states = [(np.ones(3), 0), (np.zeros(3), 1)]
    assert kl_regularizer(policy, policy.copy(), states, mdp.condition) == 0.0


def test_kl_closed_form_for_shifted_means():
    mdp = DenoisingMdp(num_steps=1, dim=3, sigmas=[0.4])
    ref = GaussianDenoisingPolicy.initial(mdp)
    shift = np.array([0.3, -0.1, 0.2])
    moved = ref.copy()
    moved.biases[0] = shift
    states = [(np.zeros(3), 0)]
    expected = float(shift @ shift) / (2 * 0.4**2)
    assert kl_regularizer(moved, ref, states, mdp.condition) == pytest.approx(expected, rel=1e-12)

    doubled = ref.copy()
    doubled.biases[0] = 2 * shift
    assert kl_regularizer(doubled, ref, states, mdp.condition) == pytest.approx(
        4 * expected, rel=1e-12
    )


def test_post_train_zero_learning_rate_keeps_policy():
    mdp = DenoisingMdp(num_steps=1, dim=2)
    policy = GaussianDenoisingPolicy.initial(mdp)
    config = PpoConfig(learning_rate=0.0, minibatches_per_update=3)
    trained, curve = post_train(mdp, policy, bandit_reward(np.ones(2)), config, 10, seed=0)
    assert np.array_equal(trained.get_params(), policy.get_params())
    assert len(curve) == 10


def test_post_train_huge_kl_pins_policy():
    mdp = DenoisingMdp(num_steps=1, dim=2)
    policy = GaussianDenoisingPolicy.initial(mdp)
    config = PpoConfig(kl_weight=1e6, minibatches_per_update=5)
    trained, _ = post_train(mdp, policy, bandit_reward(np.ones(2)), config, 50, seed=0)
    delta = np.abs(trained.get_params() - policy.get_params()).max()
    assert delta <= 1e-3


def test_post_train_improves_bandit_reward():
    target = np.array([1.3, -1.0])
    mdp = DenoisingMdp(num_steps=1, dim=2)
    policy = GaussianDenoisingPolicy.initial(mdp)
    reward_fn = bandit_reward(target)
    before = estimate_mean_reward(mdp, policy, reward_fn, 300, seed=99)
    trained, curve = post_train(mdp, policy, reward_fn, PpoConfig(), 60, seed=0)
    after = estimate_mean_reward(mdp, trained, reward_fn, 300, seed=100)
    assert after > before * 1.1
    assert len(curve) == 60


def test_post_train_divergence_guard():
    mdp = DenoisingMdp(num_steps=1, dim=1)
    policy = GaussianDenoisingPolicy.initial(mdp)
    calls = {"n": 0}

    def collapsing(m):
        calls["n"] += 1
        return 1.0 if calls["n"] <= 8 else 1e-4

    config = PpoConfig(learning_rate=0.0, minibatches_per_update=1)
    with pytest.raises(DivergenceError) as err:
        post_train(mdp, policy, collapsing, config, 60, seed=0)
    assert len(err.value.reward_curve) >= 20

"""Policy-gradient post-training of a Gaussian denoising policy.

The reverse denoising chain is treated as a short-horizon MDP: the state
at step t is the current noisy motion vector (plus a fixed condition),
the action is the next denoised vector, and only the final motion earns a
reward. A small per-step affine-Gaussian policy (diagonal scale, bias,
optional condition weights) stands in for a learned denoiser; any
differentiable mean map could be slotted in its place. Training follows
the clipped importance-ratio surrogate with an optional batch-mean
baseline and a KL leash to the pre-update policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .optim import AdamState


@dataclass(frozen=True, eq=False)
class DenoisingMdp:
    num_steps: int
    dim: int
    condition: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigmas: np.ndarray | None = None

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError("need at least one denoising step")
        object.__setattr__(self, "condition", np.asarray(self.condition, dtype=float).ravel())
        sig = self.sigmas
        if sig is None:
            sig = default_sigma_schedule(self.num_steps)
        sig = np.asarray(sig, dtype=float).ravel()
        if sig.shape != (self.num_steps,) or (sig <= 0).any():
            raise ValueError("sigmas must be positive, one per step")
        object.__setattr__(self, "sigmas", sig)


def default_sigma_schedule(num_steps: int) -> np.ndarray:
    """Per-step noise scale, 0.5 at the first (noisiest) step down to 0.05."""
    if num_steps == 1:
        return np.array([0.5])
    return np.linspace(0.5, 0.05, num_steps)


@dataclass(eq=False)
class GaussianDenoisingPolicy:
    """Per-step mean: scales[t] * m + cond_weights[t] @ c + biases[t]."""

    scales: np.ndarray        # (T, dim)
    biases: np.ndarray        # (T, dim)
    cond_weights: np.ndarray  # (T, dim, c_dim)
    sigmas: np.ndarray        # (T,)

    @staticmethod
    def initial(mdp: DenoisingMdp, scale: float = 0.0) -> "GaussianDenoisingPolicy":
        t, d, c = mdp.num_steps, mdp.dim, mdp.condition.size
        return GaussianDenoisingPolicy(
            scales=np.full((t, d), scale),
            biases=np.zeros((t, d)),
            cond_weights=np.zeros((t, d, c)),
            sigmas=mdp.sigmas.copy(),
        )

    @staticmethod
    def around_target(mdp: DenoisingMdp, target: np.ndarray) -> "GaussianDenoisingPolicy":
        """Policy whose every step outputs the target plus noise."""
        policy = GaussianDenoisingPolicy.initial(mdp)
        policy.biases[:] = np.asarray(target, dtype=float)[None, :]
        return policy

    @property
    def num_steps(self) -> int:
        return self.scales.shape[0]

    @property
    def dim(self) -> int:
        return self.scales.shape[1]

    def mean(self, m: np.ndarray, t: int, condition: np.ndarray) -> np.ndarray:
        out = self.scales[t] * m + self.biases[t]
        if condition.size:
            out = out + self.cond_weights[t] @ condition
        return out

    def log_prob(self, action: np.ndarray, m: np.ndarray, t: int, condition: np.ndarray) -> float:
        mu = self.mean(m, t, condition)
        var = self.sigmas[t] ** 2
        diff = action - mu
        return float(
            -0.5 * np.sum(diff * diff) / var
            - 0.5 * self.dim * np.log(2.0 * np.pi * var)
        )

    def grad_log_prob(
        self, action: np.ndarray, m: np.ndarray, t: int, condition: np.ndarray
    ) -> dict[str, np.ndarray]:
        """Gradients of log density w.r.t. this step's parameters."""
        mu = self.mean(m, t, condition)
        var = self.sigmas[t] ** 2
        residual = (action - mu) / var
        out = {"scales": residual * m, "biases": residual}
        if condition.size:
            out["cond_weights"] = np.outer(residual, condition)
        else:
            out["cond_weights"] = np.zeros((self.dim, 0))
        return out

    def get_params(self) -> np.ndarray:
        return np.concatenate(
            [self.scales.ravel(), self.biases.ravel(), self.cond_weights.ravel()]
        )

    def with_params(self, params: np.ndarray) -> "GaussianDenoisingPolicy":
        t, d = self.scales.shape
        c = self.cond_weights.shape[2]
        params = np.asarray(params, dtype=float)
        n_sc, n_b = t * d, t * d
        return GaussianDenoisingPolicy(
            scales=params[:n_sc].reshape(t, d).copy(),
            biases=params[n_sc : n_sc + n_b].reshape(t, d).copy(),
            cond_weights=params[n_sc + n_b :].reshape(t, d, c).copy(),
            sigmas=self.sigmas.copy(),
        )

    def copy(self) -> "GaussianDenoisingPolicy":
        return self.with_params(self.get_params())


@dataclass(eq=False)
class Trajectory:
    states: np.ndarray     # (T, dim): the noisy vector entering each step
    actions: np.ndarray    # (T, dim)
    log_probs: np.ndarray  # (T,) under the behavior policy
    reward: float          # terminal only; earlier transitions pay zero

    @property
    def final_motion(self) -> np.ndarray:
        return self.actions[-1]


@dataclass
class PpoConfig:
    clip_epsilon: float = 1e-3
    kl_weight: float = 0.01
    buffer_size: int = 3000
    samples_per_update: int = 8
    batch_size: int = 128
    learning_rate: float = 1e-4
    use_baseline: bool = True
    minibatches_per_update: int = 20

    def __post_init__(self):
        if self.clip_epsilon <= 0:
            raise ValueError("clip threshold must be positive")


class DivergenceError(RuntimeError):
    def __init__(self, message: str, reward_curve: list[float]):
        super().__init__(message)
        self.reward_curve = reward_curve


def rollout(
    mdp: DenoisingMdp,
    policy: GaussianDenoisingPolicy,
    reward_fn: Callable[[np.ndarray], float],
    rng: np.random.Generator | int,
) -> Trajectory:
    """Sample one full denoising chain; reward lands on the last action only."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    t_steps, dim = mdp.num_steps, mdp.dim
    states = np.zeros((t_steps, dim))
    actions = np.zeros((t_steps, dim))
    log_probs = np.zeros(t_steps)
    m = rng.standard_normal(dim)
    for t in range(t_steps):
        states[t] = m
        mu = policy.mean(m, t, mdp.condition)
        action = mu + policy.sigmas[t] * rng.standard_normal(dim)
        actions[t] = action
        log_probs[t] = policy.log_prob(action, m, t, mdp.condition)
        m = action
    return Trajectory(states, actions, log_probs, float(reward_fn(m)))


def _batch_log_probs(
    policy: GaussianDenoisingPolicy,
    states: np.ndarray,
    actions: np.ndarray,
    condition: np.ndarray,
) -> np.ndarray:
    """(B, T) log densities of actions given states under the policy."""
    mu = policy.scales[None, :, :] * states + policy.biases[None, :, :]
    if condition.size:
        mu = mu + (policy.cond_weights @ condition)[None, :, :]
    var = policy.sigmas[None, :] ** 2
    diff = actions - mu
    dim = states.shape[2]
    return -0.5 * np.sum(diff * diff, axis=2) / var - 0.5 * dim * np.log(
        2.0 * np.pi * var
    )


def ppo_loss(
    batch: list[Trajectory],
    policy: GaussianDenoisingPolicy,
    mdp: DenoisingMdp,
    config: PpoConfig,
) -> tuple[float, np.ndarray]:
    """Clipped-surrogate loss and its gradient over the policy parameters.

    Per-step ratios divide the current log densities by the trajectories'
    stored reference log-probs (the pre-update snapshot's); the terminal
    reward minus the batch-mean baseline (when enabled) is the advantage
    for every step of its trajectory.
    """
    if not batch:
        raise ValueError("ppo_loss needs a non-empty batch")
    eps = config.clip_epsilon
    rewards = np.array([tr.reward for tr in batch])
    baseline = float(rewards.mean()) if config.use_baseline else 0.0
    adv = rewards - baseline  # (B,)

    states = np.stack([tr.states for tr in batch])      # (B, T, d)
    actions = np.stack([tr.actions for tr in batch])    # (B, T, d)
    ref_logp = np.stack([tr.log_probs for tr in batch])  # (B, T)

    logp = _batch_log_probs(policy, states, actions, mdp.condition)
    ratio = np.exp(logp - ref_logp)
    unclipped = ratio * adv[:, None]
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv[:, None]
    surrogate = np.minimum(unclipped, clipped)
    loss = -float(surrogate.mean())

    # a term is flat in theta exactly when the clipped branch is active
    in_band = (ratio > 1.0 - eps) & (ratio < 1.0 + eps)
    weight = np.where(
        (unclipped <= clipped) | in_band, adv[:, None] * ratio, 0.0
    )  # (B, T)

    mu = policy.scales[None, :, :] * states + policy.biases[None, :, :]
    if mdp.condition.size:
        mu = mu + (policy.cond_weights @ mdp.condition)[None, :, :]
    residual = (actions - mu) / (policy.sigmas[None, :, None] ** 2)  # (B, T, d)
    weighted = weight[:, :, None] * residual
    n_terms = ratio.size
    grad_scales = -np.einsum("btd,btd->td", weighted, states) / n_terms
    grad_biases = -weighted.sum(axis=0) / n_terms
    if mdp.condition.size:
        grad_cond = -np.einsum("btd,c->tdc", weighted, mdp.condition) / n_terms
    else:
        grad_cond = np.zeros_like(policy.cond_weights)
    grad_vec = np.concatenate(
        [grad_scales.ravel(), grad_biases.ravel(), grad_cond.ravel()]
    )
    return loss, grad_vec


def kl_regularizer(
    policy: GaussianDenoisingPolicy,
    reference: GaussianDenoisingPolicy,
    states: list[tuple[np.ndarray, int]],
    condition: np.ndarray,
) -> float:
    """Mean KL between equal-variance Gaussians: ||mu - mu_ref||^2 / (2 sigma^2)."""
    return _kl_with_grad(policy, reference, states, condition)[0]


def _kl_with_grad(
    policy: GaussianDenoisingPolicy,
    reference: GaussianDenoisingPolicy,
    states: list[tuple[np.ndarray, int]],
    condition: np.ndarray,
) -> tuple[float, np.ndarray]:
    if not states:
        raise ValueError("need at least one state")
    total = 0.0
    grads = {
        "scales": np.zeros_like(policy.scales),
        "biases": np.zeros_like(policy.biases),
        "cond_weights": np.zeros_like(policy.cond_weights),
    }
    for m, t in states:
        var = policy.sigmas[t] ** 2
        diff = policy.mean(m, t, condition) - reference.mean(m, t, condition)
        total += float(np.sum(diff * diff)) / (2.0 * var)
        coeff = diff / var
        grads["scales"][t] += coeff * m
        grads["biases"][t] += coeff
        if policy.cond_weights.size:
            grads["cond_weights"][t] += np.outer(coeff, condition)
    n = len(states)
    grad_vec = np.concatenate(
        [grads["scales"].ravel(), grads["biases"].ravel(), grads["cond_weights"].ravel()]
    ) / n
    return total / n, grad_vec


def estimate_mean_reward(
    mdp: DenoisingMdp,
    policy: GaussianDenoisingPolicy,
    reward_fn: Callable[[np.ndarray], float],
    n_rollouts: int,
    seed: int = 0,
) -> float:
    rng = np.random.default_rng(seed)
    return float(
        np.mean([rollout(mdp, policy, reward_fn, rng).reward for _ in range(n_rollouts)])
    )


def post_train(
    mdp: DenoisingMdp,
    policy: GaussianDenoisingPolicy,
    reward_fn: Callable[[np.ndarray], float],
    config: PpoConfig,
    iterations: int,
    seed: int = 0,
) -> tuple[GaussianDenoisingPolicy, list[float]]:
    """PPO loop: collect rollouts, update against the pre-update snapshot.

    Every iteration adds samples_per_update fresh rollouts to the replay
    buffer (oldest evicted past buffer_size), snapshots the policy, then
    runs minibatch updates of the clipped surrogate plus the KL leash to
    that snapshot. Returns the trained policy and the per-iteration mean
    terminal reward of the fresh rollouts. Aborts if the mean reward sits
    below 10% of its initial value for 20 consecutive iterations.
    """
    rng = np.random.default_rng(seed)
    policy = policy.copy()
    buffer: list[Trajectory] = []
    curve: list[float] = []
    adam = AdamState()
    bad_streak = 0

    for _ in range(iterations):
        fresh = [
            rollout(mdp, policy, reward_fn, rng) for _ in range(config.samples_per_update)
        ]
        buffer.extend(fresh)
        if len(buffer) > config.buffer_size:
            buffer = buffer[-config.buffer_size :]
        curve.append(float(np.mean([tr.reward for tr in fresh])))

        if curve[0] > 0 and curve[-1] < 0.1 * curve[0]:
            bad_streak += 1
            if bad_streak >= 20:
                raise DivergenceError(
                    f"mean reward below 10% of initial for {bad_streak} iterations",
                    curve,
                )
        else:
            bad_streak = 0

        snapshot = policy.copy()
        # reference log-probs for the whole buffer come from the snapshot,
        # so every ratio equals 1 when the update phase starts
        all_states = np.stack([tr.states for tr in buffer])
        all_actions = np.stack([tr.actions for tr in buffer])
        snapshot_logp = _batch_log_probs(snapshot, all_states, all_actions, mdp.condition)
        for tr, logp in zip(buffer, snapshot_logp):
            tr.log_probs = logp.copy()

        params = policy.get_params()
        for _ in range(config.minibatches_per_update):
            size = min(config.batch_size, len(buffer))
            idx = rng.integers(0, len(buffer), size=size)
            batch = [buffer[i] for i in idx]
            loss_grad = ppo_loss(batch, policy, mdp, config)[1]
            states = [
                (tr.states[t], t) for tr in batch for t in range(tr.states.shape[0])
            ]
            kl_grad = _kl_with_grad(policy, snapshot, states, mdp.condition)[1]
            params = adam.step(
                params, loss_grad + config.kl_weight * kl_grad, config.learning_rate
            )
            policy = policy.with_params(params)

    return policy, curve

"""DDPG agent: replay buffer, target networks, and the update rules."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass

import numpy as np

from ..config import AgentConfig
from .nets import ActorNet, Adam, CriticNet, clone_params, soft_update

log = logging.getLogger(__name__)


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float  # negated pre-adjustment cost (reward decoupling)
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity FIFO buffer with uniform seeded sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity, dtype=bool)
        self.ptr = 0
        self.size = 0

    def add(self, t: Transition) -> None:
        i = self.ptr
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.dones[i] = t.done
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def __len__(self) -> int:
        return self.size

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, batch_size)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.dones[idx])


def compute_reward(lp_cost: float) -> float:
    """Reward is the negated cost of the agent's own (pre-adjustment) plan."""
    return -lp_cost


def td_targets(rewards: np.ndarray, next_states: np.ndarray, dones: np.ndarray,
               target_actor: ActorNet, target_critic: CriticNet,
               discount: float) -> np.ndarray:
    """Bellman targets; terminal transitions bootstrap to zero."""
    next_q = target_critic(next_states, target_actor(next_states))
    return rewards + discount * np.where(dones, 0.0, next_q)


class DdpgAgent:
    def __init__(self, state_dim: int, action_dim: int, cfg: AgentConfig,
                 rng: np.random.Generator):
        self.cfg = cfg
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.actor = ActorNet.init(state_dim, action_dim, cfg.hidden1, cfg.hidden2, rng)
        self.critic = CriticNet.init(state_dim, action_dim, cfg.hidden1, cfg.hidden2, rng)
        self.target_actor = ActorNet(clone_params(self.actor.params))
        self.target_critic = CriticNet(clone_params(self.critic.params))
        self.actor_opt = Adam(self.actor.params, cfg.actor_lr)
        self.critic_opt = Adam(self.critic.params, cfg.critic_lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, state_dim, action_dim)
        self.explore_sigma = cfg.explore_sigma

    def act(self, state: np.ndarray, explore: bool,
            rng: np.random.Generator | None = None) -> np.ndarray:
        action = self.actor(state)[0]
        if explore:
            action = action + rng.normal(0.0, self.explore_sigma, action.shape)
        return np.clip(action, 1e-6, 1.0 - 1e-6)

    def decay_exploration(self) -> None:
        self.explore_sigma *= self.cfg.explore_decay

    def critic_update(self, batch) -> float:
        """One gradient step on the mean squared Bellman error."""
        states, actions, rewards, next_states, dones = batch
        y = td_targets(rewards, next_states, dones,
                       self.target_actor, self.target_critic, self.cfg.discount)
        q, cache = self.critic.forward(states, actions)
        err = q - y
        loss = float(np.mean(err**2))
        grads, _, _ = self.critic.backward(cache, 2.0 * err / err.size)
        if not all(np.isfinite(g).all() for g in grads.values()):
            log.warning("critic update skipped: non-finite gradients")
            return loss
        self.critic_opt.step(self.critic.params, grads)
        return loss

    def actor_update(self, batch) -> float:
        """Ascent step on mean Q(s, mu(s)) with the critic held fixed."""
        states = batch[0]
        actions, actor_cache = self.actor.forward(states)
        q, critic_cache = self.critic.forward(states, actions)
        # dQ/da, averaged over the batch; ascend by feeding the negation.
        _, _, grad_action = self.critic.backward(critic_cache, np.ones_like(q) / q.size)
        grads, _ = self.actor.backward(actor_cache, -grad_action)
        if not all(np.isfinite(g).all() for g in grads.values()):
            log.warning("actor update skipped: non-finite gradients")
            return float(np.mean(q))
        self.actor_opt.step(self.actor.params, grads)
        return float(np.mean(q))

    def soft_update_targets(self) -> None:
        soft_update(self.actor.params, self.target_actor.params, self.cfg.tau)
        soft_update(self.critic.params, self.target_critic.params, self.cfg.tau)

    def train_step(self, rng: np.random.Generator) -> float | None:
        if len(self.buffer) < self.cfg.batch_size:
            return None
        batch = self.buffer.sample(self.cfg.batch_size, rng)
        loss = self.critic_update(batch)
        self.actor_update(batch)
        self.soft_update_targets()
        return loss

    # Checkpoint format: versioned npz of flat parameter arrays plus a
    # config hash so mismatched restores fail loudly.
    CHECKPOINT_VERSION = 1

    def config_hash(self) -> str:
        payload = json.dumps(
            {"state_dim": self.state_dim, "action_dim": self.action_dim,
             "hidden1": self.cfg.hidden1, "hidden2": self.cfg.hidden2},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def save(self, path) -> None:
        arrays = {}
        for prefix, net in (("actor", self.actor), ("critic", self.critic),
                            ("tactor", self.target_actor), ("tcritic", self.target_critic)):
            for k, v in net.params.items():
                arrays[f"{prefix}.{k}"] = v
        np.savez(
            path,
            version=np.array([self.CHECKPOINT_VERSION]),
            config_hash=np.array([self.config_hash()]),
            explore_sigma=np.array([self.explore_sigma]),
            **arrays,
        )

    def load(self, path) -> None:
        data = np.load(path, allow_pickle=False)
        if int(data["version"][0]) != self.CHECKPOINT_VERSION:
            raise ValueError("checkpoint version mismatch")
        if str(data["config_hash"][0]) != self.config_hash():
            raise ValueError("checkpoint config hash mismatch")
        for prefix, net in (("actor", self.actor), ("critic", self.critic),
                            ("tactor", self.target_actor), ("tcritic", self.target_critic)):
            for k in net.params:
                net.params[k] = data[f"{prefix}.{k}"]
        self.explore_sigma = float(data["explore_sigma"][0])

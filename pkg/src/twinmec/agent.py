"""Double deep Q-learning on plain numpy arrays.

One small ReLU network per subsystem maps the shared observation vector
to values for that subsystem's own discrete actions; the team value of a
joint action is the sum of the per-subsystem values.  Every head sees
the whole observation, which is what lets a head back off the resource
pool when another subsystem has the stronger claim.  Training follows
the double estimator: the online network picks the next action, the
periodically synchronised target network scores it.  Gradients come
from the shared MLP kernels and are clipped by their global norm before
a plain SGD step.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from . import kernels


def epsilon_at(
    episode: int,
    n_episodes: int,
    start: float = 1.0,
    end: float = 0.05,
    fraction: float = 0.5,
) -> float:
    """Linearly decayed exploration rate, flat at `end` after the decay window."""
    horizon = max(1, int(n_episodes * fraction))
    if episode >= horizon:
        return end
    return start + (end - start) * episode / horizon


class QNetwork:
    """Two-hidden-layer ReLU network from feature vectors to action values.

    Hidden layers use He initialisation.  The output layer starts at
    exactly zero: all action values tie, so with the lowest-index
    tie-break the untrained greedy policy picks action 0 everywhere.
    For the allocation grid that is the empty claim, which leaves the
    shared resource pool free for whichever head explores first.
    """

    def __init__(self, n_inputs, n_outputs, hidden=(64, 64), rng=None):
        if rng is None:
            rng = np.random.default_rng(0)
        h1, h2 = hidden
        self.shape = (n_inputs, h1, h2, n_outputs)
        self.w1 = rng.normal(0.0, np.sqrt(2.0 / n_inputs), size=(n_inputs, h1))
        self.b1 = np.zeros(h1)
        self.w2 = rng.normal(0.0, np.sqrt(2.0 / h1), size=(h1, h2))
        self.b2 = np.zeros(h2)
        self.w3 = np.zeros((h2, n_outputs))
        self.b3 = np.zeros(n_outputs)

    def params(self):
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Action values for a (batch, features) input."""
        _, _, out = kernels.mlp_forward(
            np.ascontiguousarray(x, dtype=float),
            self.w1, self.b1, self.w2, self.b2, self.w3, self.b3,
        )
        return out

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping hidden activations for a later backward call."""
        x = np.ascontiguousarray(x, dtype=float)
        h1, h2, out = kernels.mlp_forward(
            x, self.w1, self.b1, self.w2, self.b2, self.w3, self.b3
        )
        return x, h1, h2, out

    def backward(self, x, h1, h2, dout):
        """Parameter gradients given the upstream gradient on the output."""
        return kernels.mlp_backward(
            x, h1, h2, np.ascontiguousarray(dout, dtype=float), self.w2, self.w3
        )

    def apply_gradients(self, grads, lr: float) -> None:
        for p, g in zip(self.params(), grads):
            p -= lr * g

    def copy_from(self, other: "QNetwork") -> None:
        for mine, theirs in zip(self.params(), other.params()):
            mine[...] = theirs

    def clone(self) -> "QNetwork":
        twin = QNetwork(self.shape[0], self.shape[3], hidden=self.shape[1:3])
        twin.copy_from(self)
        return twin

    def get_vector(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def set_vector(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        if vec.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {vec.size}")
        offset = 0
        for p in self.params():
            p[...] = vec[offset: offset + p.size].reshape(p.shape)
            offset += p.size

    def loss_and_grad(self, x, targets, actions):
        """Mean squared TD loss on chosen actions, with parameter gradients.

        Used directly by the finite-difference gradient check; the trainer
        assembles the same pieces itself because its targets sum across
        subsystems.
        """
        x, h1, h2, out = self.forward_cached(x)
        batch = x.shape[0]
        picked = out[np.arange(batch), actions]
        err = picked - targets
        loss = float(np.mean(err**2))
        dout = np.zeros_like(out)
        dout[np.arange(batch), actions] = 2.0 * err / batch
        return loss, self.backward(x, h1, h2, dout)


class ReplayBuffer:
    """FIFO experience store with uniform sampling."""

    def __init__(self, capacity: int = 10000):
        self._data = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._data)

    def push(self, obs, actions, reward, next_obs, done) -> None:
        self._data.append(
            (
                np.asarray(obs, dtype=float).copy(),
                np.asarray(actions, dtype=int).copy(),
                float(reward),
                np.asarray(next_obs, dtype=float).copy(),
                bool(done),
            )
        )

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.choice(len(self._data), size=batch_size, replace=False)
        obs, actions, rewards, next_obs, dones = zip(*(self._data[i] for i in idx))
        return (
            np.stack(obs),
            np.stack(actions),
            np.asarray(rewards),
            np.stack(next_obs),
            np.asarray(dones, dtype=float),
        )

    def dump(self) -> dict:
        """Buffer contents as stacked arrays, oldest first, for persistence."""
        if not self._data:
            return {}
        obs, actions, rewards, next_obs, dones = zip(*self._data)
        return {
            "obs": np.stack(obs),
            "actions": np.stack(actions),
            "rewards": np.asarray(rewards),
            "next_obs": np.stack(next_obs),
            "dones": np.asarray(dones, dtype=float),
        }

    def load(self, blobs: dict) -> None:
        """Refill from dump() output, replacing current contents."""
        self._data.clear()
        if not blobs:
            return
        n = blobs["obs"].shape[0]
        for i in range(n):
            self.push(
                blobs["obs"][i],
                blobs["actions"][i],
                float(blobs["rewards"][i]),
                blobs["next_obs"][i],
                bool(blobs["dones"][i]),
            )


def clip_global_norm(grad_groups, max_norm: float) -> float:
    """Scale all gradients in place so their joint norm is at most max_norm."""
    total = 0.0
    for grads in grad_groups:
        for g in grads:
            total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for grads in grad_groups:
            for g in grads:
                g *= scale
    return norm


class DoubleQTrainer:
    """Team Q-learning: one head per subsystem, summed team value."""

    def __init__(
        self,
        n_agents: int,
        n_features: int,
        n_actions: int,
        hidden=(64, 64),
        lr: float = 1e-3,
        gamma: float = 0.9,
        batch_size: int = 64,
        buffer_capacity: int = 10000,
        target_refresh: int = 200,
        clip_norm: float = 10.0,
        rng: np.random.Generator | None = None,
    ):
        if rng is None:
            rng = np.random.default_rng(0)
        self.n_agents = n_agents
        self.n_actions = n_actions
        self.gamma = gamma
        self.lr = lr
        self.batch_size = batch_size
        self.target_refresh = target_refresh
        self.clip_norm = clip_norm
        self.online = [
            QNetwork(n_features, n_actions, hidden=hidden, rng=rng)
            for _ in range(n_agents)
        ]
        self.target = [net.clone() for net in self.online]
        self.buffer = ReplayBuffer(buffer_capacity)
        self.train_steps = 0

    def act(self, obs: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
        """Per-subsystem epsilon-greedy actions for a shared observation vector."""
        row = np.asarray(obs, dtype=float).reshape(1, -1)
        actions = np.empty(self.n_agents, dtype=int)
        for m in range(self.n_agents):
            if rng.random() < epsilon:
                actions[m] = rng.integers(self.n_actions)
            else:
                q = self.online[m].forward(row)[0]
                actions[m] = int(np.argmax(q))
        return actions

    def remember(self, obs, actions, reward, next_obs, done) -> None:
        self.buffer.push(obs, actions, reward, next_obs, done)

    def train_step(self, rng: np.random.Generator):
        """One SGD update from a replay batch; None if the buffer is short."""
        if len(self.buffer) < self.batch_size:
            return None
        obs, actions, rewards, next_obs, dones = self.buffer.sample(self.batch_size, rng)
        batch = obs.shape[0]
        rows = np.arange(batch)

        next_value = np.zeros(batch)
        for m in range(self.n_agents):
            q_online = self.online[m].forward(next_obs)
            picks = np.argmax(q_online, axis=1)
            q_target = self.target[m].forward(next_obs)
            next_value += q_target[rows, picks]
        targets = rewards + self.gamma * (1.0 - dones) * next_value

        caches = []
        team_q = np.zeros(batch)
        for m in range(self.n_agents):
            x, h1, h2, out = self.online[m].forward_cached(obs)
            caches.append((x, h1, h2, out))
            team_q += out[rows, actions[:, m]]
        err = team_q - targets
        loss = float(np.mean(err**2))

        grad_groups = []
        for m in range(self.n_agents):
            x, h1, h2, out = caches[m]
            dout = np.zeros_like(out)
            dout[rows, actions[:, m]] = 2.0 * err / batch
            grad_groups.append(list(self.online[m].backward(x, h1, h2, dout)))
        clip_global_norm(grad_groups, self.clip_norm)
        for m in range(self.n_agents):
            self.online[m].apply_gradients(grad_groups[m], self.lr)

        self.train_steps += 1
        if self.train_steps % self.target_refresh == 0:
            self.sync_targets()
        return loss

    def sync_targets(self) -> None:
        for target, online in zip(self.target, self.online):
            target.copy_from(online)

    def state_dict(self) -> dict:
        """Flat arrays for persistence alongside other run state."""
        out = {"train_steps": np.asarray(self.train_steps)}
        for m in range(self.n_agents):
            out[f"online_{m}"] = self.online[m].get_vector()
            out[f"target_{m}"] = self.target[m].get_vector()
        return out

    def load_state_dict(self, blobs: dict) -> None:
        self.train_steps = int(blobs["train_steps"])
        for m in range(self.n_agents):
            self.online[m].set_vector(np.asarray(blobs[f"online_{m}"]))
            self.target[m].set_vector(np.asarray(blobs[f"target_{m}"]))

"""
Deep Q-learning with a small fully connected network written against numpy.

Everything runs in double precision so that analytic gradients can be checked
against finite differences.
"""

import logging
from dataclasses import dataclass

import numpy as np

from services.errors import DivergenceError

logger = logging.getLogger(__name__)

ACTIVATIONS = ('relu', 'tanh', 'linear')


def _activate(name, z):
    if name == 'relu':
        return np.maximum(z, 0.0)
    if name == 'tanh':
        return np.tanh(z)
    return z


def _activation_grad(name, z, a):
    if name == 'relu':
        return (z > 0.0).astype(np.float64)
    if name == 'tanh':
        return 1.0 - a * a
    return np.ones_like(z)


class MLP:
    """
    Affine layers with per-layer activations; the output layer is linear.

    Weights are stored as (fan_in, fan_out) matrices and initialised uniformly
    in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    """

    def __init__(self, layer_sizes, rng=None, activations=None):
        sizes = [int(size) for size in layer_sizes]
        if len(sizes) < 2 or any(size < 1 for size in sizes):
            raise ValueError(f"Need at least input and output sizes >= 1, got {layer_sizes}")

        n_layers = len(sizes) - 1
        if activations is None:
            activations = ['relu'] * (n_layers - 1) + ['linear']
        activations = list(activations)
        if len(activations) != n_layers or any(name not in ACTIVATIONS for name in activations):
            raise ValueError(f"Expected {n_layers} activations from {ACTIVATIONS}, got {activations}")
        if activations[-1] != 'linear':
            raise ValueError("The output layer must be linear")

        rng = rng if rng is not None else np.random.default_rng()
        self.layer_sizes = sizes
        self.activations = activations
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @classmethod
    def from_parameters(cls, weights, biases, activations=None):
        if not weights or len(weights) != len(biases):
            raise ValueError("Need one bias per weight matrix and at least one layer")
        net = cls.__new__(cls)
        net.weights = [np.array(w, dtype=np.float64) for w in weights]
        net.biases = [np.array(b, dtype=np.float64) for b in biases]
        net.layer_sizes = [net.weights[0].shape[0]] + [w.shape[1] for w in net.weights]
        n_layers = len(net.weights)
        net.activations = list(activations or ['relu'] * (n_layers - 1) + ['linear'])
        for w, b, fan_in, fan_out in zip(net.weights, net.biases, net.layer_sizes[:-1], net.layer_sizes[1:]):
            if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise ValueError(f"Layer shapes do not chain: {w.shape}, {b.shape}")
        return net

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    @property
    def output_dim(self):
        return self.layer_sizes[-1]

    def parameters(self):
        """Parameter arrays in layer order: W0, b0, W1, b1, ..."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise ValueError(f"Expected inputs of dimension {self.input_dim}, got {x.shape[-1]}")
        return x

    def forward(self, x):
        out, _ = self.forward_with_cache(x)
        return out

    def forward_with_cache(self, x):
        a = self._check_input(x)
        cache = []
        for w, b, name in zip(self.weights, self.biases, self.activations):
            z = a @ w + b
            out = _activate(name, z)
            cache.append((a, z, out))
            a = out
        return a, cache

    def backward(self, cache, grad_out):
        """Gradients of a scalar loss given dLoss/dOutput; same order as parameters()"""
        grads = [None] * (2 * len(self.weights))
        delta = grad_out
        for layer in reversed(range(len(self.weights))):
            a_in, z, out = cache[layer]
            delta = delta * _activation_grad(self.activations[layer], z, out)
            grads[2 * layer] = a_in.T @ delta if a_in.ndim > 1 else np.outer(a_in, delta)
            grads[2 * layer + 1] = delta.sum(axis=0) if delta.ndim > 1 else delta.copy()
            if layer > 0:
                delta = delta @ self.weights[layer].T
        return grads

    def copy_from(self, other):
        if self.layer_sizes != other.layer_sizes:
            raise ValueError(f"Cannot copy a {other.layer_sizes} network into {self.layer_sizes}")
        for mine, theirs in zip(self.parameters(), other.parameters()):
            np.copyto(mine, theirs)
        self.activations = list(other.activations)

    def clone(self):
        return MLP.from_parameters(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activations
        )


def mlp_forward(net, x):
    return net.forward(x)


class SGDMomentum:
    """v <- momentum * v - lr * g; p <- p + v"""

    def __init__(self, learning_rate=1e-3, momentum=0.9):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {learning_rate}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {momentum}")
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.velocities = None

    def step(self, params, grads):
        if self.velocities is None:
            self.velocities = [np.zeros_like(p) for p in params]
        for param, grad, velocity in zip(params, grads, self.velocities):
            velocity *= self.momentum
            velocity -= self.learning_rate * grad
            param += velocity


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self):
        return len(self.actions)

    @classmethod
    def from_transitions(cls, transitions):
        return cls(
            np.array([t.state for t in transitions], dtype=np.float64),
            np.array([t.action for t in transitions], dtype=np.int64),
            np.array([t.reward for t in transitions], dtype=np.float64),
            np.array([t.next_state for t in transitions], dtype=np.float64),
            np.array([t.terminal for t in transitions], dtype=np.float64),
        )


class ReplayBuffer:
    """Ring buffer of transitions with uniform sampling"""

    def __init__(self, capacity, observation_dim, observation_dtype=np.float64):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity, observation_dim), dtype=observation_dtype)
        self.next_states = np.zeros((capacity, observation_dim), dtype=observation_dtype)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.terminals = np.zeros(capacity, dtype=np.float64)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, transition):
        i = self.cursor
        self.states[i] = transition.state
        self.actions[i] = transition.action
        self.rewards[i] = transition.reward
        self.next_states[i] = transition.next_state
        self.terminals[i] = float(transition.terminal)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        if self.size < batch_size:
            raise ValueError(f"Cannot sample {batch_size} transitions from {self.size} stored")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(
            self.states[idx].astype(np.float64),
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx].astype(np.float64),
            self.terminals[idx],
        )


class TargetNetwork:
    """Frozen copy of the online network, refreshed every `sync_period` steps"""

    def __init__(self, online, sync_period=500):
        if sync_period < 1:
            raise ValueError(f"sync_period must be >= 1, got {sync_period}")
        self.net = online.clone()
        self.sync_period = sync_period
        self.syncs = 0

    def forward(self, x):
        return self.net.forward(x)

    def sync(self, online):
        self.net.copy_from(online)
        self.syncs += 1

    def maybe_sync(self, online, step):
        if step > 0 and step % self.sync_period == 0:
            self.sync(online)
            return True
        return False


def sync_target(net, target):
    target.sync(net)
    return target


def dqn_loss_and_gradients(net, target, batch, gamma):
    """Mean squared TD error of the batch and its gradient w.r.t. the online parameters"""
    n = len(batch)
    if n < 1:
        raise ValueError("Cannot train on an empty batch")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")

    # targets are constants: no gradient flows into the target network
    next_q = target.forward(batch.next_states)
    y = batch.rewards + gamma * (1.0 - batch.terminals) * next_q.max(axis=1)

    q, cache = net.forward_with_cache(batch.states)
    rows = np.arange(n)
    diff = q[rows, batch.actions] - y
    loss = float(np.mean(diff * diff))

    grad_out = np.zeros_like(q)
    grad_out[rows, batch.actions] = 2.0 * diff / n
    return loss, net.backward(cache, grad_out)


def dqn_train_step(net, target, batch, optimizer, gamma):
    """One optimizer step on the online network; returns the pre-step loss"""
    loss, grads = dqn_loss_and_gradients(net, target, batch, gamma)
    if not np.isfinite(loss):
        raise DivergenceError(f"DQN loss became non-finite ({loss}) on a batch of {len(batch)}")
    optimizer.step(net.parameters(), grads)
    return loss


class DQNLearner:
    """Online network, target network, replay buffer and optimizer for one agent"""

    def __init__(self, observation_dim, n_actions, rng, hidden_sizes=(128, 64), gamma=0.9,
                 learning_rate=1e-3, momentum=0.9, replay_capacity=10_000, batch_size=32,
                 target_sync=500, train_start=500, observation_dtype=np.float64):
        if train_start < batch_size:
            raise ValueError(f"train_start ({train_start}) must be >= batch_size ({batch_size})")

        self.rng = rng
        self.gamma = gamma
        self.batch_size = batch_size
        self.train_start = train_start
        self.net = MLP([observation_dim, *hidden_sizes, n_actions], rng=rng)
        self.target = TargetNetwork(self.net, sync_period=target_sync)
        self.optimizer = SGDMomentum(learning_rate, momentum)
        self.replay = ReplayBuffer(replay_capacity, observation_dim, observation_dtype)
        self.steps = 0
        self.last_loss = None

    def q_values(self, observation):
        q = self.net.forward(observation)
        if not np.all(np.isfinite(q)):
            raise DivergenceError(f"Network produced non-finite Q-values after {self.steps} steps")
        return q

    def observe(self, transition):
        self.replay.push(transition)
        self.steps += 1
        if len(self.replay) >= self.train_start:
            batch = self.replay.sample(self.batch_size, self.rng)
            self.last_loss = dqn_train_step(self.net, self.target, batch, self.optimizer, self.gamma)
        if self.target.maybe_sync(self.net, self.steps):
            logger.debug(f"Target network synced at step {self.steps}")

    @property
    def model(self):
        return self.net


"""
Tabular Q-learning on the chain and its exact optimum.
"""

import logging

import numpy as np

from envs.chain import ChainEnv
from models.records import Transition

logger = logging.getLogger(__name__)


class QTable:
    """Dense states x actions table of Q-estimates"""

    def __init__(self, table, alpha=0.2, gamma=0.9):
        table = np.array(table, dtype=np.float64)
        if table.ndim != 2 or 0 in table.shape:
            raise ValueError(f"Q-table must be a non-empty matrix, got shape {table.shape}")
        if not np.all(np.isfinite(table)):
            raise ValueError("Q-table entries must be finite")
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        if not 0.0 < gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {gamma}")

        self.table = table
        self.alpha = alpha
        self.gamma = gamma

    @classmethod
    def zeros(cls, n_states, n_actions, alpha=0.2, gamma=0.9):
        return cls(np.zeros((n_states, n_actions)), alpha, gamma)

    @classmethod
    def random(cls, n_states, n_actions, rng, scale=0.01, alpha=0.2, gamma=0.9):
        """Untrained table: uniform noise in [-scale, scale]"""
        return cls(rng.uniform(-scale, scale, size=(n_states, n_actions)), alpha, gamma)

    @property
    def shape(self):
        return self.table.shape

    def q_values(self, state):
        return self.table[self._check_state(state)]

    def _check_state(self, state):
        state = int(state)
        if not 0 <= state < self.table.shape[0]:
            raise ValueError(f"State {state} out of range [0, {self.table.shape[0]})")
        return state

    def td_update(self, transition):
        """One-step Q-learning update of the (s, a) cell; returns the TD error"""
        state = self._check_state(transition.state)
        next_state = self._check_state(transition.next_state)
        action = int(transition.action)
        if not 0 <= action < self.table.shape[1]:
            raise ValueError(f"Action {action} out of range [0, {self.table.shape[1]})")
        if not np.isfinite(transition.reward):
            raise ValueError(f"Reward must be finite, got {transition.reward}")

        bootstrap = 0.0 if transition.terminal else self.gamma * self.table[next_state].max()
        td_error = transition.reward + bootstrap - self.table[state, action]
        self.table[state, action] += self.alpha * td_error
        return float(td_error)

    def copy(self):
        return QTable(self.table.copy(), self.alpha, self.gamma)


def td_update(table, transition):
    table.td_update(transition)
    return table


def value_iteration_oracle(gamma=0.9, tolerance=1e-12, max_iterations=10_000):
    """Q* of the chain by synchronous value iteration; terminal rows stay zero"""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if tolerance <= 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}")

    q = np.zeros((ChainEnv.n_states, ChainEnv.n_actions))
    for iteration in range(1, max_iterations + 1):
        updated = bellman_backup(q, gamma)
        residual = np.abs(updated - q).max()
        q = updated
        if residual < tolerance:
            logger.debug(f"Value iteration converged after {iteration} sweeps (residual {residual:.3e})")
            break
    else:
        logger.warning(f"Value iteration stopped after {max_iterations} sweeps without reaching {tolerance}")

    return QTable(q, alpha=1.0, gamma=gamma)


def bellman_backup(q, gamma):
    """r + gamma * max_b Q(s', b) for every non-terminal (s, a) of the chain"""
    updated = np.zeros_like(q)
    for state in range(ChainEnv.n_states):
        if ChainEnv.is_terminal(state):
            continue
        for action in range(ChainEnv.n_actions):
            next_state, reward, terminal = ChainEnv.transition(state, action)
            updated[state, action] = reward + (0.0 if terminal else gamma * q[next_state].max())
    return updated


def bellman_residual(q_table):
    """Largest |Q(s,a) - (r + gamma max_b Q(s',b))| over non-terminal pairs"""
    q = q_table.table
    return float(np.abs(bellman_backup(q, q_table.gamma) - q).max())


def squared_error(learned, oracle, terminals=ChainEnv.terminals):
    """Sum of squared differences over non-terminal (s, a) pairs"""
    if not isinstance(learned, QTable) or not isinstance(oracle, QTable):
        raise ValueError(f"squared_error compares Q-tables, got {type(learned).__name__}")
    if learned.shape != oracle.shape:
        raise ValueError(f"Q-table shapes differ: {learned.shape} vs {oracle.shape}")
    mask = np.ones(learned.shape[0], dtype=bool)
    mask[list(terminals)] = False
    diff = oracle.table[mask] - learned.table[mask]
    return float(np.sum(diff * diff))


class TabularQLearner:
    """Q-learning agent over one-hot observations"""

    def __init__(self, table):
        self.table = table

    @classmethod
    def for_env(cls, env, alpha, gamma):
        return cls(QTable.zeros(env.n_states, env.n_actions, alpha, gamma))

    def q_values(self, observation):
        return self.table.q_values(np.argmax(observation))

    def observe(self, transition):
        self.table.td_update(Transition(
            int(np.argmax(transition.state)),
            transition.action,
            transition.reward,
            int(np.argmax(transition.next_state)),
            transition.terminal,
        ))

    @property
    def model(self):
        return self.table

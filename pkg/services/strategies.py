"""
Action-selection strategies.

Every strategy maps the Q-values of the current state to an action index. The
count-based strategies keep their visit statistics in a StrategyState that the
caller owns; bonuses are added at selection time only and never enter the TD
target.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from services.counters import (
    FactoredDensityModel, HashCounter, VisitCounter,
    count_bonus_value, mbie_eb_bonus, ucb_bonus,
)
from services.entropy import action_distribution, as_q_values, explore_decision, scaled_entropy
from services.schedules import LinearSchedule


class StrategyName(str, Enum):
    EBE = 'ebe'
    EPSILON_GREEDY = 'epsilon_greedy'
    BOLTZMANN = 'boltzmann'
    UCB = 'ucb'
    MBIE_EB = 'mbie_eb'
    PSEUDO_COUNT = 'pseudo_count'
    HASH_COUNT = 'hash_count'
    GREEDY = 'greedy'


SCHEDULED = (StrategyName.EPSILON_GREEDY, StrategyName.BOLTZMANN)
WITH_BETA = (StrategyName.MBIE_EB, StrategyName.PSEUDO_COUNT, StrategyName.HASH_COUNT)
COUNT_BASED = (StrategyName.UCB, StrategyName.MBIE_EB, StrategyName.PSEUDO_COUNT, StrategyName.HASH_COUNT)


@dataclass(frozen=True)
class StrategyKind:
    """One exploration strategy with its parameters"""

    name: StrategyName
    schedule: LinearSchedule = None
    beta: float = None
    hash_bits: int = 16

    def __post_init__(self):
        object.__setattr__(self, 'name', StrategyName(self.name))
        if self.name in SCHEDULED and self.schedule is None:
            raise ValueError(f"{self.name.value} needs a schedule")
        if self.name in WITH_BETA and (self.beta is None or self.beta <= 0):
            raise ValueError(f"{self.name.value} needs beta > 0, got {self.beta}")
        if self.hash_bits < 1 or self.hash_bits > 62:
            raise ValueError(f"hash_bits must lie in [1, 62], got {self.hash_bits}")

    @classmethod
    def ebe(cls):
        return cls(StrategyName.EBE)

    @classmethod
    def greedy(cls):
        return cls(StrategyName.GREEDY)

    @classmethod
    def epsilon_greedy(cls, schedule):
        return cls(StrategyName.EPSILON_GREEDY, schedule=schedule)

    @classmethod
    def boltzmann(cls, schedule):
        return cls(StrategyName.BOLTZMANN, schedule=schedule)

    @classmethod
    def ucb(cls):
        return cls(StrategyName.UCB)

    @classmethod
    def mbie_eb(cls, beta):
        return cls(StrategyName.MBIE_EB, beta=beta)

    @classmethod
    def pseudo_count(cls, beta):
        return cls(StrategyName.PSEUDO_COUNT, beta=beta)

    @classmethod
    def hash_count(cls, beta, bits=16):
        return cls(StrategyName.HASH_COUNT, beta=beta, hash_bits=bits)


@dataclass
class StrategyState:
    """Mutable statistics of the count-based strategies"""

    visits: VisitCounter = None
    density: FactoredDensityModel = None
    hashes: HashCounter = None

    @classmethod
    def for_kind(cls, kind, n_actions, feature_dim=None, seed=0):
        if kind.name in (StrategyName.UCB, StrategyName.MBIE_EB):
            return cls(visits=VisitCounter())
        if kind.name == StrategyName.PSEUDO_COUNT:
            if feature_dim is None:
                raise ValueError("pseudo_count needs the feature dimension")
            # Binary state features plus the action index as a final feature.
            return cls(density=FactoredDensityModel([2] * feature_dim + [n_actions]))
        if kind.name == StrategyName.HASH_COUNT:
            if feature_dim is None:
                raise ValueError("hash_count needs the feature dimension")
            return cls(hashes=HashCounter(feature_dim, bits=kind.hash_bits, seed=seed))
        return cls()

    def clone(self):
        return StrategyState(
            visits=self.visits.clone() if self.visits else None,
            density=self.density.clone() if self.density else None,
            hashes=self.hashes.clone() if self.hashes else None,
        )


def greedy_action(q):
    """Argmax with ties going to the lowest action index"""
    return int(np.argmax(q))


def boltzmann_distribution(q, temperature):
    """Softmax of Q / T"""
    if temperature <= 0:
        raise ValueError(f"Boltzmann temperature must be > 0, got {temperature}")
    return action_distribution(as_q_values(q) / temperature)


def _with_action(features, action):
    return np.append(np.asarray(features, dtype=np.int64).ravel(), action)


def _bonuses(kind, state, state_key, features, n_actions):
    if kind.name == StrategyName.UCB:
        return np.array([ucb_bonus(state.visits, state_key, a) for a in range(n_actions)])
    if kind.name == StrategyName.MBIE_EB:
        return np.array([mbie_eb_bonus(state.visits, state_key, a, kind.beta) for a in range(n_actions)])
    if kind.name == StrategyName.PSEUDO_COUNT:
        density = state.density
        counts = [density.pseudo_count(_with_action(features, a)) if density.n else 0.0
                  for a in range(n_actions)]
        return np.array([count_bonus_value(kind, c) for c in counts])
    counts = [state.hashes.count(features, a) for a in range(n_actions)]
    return np.array([count_bonus_value(kind, c) for c in counts])


def _record_visit(kind, state, state_key, features, action):
    if kind.name in (StrategyName.UCB, StrategyName.MBIE_EB):
        state.visits.record(state_key, action)
    elif kind.name == StrategyName.PSEUDO_COUNT:
        state.density.update(_with_action(features, action))
    else:
        state.hashes.record(features, action)


def select_action(kind, q, state_key, step, state, rng, features=None):
    """
    Choose an action for the state whose Q-values are `q`.

    `step` is the annealing progress (episode or environment step) used by the
    scheduled strategies; `features` is the state's feature vector for the
    density and hash counters (defaults to `state_key`).
    """
    values = as_q_values(q)
    n_actions = values.size

    if kind.name == StrategyName.GREEDY:
        return greedy_action(values)

    if kind.name == StrategyName.EBE:
        if explore_decision(scaled_entropy(values), rng):
            return int(rng.integers(n_actions))
        return greedy_action(values)

    if kind.name == StrategyName.EPSILON_GREEDY:
        if rng.random() < kind.schedule(step):
            return int(rng.integers(n_actions))
        return greedy_action(values)

    if kind.name == StrategyName.BOLTZMANN:
        probs = boltzmann_distribution(values, kind.schedule(step))
        return int(rng.choice(n_actions, p=probs))

    if features is None:
        features = state_key
    scores = values + _bonuses(kind, state, state_key, features, n_actions)
    action = greedy_action(scores)
    _record_visit(kind, state, state_key, features, action)
    return action


class Strategy:
    """A StrategyKind bound to its own random source and visit statistics"""

    def __init__(self, kind, n_actions, rng, feature_dim=None, hash_seed=0):
        self.kind = kind
        self.n_actions = n_actions
        self.rng = rng
        self.state = StrategyState.for_kind(kind, n_actions, feature_dim, seed=hash_seed)

    def select_action(self, q, state_key, step, features=None):
        return select_action(self.kind, q, state_key, step, self.state, self.rng, features)

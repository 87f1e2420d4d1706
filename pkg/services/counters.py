"""
Visit counting for the count-based exploration baselines.

VisitCounter keeps exact (state, action) counts for UCB and MBIE-EB.
FactoredDensityModel turns a product of per-feature categorical models into
pseudo-counts, and HashCounter counts SimHash codes of feature vectors.
"""

import math
from collections import Counter

import numpy as np

# Bonus of a never-tried pair: dominates any finite Q-value without producing inf/NaN.
UNTRIED_BONUS = 1e9

# Added to counts in the shared beta / sqrt(N + eps) bonus form.
COUNT_EPSILON = 0.01


class VisitCounter:
    """Exact (state, action) visit counts and the total step count t"""

    def __init__(self, counts=None, total_steps=0):
        self.counts = Counter(counts or {})
        self.total_steps = total_steps

    def count(self, state_key, action):
        return self.counts.get((state_key, action), 0)

    def record(self, state_key, action):
        self.counts[(state_key, action)] += 1
        self.total_steps += 1

    def clone(self):
        return VisitCounter(self.counts, self.total_steps)


def ucb_term(total_steps, visits):
    """sqrt(2 ln t / N) with the untried sentinel for N = 0"""
    if visits == 0:
        return UNTRIED_BONUS
    return math.sqrt(2.0 * math.log(max(total_steps, 1)) / visits)


def ucb_bonus(counter, state_key, action):
    return ucb_term(counter.total_steps, counter.count(state_key, action))


def mbie_eb_bonus(counter, state_key, action, beta):
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    visits = counter.count(state_key, action)
    if visits == 0:
        return UNTRIED_BONUS
    return beta / math.sqrt(visits)


def count_bonus_value(kind, count):
    """beta / sqrt(count + 0.01), the bonus shared by pseudo-count and hash-count"""
    beta = kind.beta if hasattr(kind, 'beta') else kind
    if beta is None or beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    return beta / math.sqrt(count + COUNT_EPSILON)


class FactoredDensityModel:
    """
    Product of independent categorical models, one per discretised feature.

    Each feature i with alphabet size K_i assigns value v the probability
    (c_i(v) + prior) / (n + prior * K_i). prior=1 is Laplace smoothing,
    prior=0 the empirical model.
    """

    def __init__(self, alphabet_sizes, prior=1.0):
        sizes = [int(size) for size in alphabet_sizes]
        if not sizes or any(size < 1 for size in sizes):
            raise ValueError(f"Alphabet sizes must be positive, got {alphabet_sizes}")
        if prior < 0:
            raise ValueError(f"prior must be >= 0, got {prior}")

        self.alphabet_sizes = np.asarray(sizes, dtype=np.int64)
        self.prior = float(prior)
        self.counts = [np.zeros(size, dtype=np.int64) for size in sizes]
        self.n = 0

    def _features(self, x):
        values = np.asarray(x, dtype=np.int64).ravel()
        if values.size != self.alphabet_sizes.size:
            raise ValueError(
                f"Expected {self.alphabet_sizes.size} features, got {values.size}"
            )
        if np.any(values < 0) or np.any(values >= self.alphabet_sizes):
            raise ValueError(f"Feature values out of range: {values}")
        return values

    def _value_counts(self, values):
        return np.array([table[v] for table, v in zip(self.counts, values)], dtype=np.float64)

    def probability(self, x):
        values = self._features(x)
        numer = self._value_counts(values) + self.prior
        denom = self.n + self.prior * self.alphabet_sizes
        return float(np.prod(numer / denom))

    def recoding_probability(self, x):
        """Probability of x after a hypothetical update on x"""
        values = self._features(x)
        numer = self._value_counts(values) + 1.0 + self.prior
        denom = self.n + 1.0 + self.prior * self.alphabet_sizes
        return float(np.prod(numer / denom))

    def update(self, x):
        values = self._features(x)
        for table, v in zip(self.counts, values):
            table[v] += 1
        self.n += 1

    def pseudo_count(self, x):
        """rho * (1 - rho') / (rho' - rho), evaluated in log space"""
        if self.n < 1:
            raise ValueError("Pseudo-counts need at least one observed state")

        values = self._features(x)
        counts = self._value_counts(values) + self.prior
        if np.any(counts == 0.0):
            return 0.0  # rho = 0

        totals = self.n + self.prior * self.alphabet_sizes
        log_recoding = float(np.sum(np.log((counts + 1.0) / (totals + 1.0))))
        # log(rho' / rho), summed per feature
        gain = float(np.sum(np.log1p(1.0 / counts) - np.log1p(1.0 / totals)))

        if gain <= 0.0:
            if log_recoding == 0.0:
                # Every feature is certain (rho = rho' = 1): all n observations matched.
                return float(self.n)
            return 0.0
        return float(-np.expm1(log_recoding) / np.expm1(gain))

    def clone(self):
        model = FactoredDensityModel(self.alphabet_sizes, self.prior)
        model.counts = [table.copy() for table in self.counts]
        model.n = self.n
        return model


def pseudo_count(model, state):
    return model.pseudo_count(state)


class HashCounter:
    """Counts of k-bit sign-random-projection codes (SimHash)"""

    def __init__(self, dim, bits=16, seed=0):
        if dim < 1 or bits < 1:
            raise ValueError(f"dim and bits must be >= 1, got dim={dim}, bits={bits}")
        self.dim = dim
        self.bits = bits
        self.seed = seed
        self.projection = np.random.default_rng(seed).standard_normal((bits, dim))
        self._weights = 1 << np.arange(bits, dtype=np.int64)
        self.table = Counter()

    def code(self, state):
        x = np.asarray(state, dtype=np.float64).ravel()
        if x.size != self.dim:
            raise ValueError(f"Expected a {self.dim}-dim state, got {x.size}")
        signs = (self.projection @ x) > 0.0
        return int(signs.astype(np.int64) @ self._weights)

    def _key(self, state, action):
        code = self.code(state)
        return code if action is None else (code, action)

    def count(self, state, action=None):
        return self.table.get(self._key(state, action), 0)

    def record(self, state, action=None):
        self.table[self._key(state, action)] += 1

    def clone(self):
        counter = HashCounter.__new__(HashCounter)
        counter.dim = self.dim
        counter.bits = self.bits
        counter.seed = self.seed
        counter.projection = self.projection.copy()
        counter._weights = self._weights
        counter.table = Counter(self.table)
        return counter


def hash_count(counter, state):
    return counter.count(state)

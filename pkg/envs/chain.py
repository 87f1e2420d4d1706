import numpy as np

from envs.base import StepResult
from services.errors import EpisodeFinishedError

LEFT = 0
RIGHT = 1


class ChainEnv:
    """
    21-state linear chain.

    Episodes start in state 10; states 0 and 20 are terminal. Moving into a
    terminal state pays 1, every other transition pays 0.
    """

    name = 'chain'
    n_states = 21
    n_actions = 2
    start_state = 10
    terminals = (0, 20)
    action_names = ('left', 'right')
    # greedy episodes repeat exactly
    deterministic = True

    def __init__(self, seed=None):
        # Dynamics are deterministic; the seed is accepted for a uniform constructor.
        self.seed = seed
        self.current_state = self.start_state
        self.step_count = 0
        self.done = False

    @property
    def observation_dim(self):
        return self.n_states

    @classmethod
    def is_terminal(cls, state):
        return state in cls.terminals

    @classmethod
    def transition(cls, state, action):
        """Model of the chain: (next_state, reward, terminal) for a non-terminal state"""
        if not 0 < state < cls.n_states - 1:
            raise ValueError(f"No transitions out of state {state}")
        if action not in (LEFT, RIGHT):
            raise ValueError(f"Unknown chain action: {action}")

        next_state = state - 1 if action == LEFT else state + 1
        terminal = cls.is_terminal(next_state)
        return next_state, (1.0 if terminal else 0.0), terminal

    def reset(self):
        self.current_state = self.start_state
        self.step_count = 0
        self.done = False
        return self.observe()

    def step(self, action):
        if self.done or self.is_terminal(self.current_state):
            raise EpisodeFinishedError(f"Chain episode already ended in state {self.current_state}")

        self.current_state, reward, terminal = self.transition(self.current_state, action)
        self.step_count += 1
        self.done = terminal
        return StepResult(self.observe(), reward, terminal, self.step_count)

    def observe(self):
        one_hot = np.zeros(self.n_states, dtype=np.float64)
        one_hot[self.current_state] = 1.0
        return one_hot

    def state_key(self, observation):
        return int(np.argmax(observation))

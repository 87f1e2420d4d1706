import numpy as np
import pytest

from envs.chain import LEFT, RIGHT, ChainEnv
from models.records import Transition
from services.tabular import (
    QTable, TabularQLearner, bellman_residual, squared_error, td_update, value_iteration_oracle,
)


@pytest.fixture(scope='module')
def q_star():
    return value_iteration_oracle(0.9)


def test_oracle_is_a_bellman_fixed_point(q_star):
    assert bellman_residual(q_star) < 1e-10


def test_oracle_start_state_values(q_star):
    assert q_star.table[10, LEFT] == pytest.approx(0.9 ** 9, abs=1e-9)
    assert q_star.table[10, RIGHT] == pytest.approx(0.9 ** 9, abs=1e-9)
    assert q_star.table[1, LEFT] == pytest.approx(1.0, abs=1e-12)


def test_oracle_is_mirror_symmetric(q_star):
    for state in range(21):
        assert abs(q_star.table[state, LEFT] - q_star.table[20 - state, RIGHT]) < 1e-12


def test_oracle_terminal_rows_are_zero(q_star):
    assert not q_star.table[list(ChainEnv.terminals)].any()


def test_oracle_rejects_bad_gamma():
    with pytest.raises(ValueError):
        value_iteration_oracle(1.0)


def test_td_update_terminal_transition():
    table = QTable.zeros(21, 2)
    error = table.td_update(Transition(1, LEFT, 1.0, 0, True))
    assert error == pytest.approx(1.0)
    assert table.table[1, LEFT] == pytest.approx(0.2)


def test_td_update_bootstraps_from_next_state():
    table = QTable.zeros(21, 2)
    table.table[3] = [0.5, 0.25]
    td_update(table, Transition(2, RIGHT, 0.0, 3, False))
    assert table.table[2, RIGHT] == pytest.approx(0.2 * 0.9 * 0.5)


def test_td_update_rejects_bad_indices():
    table = QTable.zeros(21, 2)
    with pytest.raises(ValueError):
        table.td_update(Transition(21, LEFT, 0.0, 0, False))
    with pytest.raises(ValueError):
        table.td_update(Transition(1, 2, 0.0, 0, False))
    with pytest.raises(ValueError):
        table.td_update(Transition(1, LEFT, float('nan'), 0, True))


def test_squared_error(q_star):
    assert squared_error(q_star, q_star) == 0.0
    zeros = QTable.zeros(21, 2)
    assert squared_error(zeros, q_star) == pytest.approx(float(np.sum(q_star.table ** 2)))

    shifted = q_star.copy()
    shifted.table[0] = 5.0  # terminal rows do not count
    assert squared_error(shifted, q_star) == 0.0
    with pytest.raises(ValueError):
        squared_error(QTable.zeros(5, 2), q_star)


def test_q_table_validation(rng):
    with pytest.raises(ValueError):
        QTable(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        QTable(np.full((2, 2), np.inf))
    with pytest.raises(ValueError):
        QTable(np.zeros((2, 2)), alpha=0.0)
    noisy = QTable.random(21, 2, rng)
    assert np.abs(noisy.table).max() <= 0.01


def test_tabular_learner_uses_one_hot_observations():
    env = ChainEnv()
    learner = TabularQLearner.for_env(env, alpha=0.5, gamma=0.9)
    obs = env.reset()
    for _ in range(9):
        result = env.step(LEFT)
        obs = result.observation
    last = env.step(LEFT)
    learner.observe(Transition(obs, LEFT, last.reward, last.observation, last.terminal))
    assert learner.model.table[1, LEFT] == pytest.approx(0.5)
    np.testing.assert_array_equal(learner.q_values(obs), [0.5, 0.0])


def test_one_step_detour_value(q_star):
    assert q_star.table[15, LEFT] == pytest.approx(0.9 ** 6, abs=1e-12)


def test_squared_error_rejects_networks(q_star):
    from services.dqn import MLP

    with pytest.raises(ValueError):
        squared_error(MLP([21, 4, 2], rng=np.random.default_rng(0)), q_star)


def test_random_behaviour_q_learning_converges_to_the_oracle(q_star):
    rng = np.random.default_rng(2024)
    table = QTable.zeros(ChainEnv.n_states, ChainEnv.n_actions, alpha=0.2, gamma=0.9)
    for _ in range(5000):
        state, terminal = ChainEnv.start_state, False
        while not terminal:
            action = int(rng.integers(2))
            next_state, reward, terminal = ChainEnv.transition(state, action)
            td_update(table, Transition(state, action, reward, next_state, terminal))
            state = next_state
    assert squared_error(table, q_star) < 1e-3

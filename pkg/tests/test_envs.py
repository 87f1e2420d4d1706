import numpy as np
import pytest

from envs import EPISODE_CAPS, ChainEnv, MiniBreakout, make_env
from envs.breakout import BRICK_COLUMNS, BRICK_ROWS, LEFT as BREAKOUT_LEFT, RIGHT as BREAKOUT_RIGHT, STILL
from envs.chain import LEFT, RIGHT
from services.errors import EpisodeFinishedError


def test_chain_reset_observation():
    env = ChainEnv()
    obs = env.reset()
    assert obs.shape == (21,)
    assert obs.sum() == 1.0
    assert env.state_key(obs) == 10


def test_chain_walk_left_reaches_terminal_in_ten_steps():
    env = ChainEnv()
    env.reset()
    rewards = []
    for _ in range(10):
        result = env.step(LEFT)
        rewards.append(result.reward)
    assert result.terminal
    assert result.steps == 10
    assert rewards == [0.0] * 9 + [1.0]
    with pytest.raises(EpisodeFinishedError):
        env.step(RIGHT)


def test_chain_transition_model():
    assert ChainEnv.transition(19, RIGHT) == (20, 1.0, True)
    assert ChainEnv.transition(5, RIGHT) == (6, 0.0, False)
    with pytest.raises(ValueError):
        ChainEnv.transition(0, RIGHT)
    with pytest.raises(ValueError):
        ChainEnv.transition(5, 2)


def test_make_env():
    assert isinstance(make_env('chain'), ChainEnv)
    assert isinstance(make_env('mini_breakout', seed=1), MiniBreakout)
    assert set(EPISODE_CAPS) == {'chain', 'mini_breakout'}
    with pytest.raises(ValueError):
        make_env('pong')


def test_breakout_observation_is_two_binary_frames():
    env = MiniBreakout(seed=0)
    obs = env.reset()
    assert obs.shape == (288,)
    assert set(np.unique(obs)) <= {0.0, 1.0}
    # both frames are identical right after a reset
    np.testing.assert_array_equal(obs[:144], obs[144:])
    assert env.n_bricks == 15 and env.score == 0


def play(env, rng, max_episodes=5):
    trace = []
    for _ in range(max_episodes):
        env.reset()
        done = False
        while not done:
            bricks_before = len(env.bricks)
            result = env.step(int(rng.integers(3)))
            done = result.terminal
            trace.append((env.ball_x, env.ball_y, env.paddle_x, result.reward))

            assert 0 <= env.ball_x < env.width and 0 <= env.ball_y < env.height
            if env.ball_y == env.height - 1:
                assert result.terminal  # only a missed ball reaches the paddle row
            assert (env.ball_x, env.ball_y) not in env.bricks
            assert result.reward == bricks_before - len(env.bricks)
            assert 0 <= env.paddle_x <= env.width - env.paddle_width
            assert result.steps <= env.max_steps
    return trace


def test_breakout_invariants_under_random_play():
    play(MiniBreakout(seed=3), np.random.default_rng(0))


def test_breakout_is_deterministic_per_seed():
    first = play(MiniBreakout(seed=5), np.random.default_rng(1))
    second = play(MiniBreakout(seed=5), np.random.default_rng(1))
    assert first == second


def test_breakout_step_after_end_raises():
    env = MiniBreakout(seed=0, max_steps=3)
    env.reset()
    for _ in range(3):
        result = env.step(STILL)
    assert result.terminal
    with pytest.raises(EpisodeFinishedError):
        env.step(STILL)


def test_breakout_paddle_stays_on_board():
    env = MiniBreakout(seed=0)
    env.reset()
    for _ in range(10):
        env._move_paddle(BREAKOUT_LEFT)
    assert env.paddle_x == 0
    for _ in range(20):
        env._move_paddle(BREAKOUT_RIGHT)
    assert env.paddle_x == env.width - env.paddle_width
    with pytest.raises(ValueError):
        env._move_paddle(7)


def test_breakout_brick_layout():
    env = MiniBreakout(seed=0)
    frame = env.render()
    for y in BRICK_ROWS:
        for x in BRICK_COLUMNS:
            assert frame[y, x] == 1


def test_breakout_rejects_small_boards():
    with pytest.raises(ValueError):
        MiniBreakout(width=8)


def test_breakout_reset_layout_per_frame():
    env = MiniBreakout(seed=4)
    obs = env.reset()
    for frame in (obs[:144].reshape(12, 12), obs[144:].reshape(12, 12)):
        assert frame.sum() == 19
        assert frame[11].sum() == 3
        assert frame[1:4].sum() == 15
        assert frame[env.ball_y, env.ball_x] == 1 and env.ball_y == 10


def test_breakout_previous_frame_is_last_current_frame():
    env = MiniBreakout(seed=6)
    rng = np.random.default_rng(6)
    obs = env.reset()
    done = False
    while not done:
        result = env.step(int(rng.integers(3)))
        np.testing.assert_array_equal(result.observation[:144], obs[144:])
        obs, done = result.observation, result.terminal


def test_breakout_brick_hit_reverses_vertical_direction():
    env = MiniBreakout(seed=0)
    env.reset()
    env.ball_x, env.ball_y, env.ball_dx, env.ball_dy = 3, 4, -1, -1
    result = env.step(STILL)
    assert result.reward == 1.0 and not result.terminal
    assert (2, 3) not in env.bricks
    assert (env.ball_x, env.ball_y, env.ball_dy) == (3, 4, 1)


def test_breakout_missed_ball_ends_the_episode_without_reward():
    env = MiniBreakout(seed=0)
    env.reset()
    env.paddle_x = 9
    env.ball_x, env.ball_y, env.ball_dx, env.ball_dy = 2, 10, 1, 1
    result = env.step(STILL)
    assert result.terminal and result.reward == 0.0
    assert env.ball_y == 11


def test_breakout_clearing_every_brick_scores_fifteen():
    env = MiniBreakout(seed=0)
    env.reset()
    total = 0.0
    for x, y in sorted(env.bricks):
        assert not env.done
        env.ball_x, env.ball_y, env.ball_dx, env.ball_dy = x + 1, y + 1, -1, -1
        total += env.step(STILL).reward
    assert total == 15.0
    assert env.done and env.score == 15

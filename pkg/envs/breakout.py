"""
Grid breakout with 15 one-cell bricks.

Row 0 is the top of the board. The paddle sits on the bottom row and the ball
moves one cell diagonally per step. Each step resolves, in order: paddle move,
ball move, wall bounce, brick hit, paddle bounce, termination.
"""

import numpy as np

from envs.base import StepResult
from services.errors import EpisodeFinishedError

LEFT = 0
STILL = 1
RIGHT = 2

BRICK_ROWS = (1, 2, 3)
BRICK_COLUMNS = (2, 4, 6, 8, 10)


class MiniBreakout:
    name = 'mini_breakout'
    n_actions = 3
    action_names = ('left', 'still', 'right')
    deterministic = False

    def __init__(self, seed=None, width=12, height=12, paddle_width=3, max_steps=500):
        if width <= max(BRICK_COLUMNS) or height <= max(BRICK_ROWS) + 2:
            raise ValueError(f"Board {width}x{height} is too small for the brick layout")
        if not 1 <= paddle_width <= width:
            raise ValueError(f"Paddle width must lie in [1, {width}], got {paddle_width}")
        if max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {max_steps}")

        self.width = width
        self.height = height
        self.paddle_width = paddle_width
        self.max_steps = max_steps
        self.rng = np.random.default_rng(seed)
        self.reset()

    @property
    def observation_dim(self):
        return 2 * self.width * self.height

    @property
    def n_bricks(self):
        return len(BRICK_ROWS) * len(BRICK_COLUMNS)

    @property
    def score(self):
        return self.n_bricks - len(self.bricks)

    def reset(self):
        self.bricks = {(x, y) for y in BRICK_ROWS for x in BRICK_COLUMNS}
        self.paddle_x = (self.width - self.paddle_width) // 2
        self.ball_x = self.paddle_x + self.paddle_width // 2
        self.ball_y = self.height - 2
        self.ball_dx = int(self.rng.choice((-1, 1)))
        self.ball_dy = -1
        self.step_count = 0
        self.done = False

        self.current_frame = self.render()
        self.previous_frame = self.current_frame.copy()
        return self.observe()

    def render(self):
        """Binary grid of bricks, paddle and ball"""
        frame = np.zeros((self.height, self.width), dtype=np.uint8)
        for x, y in self.bricks:
            frame[y, x] = 1
        frame[self.height - 1, self.paddle_x:self.paddle_x + self.paddle_width] = 1
        frame[self.ball_y, self.ball_x] = 1
        return frame

    def observe(self):
        stack = np.stack([self.previous_frame, self.current_frame])
        return stack.ravel().astype(np.float64)

    def state_key(self, observation):
        return np.asarray(observation, dtype=np.uint8).tobytes()

    def _move_paddle(self, action):
        if action == LEFT:
            self.paddle_x = max(0, self.paddle_x - 1)
        elif action == RIGHT:
            self.paddle_x = min(self.width - self.paddle_width, self.paddle_x + 1)
        elif action != STILL:
            raise ValueError(f"Unknown breakout action: {action}")

    def step(self, action):
        if self.done:
            raise EpisodeFinishedError("Breakout episode already ended; call reset()")

        self._move_paddle(action)

        x = self.ball_x + self.ball_dx
        y = self.ball_y + self.ball_dy

        # walls and ceiling
        if x < 0 or x >= self.width:
            self.ball_dx = -self.ball_dx
            x = self.ball_x + self.ball_dx
        if y < 0:
            self.ball_dy = -self.ball_dy
            y = self.ball_y + self.ball_dy

        reward = 0.0
        missed = False
        if (x, y) in self.bricks:
            # The ball bounces back and stays put while the brick breaks.
            self.bricks.remove((x, y))
            reward = 1.0
            self.ball_dy = -self.ball_dy
            x, y = self.ball_x, self.ball_y
        elif y == self.height - 1:
            if self.paddle_x <= x < self.paddle_x + self.paddle_width:
                # Reflected off the paddle: slide along the row above it.
                self.ball_dy = -self.ball_dy
                y = self.ball_y
            else:
                missed = True

        self.ball_x, self.ball_y = x, y
        self.step_count += 1
        self.done = missed or not self.bricks or self.step_count >= self.max_steps

        self.previous_frame = self.current_frame
        self.current_frame = self.render()
        return StepResult(self.observe(), reward, self.done, self.step_count)

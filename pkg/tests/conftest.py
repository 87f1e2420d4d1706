import textwrap

import numpy as np
import pytest

from services.experiment_config import parse_config


def chain_config_text(strategies, episodes=20, seeds='0, 1', extra=''):
    """Small chain experiment; `strategies` maps label -> section body"""
    text = textwrap.dedent(f"""\
        [experiment]
        environment = chain
        learner = tabular
        episodes = {episodes}
        max_episode_steps = 50
        gamma = 0.9
        alpha = 0.2
        eval_every = 5
        eval_episodes = 2
        seeds = {seeds}
        smoothing = 0.5
        """) + textwrap.dedent(extra)
    for label, body in strategies.items():
        text += f"\n[strategy:{label}]\n" + textwrap.dedent(body)
    return text


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain_config():
    def build(strategies=None, **kwargs):
        strategies = strategies or {'ebe': 'kind = ebe\n'}
        return parse_config(chain_config_text(strategies, **kwargs))
    return build


@pytest.fixture
def write_config(tmp_path):
    def write(text, name='experiment.cfg'):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return path
    return write

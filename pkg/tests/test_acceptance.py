"""
End-to-end reproductions on the shipped configs. Slow: run with `pytest -m slow`.
"""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from envs import ChainEnv
from models.records import TRAIN
from services.experiment_config import validate_config
from services.harness import diagnose_model, run_cell, run_experiment, untrained_model
from services.plotting import ema_smooth, mean_curves

pytestmark = pytest.mark.slow

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


def final_sq_error(result):
    return {row.strategy: row.mean for row in result.summary if row.metric == 'train.sq_error'}


def test_ebe_converges_on_the_chain_while_annealed_baselines_lag(tmp_path):
    result = run_experiment(validate_config(CONFIG_DIR / 'chain_paper.cfg'), output_dir=tmp_path, render=False)
    errors = final_sq_error(result)
    assert errors['ebe'] < 0.05
    assert errors['epsilon_greedy'] >= 2 * errors['ebe']
    assert errors['boltzmann'] >= 2 * errors['ebe']


def test_count_baselines_on_the_chain(tmp_path):
    result = run_experiment(validate_config(CONFIG_DIR / 'chain_counts.cfg'), output_dir=tmp_path, render=False)
    errors = final_sq_error(result)
    assert errors['mbie_eb_beta100'] <= 2 * errors['ebe']
    assert errors['ucb'] > errors['ebe']


def episodes_to_half_final(records, strategy, weight):
    _, means = mean_curves([r for r in records if r.strategy == strategy], 'reward', TRAIN)[strategy]
    smoothed = np.array(ema_smooth(means, weight).smoothed)
    return int(np.argmax(smoothed >= 0.5 * smoothed[-1])) + 1


def test_ebe_scores_early_on_breakout(tmp_path):
    cfg = validate_config(CONFIG_DIR / 'breakout.cfg')
    cfg = replace(cfg, strategies=tuple(s for s in cfg.strategies if s.label in ('ebe', 'epsilon_greedy')))
    result = run_experiment(cfg, output_dir=tmp_path, render=False)
    assert not result.failures
    ebe = episodes_to_half_final(result.records, 'ebe', cfg.smoothing)
    epsilon = episodes_to_half_final(result.records, 'epsilon_greedy', cfg.smoothing)
    assert ebe <= epsilon / 2


@pytest.mark.parametrize('seed', range(5))
def test_trained_agent_has_lower_entropy_and_higher_reward(seed):
    cfg = validate_config(CONFIG_DIR / 'chain_paper.cfg')
    spec = next(s for s in cfg.strategies if s.label == 'ebe')
    trained = run_cell(cfg, spec, seed).model

    after = diagnose_model(trained, 'chain', episodes=10, seed=seed)
    before = diagnose_model(untrained_model(ChainEnv(), seed), 'chain', episodes=10, seed=seed)
    assert after.mean_h0 < before.mean_h0
    assert after.mean_reward > before.mean_reward

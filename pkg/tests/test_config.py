from pathlib import Path

import pytest

from config import Config
from services.errors import ConfigError
from services.experiment_config import parse_config, validate_config
from services.schedules import LinearSchedule, epsilon_variant
from services.strategies import StrategyName
from tests.conftest import chain_config_text

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


def problems_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.problems


def test_shipped_chain_config_loads_cleanly():
    cfg = validate_config(CONFIG_DIR / 'chain_paper.cfg')
    assert (cfg.environment, cfg.learner) == ('chain', 'tabular')
    assert (cfg.gamma, cfg.alpha, cfg.episodes, cfg.max_episode_steps) == (0.9, 0.2, 200, 50)
    assert cfg.seeds == (0, 1, 2, 3, 4)
    kinds = {spec.label: spec.kind for spec in cfg.strategies}
    assert kinds['ebe'].name == StrategyName.EBE
    assert kinds['epsilon_greedy'].schedule == LinearSchedule(1.0, 0.0, 0, 200)
    assert kinds['boltzmann'].schedule == LinearSchedule(0.8, 0.1, 0, 200)


@pytest.mark.parametrize('name', ['chain_paper.cfg', 'chain_counts.cfg', 'breakout.cfg', 'breakout_counts.cfg'])
def test_every_shipped_config_validates(name):
    cfg = validate_config(CONFIG_DIR / name)
    assert cfg.strategies


def test_out_of_range_gamma_names_key_and_range():
    problems = problems_of(chain_config_text({'ebe': 'kind = ebe\n'}).replace('gamma = 0.9', 'gamma = 1.5'))
    assert len(problems) == 1
    assert 'gamma' in problems[0] and '(0, 1]' in problems[0]
    assert problems[0].startswith('line 6:')


def test_missing_seed_list_is_reported():
    text = chain_config_text({'ebe': 'kind = ebe\n'}).replace('seeds = 0, 1\n', '')
    problems = problems_of(text)
    assert any('seeds' in p and 'required key is missing' in p for p in problems)


def test_every_problem_is_reported_at_once():
    text = chain_config_text(
        {'eps': 'kind = epsilon_greedy\nstart_value = 2\nend_value = 0\n', 'bad': 'kind = softmax\n'},
        extra='colour = blue\n',
    ).replace('alpha = 0.2', 'alpha = 0')
    problems = problems_of(text)
    assert any('alpha' in p for p in problems)
    assert any('colour' in p and 'unknown key' in p for p in problems)
    assert any('start_value' in p for p in problems)
    assert any('softmax' in p for p in problems)


def test_syntax_errors_carry_line_numbers():
    problems = problems_of('[experiment]\nenvironment = chain\nthis line is junk\n')
    assert problems[0].startswith('line 3')


def test_missing_section_header():
    problems = problems_of('environment = chain\n')
    assert problems[0].startswith('line 1')


def test_tabular_learner_needs_the_chain():
    text = chain_config_text({'ebe': 'kind = ebe\n'}).replace('environment = chain', 'environment = mini_breakout')
    assert any('tabular' in p for p in problems_of(text))


def test_episodes_and_epochs_are_exclusive():
    text = chain_config_text({'ebe': 'kind = ebe\n'}, extra='epochs = 2\nsteps_per_epoch = 100\n')
    assert any('exactly one' in p for p in problems_of(text))


def test_epoch_mode_schedules_run_over_steps():
    text = chain_config_text(
        {'eps': 'kind = epsilon_greedy\nvariant = III\n'}, episodes=0,
        extra='epochs = 4\nsteps_per_epoch = 250\n',
    )
    cfg = parse_config(text)
    assert cfg.epoch_mode and cfg.horizon == 1000
    assert cfg.strategies[0].kind.schedule == LinearSchedule(1.0, 0.01, 100, 1000)


def test_beta_is_required_for_mbie_eb_and_rejected_for_ebe():
    problems = problems_of(chain_config_text({'m': 'kind = mbie_eb\n', 'e': 'kind = ebe\nbeta = 1\n'}))
    assert any('[strategy:m] beta: required key is missing' in p for p in problems)
    assert any('does not apply to ebe' in p for p in problems)


def test_empty_roster_is_an_error():
    assert any('roster is empty' in p for p in problems_of(chain_config_text({})))


def test_overrides():
    cfg = parse_config(chain_config_text({'ebe': 'kind = ebe\n'}))
    changed = cfg.with_overrides(seeds=(7,), output_dir='elsewhere')
    assert changed.seeds == (7,) and changed.output_dir == 'elsewhere'
    assert cfg.seeds == (0, 1)
    with pytest.raises(ConfigError):
        cfg.with_overrides(seeds=())
    with pytest.raises(ConfigError):
        cfg.with_overrides(seeds=(3, -2))


def test_sweep_threads_from_environment(monkeypatch):
    monkeypatch.setenv('EBE_THREADS', '3')
    assert Config.sweep_threads() == 3
    monkeypatch.setenv('EBE_THREADS', '')
    assert Config.sweep_threads() >= 1
    monkeypatch.setenv('EBE_THREADS', 'zero')
    with pytest.raises(ValueError):
        Config.sweep_threads()


def test_breakout_counts_roster():
    cfg = validate_config(CONFIG_DIR / 'breakout_counts.cfg')
    kinds = {spec.label: spec.kind for spec in cfg.strategies}
    assert kinds['pseudo_count'].name == StrategyName.PSEUDO_COUNT and kinds['pseudo_count'].beta == 1.0
    assert kinds['hash_count'].name == StrategyName.HASH_COUNT and kinds['hash_count'].hash_bits == 16
    for variant in ('I', 'II', 'III'):
        assert kinds[f'epsilon_{variant}'].schedule == epsilon_variant(variant, cfg.episodes)
    assert cfg.save_every == 100


def test_dqn_learner_is_rejected_on_the_chain():
    text = chain_config_text({'ebe': 'kind = ebe\n'}).replace('learner = tabular', 'learner = dqn')
    problems = problems_of(text)
    assert len(problems) == 1
    assert '[experiment] learner' in problems[0] and 'chain' in problems[0]


def test_negative_seeds_are_out_of_range():
    problems = problems_of(chain_config_text({'ebe': 'kind = ebe\n'}, seeds='3, -1'))
    assert len(problems) == 1
    assert '[experiment] seeds' in problems[0] and 'seeds >= 0' in problems[0]


def test_save_every_defaults_to_off():
    cfg = parse_config(chain_config_text({'ebe': 'kind = ebe\n'}))
    assert cfg.save_every == 0
    problems = problems_of(chain_config_text({'ebe': 'kind = ebe\n'}, extra='save_every = -5\n'))
    assert any('save_every' in p for p in problems)

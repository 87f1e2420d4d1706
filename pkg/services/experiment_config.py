"""
Experiment config files.

INI-style text parsed with configparser: an [experiment] section whose keys are
the ExperimentConfig field names, plus one [strategy:<label>] section per entry
of the strategy roster. Validation collects every problem before failing.
"""

import configparser
import logging
import re
from dataclasses import dataclass, replace

from envs import ENVIRONMENTS
from services.errors import ConfigError
from services.schedules import EPSILON_VARIANTS, LinearSchedule, epsilon_variant
from services.strategies import SCHEDULED, WITH_BETA, StrategyKind, StrategyName

logger = logging.getLogger(__name__)

EXPERIMENT_SECTION = 'experiment'
STRATEGY_PREFIX = 'strategy:'
LEARNERS = ('tabular', 'dqn')
STRATEGY_KEYS = ('kind', 'start_value', 'end_value', 'begin_step', 'end_step', 'variant', 'beta', 'hash_bits')
REQUIRED = object()


@dataclass(frozen=True)
class StrategySpec:
    """A labelled roster entry"""

    label: str
    kind: StrategyKind


@dataclass(frozen=True)
class ExperimentConfig:
    environment: str
    learner: str
    strategies: tuple
    seeds: tuple
    episodes: int = 0
    epochs: int = 0
    steps_per_epoch: int = 0
    max_episode_steps: int = 50
    gamma: float = 0.9
    alpha: float = 0.2
    eval_episodes: int = 10
    eval_every: int = 1
    smoothing: float = 0.99
    output_dir: str = 'results'
    learning_rate: float = 1e-3
    momentum: float = 0.9
    hidden_sizes: tuple = (128, 64)
    replay_capacity: int = 10_000
    batch_size: int = 32
    target_sync: int = 500
    train_start: int = 500
    record_wall_time: bool = False
    save_models: bool = True
    save_every: int = 0

    @property
    def epoch_mode(self):
        return self.epochs > 0

    @property
    def horizon(self):
        """Length of the run in annealing units: episodes, or environment steps in epoch mode"""
        return self.epochs * self.steps_per_epoch if self.epoch_mode else self.episodes

    def with_overrides(self, seeds=None, output_dir=None):
        changes = {}
        if seeds is not None:
            if not seeds:
                raise ConfigError(["seeds: the seed list must not be empty"])
            if any(seed < 0 for seed in seeds):
                raise ConfigError([f"seeds: {min(seeds)} is outside the legal range seeds >= 0"])
            changes['seeds'] = tuple(seeds)
        if output_dir is not None:
            changes['output_dir'] = str(output_dir)
        return replace(self, **changes)


def _parse_int(text):
    return int(text.strip())


def _parse_float(text):
    return float(text.strip())


def _parse_bool(text):
    value = text.strip().lower()
    if value in ('true', 'yes', 'on', '1'):
        return True
    if value in ('false', 'no', 'off', '0'):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _parse_int_list(text):
    items = [item.strip() for item in re.split(r'[,\s]+', text.strip()) if item.strip()]
    return tuple(int(item) for item in items)


def _parse_str(text):
    return text.strip()


# field name -> (parser, default)
EXPERIMENT_FIELDS = {
    'environment': (_parse_str, REQUIRED),
    'learner': (_parse_str, REQUIRED),
    'seeds': (_parse_int_list, REQUIRED),
    'episodes': (_parse_int, 0),
    'epochs': (_parse_int, 0),
    'steps_per_epoch': (_parse_int, 0),
    'max_episode_steps': (_parse_int, 50),
    'gamma': (_parse_float, 0.9),
    'alpha': (_parse_float, 0.2),
    'eval_episodes': (_parse_int, 10),
    'eval_every': (_parse_int, 1),
    'smoothing': (_parse_float, 0.99),
    'output_dir': (_parse_str, 'results'),
    'learning_rate': (_parse_float, 1e-3),
    'momentum': (_parse_float, 0.9),
    'hidden_sizes': (_parse_int_list, (128, 64)),
    'replay_capacity': (_parse_int, 10_000),
    'batch_size': (_parse_int, 32),
    'target_sync': (_parse_int, 500),
    'train_start': (_parse_int, 500),
    'record_wall_time': (_parse_bool, False),
    'save_models': (_parse_bool, True),
    'save_every': (_parse_int, 0),
}

# field name -> (check, description of the legal range)
RANGES = {
    'seeds': (lambda v: all(seed >= 0 for seed in v), 'seeds >= 0'),
    'episodes': (lambda v: v >= 0, '>= 0'),
    'epochs': (lambda v: v >= 0, '>= 0'),
    'steps_per_epoch': (lambda v: v >= 0, '>= 0'),
    'max_episode_steps': (lambda v: v >= 1, '>= 1'),
    'gamma': (lambda v: 0.0 < v <= 1.0, '(0, 1]'),
    'alpha': (lambda v: 0.0 < v <= 1.0, '(0, 1]'),
    'eval_episodes': (lambda v: v >= 0, '>= 0'),
    'eval_every': (lambda v: v >= 1, '>= 1'),
    'smoothing': (lambda v: 0.0 <= v < 1.0, '[0, 1)'),
    'learning_rate': (lambda v: v > 0.0, '> 0'),
    'momentum': (lambda v: 0.0 <= v < 1.0, '[0, 1)'),
    'hidden_sizes': (lambda v: all(size >= 1 for size in v), 'sizes >= 1'),
    'replay_capacity': (lambda v: v >= 1, '>= 1'),
    'batch_size': (lambda v: v >= 1, '>= 1'),
    'target_sync': (lambda v: v >= 1, '>= 1'),
    'train_start': (lambda v: v >= 1, '>= 1'),
    'save_every': (lambda v: v >= 0, '>= 0'),
}


def _key_lines(text):
    """Map (section, key) to the line it was written on"""
    lines = {}
    section = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        header = re.match(r'^\s*\[([^\]]+)\]\s*$', line)
        if header:
            section = header.group(1).strip()
            continue
        option = re.match(r'^([^\s=:#;][^=:]*?)\s*[=:]', line)
        if option and section is not None:
            lines.setdefault((section, option.group(1).strip()), line_no)
    return lines


class _Problems:
    def __init__(self, key_lines):
        self.key_lines = key_lines
        self.items = []

    def add(self, section, key, message):
        line = self.key_lines.get((section, key))
        prefix = f"line {line}: " if line else ""
        self.items.append(f"{prefix}[{section}] {key}: {message}")


def _parse_experiment(section, problems):
    values = {}
    for key in section:
        if key not in EXPERIMENT_FIELDS:
            problems.add(EXPERIMENT_SECTION, key, "unknown key")

    for name, (parse, default) in EXPERIMENT_FIELDS.items():
        if name not in section:
            if default is REQUIRED:
                problems.add(EXPERIMENT_SECTION, name, "required key is missing")
            else:
                values[name] = default
            continue
        raw = section[name]
        try:
            value = parse(raw)
        except ValueError:
            problems.add(EXPERIMENT_SECTION, name, f"cannot parse {raw!r}")
            continue
        if name in RANGES:
            check, legal = RANGES[name]
            if not check(value):
                problems.add(EXPERIMENT_SECTION, name, f"{raw.strip()} is outside the legal range {legal}")
                continue
        values[name] = value

    _check_experiment(values, problems)
    return values


def _check_experiment(values, problems):
    environment = values.get('environment')
    if environment is not None and environment not in ENVIRONMENTS:
        problems.add(EXPERIMENT_SECTION, 'environment',
                     f"unknown environment {environment!r} (expected one of {', '.join(ENVIRONMENTS)})")
    learner = values.get('learner')
    if learner is not None and learner not in LEARNERS:
        problems.add(EXPERIMENT_SECTION, 'learner', f"unknown learner {learner!r} (expected one of {', '.join(LEARNERS)})")
    if learner == 'tabular' and environment not in (None, 'chain'):
        problems.add(EXPERIMENT_SECTION, 'learner', "the tabular learner only runs on the chain")
    if learner == 'dqn' and environment == 'chain':
        problems.add(EXPERIMENT_SECTION, 'learner', "the dqn learner does not run on the chain (use tabular)")
    if environment == 'chain' and values.get('gamma') == 1.0:
        problems.add(EXPERIMENT_SECTION, 'gamma', "the chain oracle needs gamma < 1")

    if 'seeds' in values and not values['seeds']:
        problems.add(EXPERIMENT_SECTION, 'seeds', "the seed list must not be empty")
    if 'seeds' in values and len(set(values['seeds'])) != len(values['seeds']):
        problems.add(EXPERIMENT_SECTION, 'seeds', "seeds must be distinct")

    episodes, epochs = values.get('episodes', 0), values.get('epochs', 0)
    if (episodes > 0) == (epochs > 0):
        problems.add(EXPERIMENT_SECTION, 'episodes', "set exactly one of episodes or epochs to a positive value")
    if epochs > 0 and values.get('steps_per_epoch', 0) < 1:
        problems.add(EXPERIMENT_SECTION, 'steps_per_epoch', "must be >= 1 when epochs are used")
    if values.get('train_start', 1) < values.get('batch_size', 1):
        problems.add(EXPERIMENT_SECTION, 'train_start', "must be >= batch_size")


def _horizon(values):
    if values.get('epochs', 0) > 0:
        return max(values['epochs'] * values.get('steps_per_epoch', 0), 1)
    return max(values.get('episodes', 0), 1)


def _parse_strategy(name, section, label, horizon, problems):
    for key in section:
        if key not in STRATEGY_KEYS:
            problems.add(name, key, "unknown key")

    if 'kind' not in section:
        problems.add(name, 'kind', "required key is missing")
        return None
    try:
        kind = StrategyName(section['kind'].strip())
    except ValueError:
        problems.add(name, 'kind', f"unknown strategy {section['kind'].strip()!r} "
                                   f"(expected one of {', '.join(k.value for k in StrategyName)})")
        return None

    def number(key, parse=_parse_float):
        try:
            return parse(section[key])
        except ValueError:
            problems.add(name, key, f"cannot parse {section[key]!r}")
            return None

    allowed = {'kind'}
    schedule = None
    if kind in SCHEDULED:
        allowed |= {'start_value', 'end_value', 'begin_step', 'end_step'}
        if kind == StrategyName.EPSILON_GREEDY:
            allowed.add('variant')
        schedule = _parse_schedule(name, section, kind, horizon, number, problems)

    beta = None
    if kind in WITH_BETA:
        allowed.add('beta')
        if 'beta' not in section:
            problems.add(name, 'beta', "required key is missing")
        else:
            beta = number('beta')
            if beta is not None and beta <= 0:
                problems.add(name, 'beta', f"{section['beta'].strip()} is outside the legal range > 0")
                beta = None

    hash_bits = 16
    if kind == StrategyName.HASH_COUNT:
        allowed.add('hash_bits')
        if 'hash_bits' in section:
            hash_bits = number('hash_bits', _parse_int)
            if hash_bits is not None and not 1 <= hash_bits <= 62:
                problems.add(name, 'hash_bits', f"{section['hash_bits'].strip()} is outside the legal range [1, 62]")
                hash_bits = None

    for key in section:
        if key in STRATEGY_KEYS and key not in allowed:
            problems.add(name, key, f"does not apply to {kind.value}")

    if (kind in SCHEDULED and schedule is None) or (kind in WITH_BETA and beta is None) or hash_bits is None:
        return None
    return StrategySpec(label, StrategyKind(kind, schedule=schedule, beta=beta, hash_bits=hash_bits))


def _parse_schedule(name, section, kind, horizon, number, problems):
    if 'variant' in section and kind == StrategyName.EPSILON_GREEDY:
        variant = section['variant'].strip()
        extra = [key for key in ('start_value', 'end_value', 'begin_step', 'end_step') if key in section]
        if extra:
            problems.add(name, 'variant', f"cannot be combined with {', '.join(extra)}")
            return None
        if variant not in EPSILON_VARIANTS:
            problems.add(name, 'variant', f"unknown variant {variant!r} (expected one of {', '.join(EPSILON_VARIANTS)})")
            return None
        return epsilon_variant(variant, horizon)

    ok = True
    values = {}
    for key in ('start_value', 'end_value'):
        if key not in section:
            problems.add(name, key, "required key is missing")
            ok = False
            continue
        values[key] = number(key)
        ok = ok and values[key] is not None
    begin = number('begin_step', _parse_int) if 'begin_step' in section else 0
    end = number('end_step', _parse_int) if 'end_step' in section else horizon
    if begin is None or end is None or not ok:
        return None

    if kind == StrategyName.EPSILON_GREEDY:
        for key in ('start_value', 'end_value'):
            if not 0.0 <= values[key] <= 1.0:
                problems.add(name, key, f"{values[key]} is outside the legal range [0, 1]")
                ok = False
    else:
        for key in ('start_value', 'end_value'):
            if values[key] <= 0.0:
                problems.add(name, key, f"{values[key]} is outside the legal range > 0 (temperature)")
                ok = False
    if not 0 <= begin <= end:
        problems.add(name, 'begin_step', f"need 0 <= begin_step <= end_step, got {begin} and {end}")
        ok = False
    if not ok:
        return None
    return LinearSchedule(values['start_value'], values['end_value'], begin, end)


def parse_config(text, source='<string>'):
    """Parse and validate config text; raises ConfigError listing every problem"""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(_syntax_problems(e), source) from e

    problems = _Problems(_key_lines(text))
    for name in parser.sections():
        if name != EXPERIMENT_SECTION and not name.startswith(STRATEGY_PREFIX):
            problems.items.append(f"unknown section [{name}]")

    if not parser.has_section(EXPERIMENT_SECTION):
        problems.items.append(f"missing section [{EXPERIMENT_SECTION}]")
        values = {}
    else:
        values = _parse_experiment(parser[EXPERIMENT_SECTION], problems)

    horizon = _horizon(values)
    strategies = []
    for name in parser.sections():
        if not name.startswith(STRATEGY_PREFIX):
            continue
        label = name[len(STRATEGY_PREFIX):].strip()
        if not label or not re.fullmatch(r'[A-Za-z0-9_.\-+=]+', label):
            problems.items.append(f"[{name}] strategy labels may only use letters, digits and _ . - + =")
            continue
        spec = _parse_strategy(name, parser[name], label, horizon, problems)
        if spec is not None:
            strategies.append(spec)
    if not any(name.startswith(STRATEGY_PREFIX) for name in parser.sections()):
        problems.items.append(f"no [{STRATEGY_PREFIX}<label>] sections: the strategy roster is empty")

    if problems.items:
        raise ConfigError(problems.items, source)
    return ExperimentConfig(strategies=tuple(strategies), **values)


def _syntax_problems(error):
    lineno = getattr(error, 'lineno', None)
    if lineno is not None:
        return [f"line {lineno}: {error.message if hasattr(error, 'message') else error}"]
    errors = getattr(error, 'errors', None)
    if errors:
        return [f"line {line_no}: cannot parse {line.strip()!r}" for line_no, line in errors]
    return [str(error)]


def validate_config(path):
    """Load and fully validate an experiment config file"""
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        logger.error(f"Failed to read config {path}: {str(e)}")
        raise

    config = parse_config(text, source=str(path))
    logger.info(f"Loaded config {path}: {config.environment}/{config.learner}, "
                f"{len(config.strategies)} strategies x {len(config.seeds)} seeds")
    return config

"""
Experiment harness.

A sweep is a grid of (strategy, seed) cells. Each cell owns its environment,
learner, strategy and evaluation environment, all seeded from one
numpy SeedSequence so that a cell's rows depend only on its own seed.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from envs import EPISODE_CAPS, make_env
from models.records import FAILED, TEST, TRAIN, CellResult, EpisodeRecord, SummaryRow, Transition
from services.dqn import MLP, DQNLearner
from services.entropy import mean_episode_entropy, scaled_entropy
from services.errors import DivergenceError, ModelFileError
from services.strategies import Strategy, greedy_action
from services.tabular import QTable, TabularQLearner, squared_error, value_iteration_oracle
from storage.model_files import MODEL_SUFFIX, load_model, save_model
from storage.records_csv import write_csv, write_summary

logger = logging.getLogger(__name__)

SUMMARY_METRICS = ('reward', 'steps', 'h0', 'sq_error')


@dataclass(frozen=True)
class EpisodeOutcome:
    reward: float
    steps: int
    h0: float


@dataclass
class ExperimentResult:
    records: list
    summary: list
    failures: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DiagnosticRow:
    model: str
    mean_h0: float
    mean_reward: float


@lru_cache(maxsize=8)
def chain_oracle(gamma):
    return value_iteration_oracle(gamma)


def _child_seed(sequence):
    return int(sequence.generate_state(1)[0])


def build_learner(cfg, env, rng):
    if cfg.learner == 'tabular':
        return TabularQLearner.for_env(env, cfg.alpha, cfg.gamma)
    return DQNLearner(
        env.observation_dim, env.n_actions, rng,
        hidden_sizes=cfg.hidden_sizes, gamma=cfg.gamma,
        learning_rate=cfg.learning_rate, momentum=cfg.momentum,
        replay_capacity=cfg.replay_capacity, batch_size=cfg.batch_size,
        target_sync=cfg.target_sync, train_start=cfg.train_start,
    )


def run_episode(env, q_function, choose, max_steps, learn=None):
    """
    Play one episode of at most `max_steps` steps.

    `choose(q, observation, step_in_episode)` picks the action; `learn`, when
    given, receives every transition. H₀ is the mean scaled entropy of the
    Q-values seen at each decision.
    """
    observation = env.reset()
    total, steps, entropies = 0.0, 0, []
    while steps < max_steps:
        q = q_function(observation)
        entropies.append(scaled_entropy(q))
        action = choose(q, observation, steps)
        result = env.step(action)
        if learn is not None:
            learn(Transition(observation, action, result.reward, result.observation, result.terminal))
        total += result.reward
        steps += 1
        observation = result.observation
        if result.terminal:
            break
    return EpisodeOutcome(total, steps, mean_episode_entropy(entropies))


def greedy_rollout(env, q_function, max_steps):
    """Test episode: greedy actions, no learning"""
    return run_episode(env, q_function, lambda q, obs, t: greedy_action(q), max_steps)


def evaluate(env, q_function, episodes, max_steps):
    """Mean reward, steps and H₀ over greedy test episodes"""
    if getattr(env, 'deterministic', False):
        episodes = min(episodes, 1)
    outcomes = [greedy_rollout(env, q_function, max_steps) for _ in range(episodes)]
    return EpisodeOutcome(
        float(np.mean([o.reward for o in outcomes])),
        float(np.mean([o.steps for o in outcomes])),
        float(np.mean([o.h0 for o in outcomes])),
    )


def _copy_model(model):
    return model.copy() if isinstance(model, QTable) else model.clone()


class _Cell:
    """Training state of one (strategy, seed) cell"""

    def __init__(self, cfg, spec, seed):
        self.cfg = cfg
        self.spec = spec
        self.seed = seed

        env_seq, strategy_seq, learner_seq, eval_seq, hash_seq = np.random.SeedSequence(seed).spawn(5)
        self.env = make_env(cfg.environment, seed=_child_seed(env_seq))
        self.eval_env = make_env(cfg.environment, seed=_child_seed(eval_seq))
        self.learner = build_learner(cfg, self.env, np.random.default_rng(learner_seq))
        self.strategy = Strategy(
            spec.kind, self.env.n_actions, np.random.default_rng(strategy_seq),
            feature_dim=self.env.observation_dim, hash_seed=_child_seed(hash_seq),
        )
        # squared error is only defined for tables on the chain
        on_chain = cfg.environment == 'chain' and isinstance(self.learner.model, QTable)
        self.oracle = chain_oracle(cfg.gamma) if on_chain else None
        self.records = []
        self.snapshots = []
        self.total_steps = 0
        self.episode = 0

    def _record(self, phase, episode, outcome, sq_error=None, started=None):
        for name, value in (('reward', outcome.reward), ('h0', outcome.h0), ('sq_error', sq_error)):
            if value is not None and not math.isfinite(value):
                raise DivergenceError(f"{name} became non-finite ({value}) in {phase} episode {episode}")
        wall_ms = (time.perf_counter() - started) * 1000.0 if self.cfg.record_wall_time else None
        self.records.append(EpisodeRecord(
            seed=self.seed, strategy=self.spec.label, episode=episode, phase=phase,
            reward=outcome.reward, steps=outcome.steps, h0=outcome.h0,
            sq_error=sq_error, wall_ms=wall_ms,
        ))

    def train_episode(self, max_steps, progress):
        started = time.perf_counter()

        def choose(q, observation, t):
            return self.strategy.select_action(q, self.env.state_key(observation), progress(t), features=observation)

        def learn(transition):
            self.learner.observe(transition)

        outcome = run_episode(self.env, self.learner.q_values, choose, max_steps, learn)
        self.total_steps += outcome.steps
        self.episode += 1
        sq_error = squared_error(self.learner.model, self.oracle) if self.oracle is not None else None
        self._record(TRAIN, self.episode, outcome, sq_error, started)
        logger.debug(f"{self.spec.label}/seed {self.seed} episode {self.episode}: "
                     f"reward {outcome.reward:g}, {outcome.steps} steps, H0 {outcome.h0:.4f}")
        return outcome

    def maybe_snapshot(self, index, last):
        every = self.cfg.save_every
        if every and index % every == 0 and index < last:
            self.snapshots.append((index, _copy_model(self.learner.model)))
            logger.debug(f"{self.spec.label}/seed {self.seed}: snapshot at {index}")

    def checkpoint(self, index):
        if self.cfg.eval_episodes < 1:
            return
        started = time.perf_counter()
        outcome = evaluate(self.eval_env, self.learner.q_values, self.cfg.eval_episodes, self.cfg.max_episode_steps)
        self._record(TEST, index, outcome, started=started)

    def run_episodes(self):
        for _ in range(self.cfg.episodes):
            episode = self.episode
            self.train_episode(self.cfg.max_episode_steps, lambda t: episode)
            if self.episode % self.cfg.eval_every == 0:
                self.checkpoint(self.episode)
            self.maybe_snapshot(self.episode, self.cfg.episodes)

    def run_epochs(self):
        for epoch in range(1, self.cfg.epochs + 1):
            budget_end = epoch * self.cfg.steps_per_epoch
            while self.total_steps < budget_end:
                start = self.total_steps
                cap = min(self.cfg.max_episode_steps, budget_end - start)
                self.train_episode(cap, lambda t: start + t)
            self.checkpoint(epoch)
            self.maybe_snapshot(epoch, self.cfg.epochs)
            logger.info(f"{self.spec.label}/seed {self.seed}: epoch {epoch}/{self.cfg.epochs} done "
                        f"({self.episode} episodes, {self.total_steps} steps)")


def run_cell(cfg, spec, seed):
    """Train and evaluate one (strategy, seed) cell; divergence yields a failed row"""
    logger.info(f"Starting cell {spec.label}/seed {seed}")
    cell = _Cell(cfg, spec, seed)
    try:
        if cfg.epoch_mode:
            cell.run_epochs()
        else:
            cell.run_episodes()
    except DivergenceError as e:
        logger.warning(f"Cell {spec.label}/seed {seed} diverged after {cell.episode} episodes: {str(e)}",
                       exc_info=True)
        records = cell.records + [EpisodeRecord(seed=seed, strategy=spec.label, episode=cell.episode + 1, phase=FAILED)]
        return CellResult(spec.label, seed, records, model=None, failure=str(e), snapshots=cell.snapshots)

    logger.info(f"Finished cell {spec.label}/seed {seed}: {cell.episode} episodes, {cell.total_steps} steps")
    return CellResult(spec.label, seed, cell.records, model=cell.learner.model, snapshots=cell.snapshots)


def _final_values(records, phase, metric):
    """Last value of a metric per seed, for one strategy's rows of one phase"""
    last = {}
    for record in sorted(records, key=EpisodeRecord.sort_key):
        if record.phase == phase and getattr(record, metric) is not None:
            last[record.seed] = getattr(record, metric)
    return [last[seed] for seed in sorted(last)]


def summarize(records):
    """Mean and sample standard deviation across seeds of every final metric, per strategy"""
    by_strategy = {}
    for record in records:
        by_strategy.setdefault(record.strategy, []).append(record)

    rows = []
    for strategy in sorted(by_strategy):
        failed_seeds = {r.seed for r in by_strategy[strategy] if r.phase == FAILED}
        kept = [r for r in by_strategy[strategy] if r.seed not in failed_seeds]
        for phase in (TRAIN, TEST):
            for metric in SUMMARY_METRICS:
                values = _final_values(kept, phase, metric)
                if not values:
                    continue
                std = float(np.std(values, ddof=1)) if len(values) > 1 else None
                rows.append(SummaryRow(strategy, f"{phase}.{metric}", float(np.mean(values)), std, len(values)))
    return rows


def model_path(output_dir, label, seed, at=None):
    """models/<label>_seed<k>.ebeq, or models/<label>_seed<k>_at<n>.ebeq for a snapshot"""
    suffix = f"_at{at}" if at is not None else ""
    return Path(output_dir) / 'models' / f"{label}_seed{seed}{suffix}{MODEL_SUFFIX}"


def run_experiment(cfg, seeds=None, workers=None, output_dir=None, render=True):
    """
    Run every (strategy, seed) cell and persist runs.csv, summary.csv,
    the trained models and, when `render` is set, curves.svg.

    Outputs are written only after every cell has finished.
    """
    from scheduler import SweepScheduler
    from services.plotting import default_metrics, render_record_curves

    cfg = cfg.with_overrides(seeds=seeds, output_dir=output_dir)
    cells = [(cfg, spec, seed) for spec in cfg.strategies for seed in cfg.seeds]
    logger.info(f"Running {len(cfg.strategies)} strategies x {len(cfg.seeds)} seeds on {cfg.environment} "
                f"({cfg.learner} learner)")

    results = SweepScheduler(workers).run(run_cell, cells)

    records = [record for result in results for record in result.records]
    summary = summarize(records)
    out = Path(cfg.output_dir)
    paths = {
        'runs': write_csv(records, out / 'runs.csv'),
        'summary': write_summary(summary, out / 'summary.csv'),
    }
    if cfg.save_models:
        for result in results:
            if result.failed:
                continue
            save_model(result.model, model_path(out, result.strategy, result.seed))
            for index, snapshot in result.snapshots:
                save_model(snapshot, model_path(out, result.strategy, result.seed, at=index))
    if render:
        paths['curves'] = render_record_curves(
            records, default_metrics(cfg.environment), cfg.smoothing, out / 'curves.svg',
        )

    failures = {(r.strategy, r.seed): r.failure for r in results if r.failed}
    if failures:
        logger.warning(f"{len(failures)} of {len(results)} cells failed")
    logger.info(f"Experiment finished: {len(records)} rows written to {out}")
    return ExperimentResult(records, summary, failures, paths)


def _q_function(model, env):
    if isinstance(model, QTable):
        if not hasattr(env, 'n_states') or model.shape != (env.n_states, env.n_actions):
            raise ModelFileError(f"Q-table of shape {model.shape} does not fit the {env.name} environment")
        return lambda observation: model.q_values(env.state_key(observation))
    if isinstance(model, MLP):
        if model.input_dim != env.observation_dim or model.output_dim != env.n_actions:
            raise ModelFileError(f"Network {model.input_dim}->{model.output_dim} does not fit the {env.name} "
                                 f"environment ({env.observation_dim}->{env.n_actions})")
        return model.forward
    raise ModelFileError(f"Unsupported model type {type(model).__name__}")


def untrained_model(env, seed=0):
    """A fresh agent: a small-noise table on the chain, a fan-in-uniform network elsewhere"""
    rng = np.random.default_rng(seed)
    if hasattr(env, 'n_states'):
        return QTable.random(env.n_states, env.n_actions, rng)
    return MLP([env.observation_dim, 128, 64, env.n_actions], rng=rng)


def diagnose_model(model, env_name, episodes, max_steps=None, seed=0, name='model'):
    """Mean H₀ and mean reward of a model's greedy policy over fresh test episodes"""
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    env = make_env(env_name, seed=seed)
    q_function = _q_function(model, env)
    cap = max_steps or EPISODE_CAPS[env_name]
    outcome = evaluate(env, q_function, episodes, cap)
    return DiagnosticRow(name, outcome.h0, outcome.reward)


def entropy_diagnostic(model_paths, env_name, episodes, max_steps=None, seed=0, untrained=False):
    """One row per model file (plus an untrained agent when asked)"""
    rows = []
    for path in model_paths:
        model = load_model(path)
        rows.append(diagnose_model(model, env_name, episodes, max_steps, seed, name=str(path)))
        logger.info(f"{path}: mean H0 {rows[-1].mean_h0:.6f}, mean reward {rows[-1].mean_reward:g}")
    if untrained:
        model = untrained_model(make_env(env_name, seed=seed), seed)
        rows.append(diagnose_model(model, env_name, episodes, max_steps, seed, name='untrained'))
    return rows

#!/usr/bin/env python3
"""
EBE Workbench CLI - Command Line Interface

Runs exploration sweeps, computes the chain oracle, evaluates the entropy
diagnostic and renders learning curves.
"""

import logging
import os
import sys
from pathlib import Path

import click

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import Config, setup_logging  # noqa: E402
from envs import ENVIRONMENTS  # noqa: E402
from services.errors import EbeError, MissingInputError  # noqa: E402
from storage.records_csv import METRICS  # noqa: E402

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


def _require_files(paths):
    missing = [str(p) for p in paths if not Path(p).is_file()]
    if missing:
        raise MissingInputError(f"Input file(s) not found: {', '.join(missing)}")


def _parse_seeds(ctx, param, value):
    if value is None:
        return None
    try:
        seeds = tuple(int(item) for item in value.replace(' ', '').split(',') if item)
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated list of integers, got {value!r}")
    if not seeds:
        raise click.BadParameter("the seed list must not be empty")
    if any(seed < 0 for seed in seeds):
        raise click.BadParameter(f"seeds must be >= 0, got {min(seeds)}")
    return seeds


@click.group()
@click.option('--debug', is_flag=True, help='Enable debug logging')
@click.option('--log-file', is_flag=True, help=f'Also log to {Config.LOG_DIR}/ebe.log (EBE_LOG_DIR)')
def cli(debug, log_file):
    """EBE Workbench Command Line Interface"""
    setup_logging(debug, os.path.join(Config.LOG_DIR, 'ebe.log') if log_file else None)


@cli.command()
@click.option('--config', 'config_path', required=True, type=click.Path(dir_okay=False),
              help='Experiment config file')
@click.option('--out', 'output_dir', type=click.Path(file_okay=False), help='Output directory (overrides the config)')
@click.option('--seeds', callback=_parse_seeds, help='Comma-separated seed list (overrides the config)')
@click.option('--workers', type=click.IntRange(min=1), help='Parallel cells (default: EBE_THREADS or all cores)')
def run(config_path, output_dir, seeds, workers):
    """
    Run an exploration sweep

    Writes runs.csv, summary.csv, curves.svg and models/*.ebeq.

    Examples:
        ebe run --config configs/chain_paper.cfg --out results/
        ebe run --config configs/chain_counts.cfg --seeds 0,1,2 --workers 4
    """
    from services.experiment_config import validate_config
    from services.harness import run_experiment

    _require_files([config_path])
    cfg = validate_config(config_path)

    click.echo(f"Running {len(cfg.strategies)} strategies on {cfg.environment} ({cfg.learner} learner)...")
    result = run_experiment(cfg, seeds=seeds, workers=workers, output_dir=output_dir)

    click.echo(f"Wrote {len(result.records)} rows to {result.paths['runs']}")
    for row in result.summary:
        std = f" ± {row.std:.6g}" if row.std is not None else ""
        click.echo(f"  {row.strategy:<24} {row.metric:<16} {row.mean:.6g}{std}  (n={row.seeds})")
    for (strategy, seed), failure in sorted(result.failures.items()):
        click.echo(f"  FAILED {strategy}/seed {seed}: {failure}", err=True)


@cli.command()
@click.option('--gamma', default=0.9, show_default=True,
              type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), help='Discount factor')
@click.option('--tolerance', default=1e-12, show_default=True,
              type=click.FloatRange(0.0, min_open=True), help='Value-iteration stopping threshold')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False),
              default=os.path.join(Config.OUTPUT_DIR, 'qstar.csv'), show_default=True, help='Output CSV')
def oracle(gamma, tolerance, out_path):
    """
    Compute the chain's optimal Q-values by value iteration

    Examples:
        ebe oracle --gamma 0.9 --out qstar.csv
    """
    from envs.chain import ChainEnv
    from services.tabular import bellman_residual, value_iteration_oracle
    from storage.records_csv import write_q_table_csv

    q_star = value_iteration_oracle(gamma, tolerance)
    path = write_q_table_csv(q_star, out_path, ChainEnv.action_names)

    start = ChainEnv.start_state
    click.echo(f"Q*({start}, ·) = {q_star.table[start, 0]:.12g}, {q_star.table[start, 1]:.12g}")
    click.echo(f"Bellman residual: {bellman_residual(q_star):.3e}")
    click.echo(f"Wrote {path}")


@cli.command()
@click.argument('models', nargs=-1, type=click.Path(dir_okay=False))
@click.option('--env', 'env_name', type=click.Choice(sorted(ENVIRONMENTS)), default='chain', show_default=True)
@click.option('--episodes', default=10, show_default=True, type=click.IntRange(min=1), help='Greedy test episodes')
@click.option('--max-steps', type=click.IntRange(min=1), help='Episode step cap (default: per environment)')
@click.option('--seed', default=0, show_default=True, type=click.IntRange(min=0), help='Environment seed')
@click.option('--untrained', is_flag=True, help='Add a row for a freshly initialised agent')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), help='Also write the table as CSV')
def diagnose(models, env_name, episodes, max_steps, seed, untrained, out_path):
    """
    Mean entropy H0 and mean reward of saved agents

    Examples:
        ebe diagnose results/models/ebe_seed0.ebeq --untrained
        ebe diagnose --env mini_breakout --episodes 20 a.ebeq b.ebeq
    """
    from services.harness import entropy_diagnostic
    from storage.records_csv import write_diagnostic_csv

    if not models and not untrained:
        raise click.UsageError("Give at least one model file or --untrained")
    _require_files(models)

    rows = entropy_diagnostic(models, env_name, episodes, max_steps, seed, untrained)

    click.echo(f"{'model':<48} {'mean H0':>12} {'mean reward':>12}")
    for row in rows:
        click.echo(f"{row.model:<48} {row.mean_h0:>12.6f} {row.mean_reward:>12.4g}")
    if out_path:
        click.echo(f"Wrote {write_diagnostic_csv(rows, out_path)}")


@cli.command()
@click.argument('csvs', nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option('--metric', 'metrics', multiple=True, type=click.Choice(METRICS), default=('reward',),
              show_default=True, help='Metric to chart (repeatable)')
@click.option('--smooth', default=0.99, show_default=True,
              type=click.FloatRange(0.0, 1.0, max_open=True), help='EMA smoothing weight')
@click.option('--phase', type=click.Choice(['train', 'test']), default='train', show_default=True)
@click.option('--out', 'out_path', type=click.Path(dir_okay=False),
              default=os.path.join(Config.OUTPUT_DIR, 'curves.svg'), show_default=True, help='Output SVG')
def plot(csvs, metrics, smooth, phase, out_path):
    """
    Render learning curves from run CSVs

    Examples:
        ebe plot --metric reward --smooth 0.99 --out curves.svg results/runs.csv
        ebe plot --metric h0 --metric sq_error a.csv b.csv
    """
    from services.plotting import render_curves

    _require_files(csvs)
    path = render_curves(csvs, metrics, smooth, out_path, phase)
    click.echo(f"Wrote {path}")


@cli.command()
@click.option('--config', 'config_path', required=True, type=click.Path(dir_okay=False),
              help='Experiment config file')
def validate(config_path):
    """
    Check an experiment config and report every problem

    Examples:
        ebe validate --config configs/breakout.cfg
    """
    from services.experiment_config import validate_config

    _require_files([config_path])
    cfg = validate_config(config_path)
    unit = 'epochs' if cfg.epoch_mode else 'episodes'
    click.echo(f"{config_path}: OK")
    click.echo(f"  {cfg.environment} / {cfg.learner}, {cfg.epochs or cfg.episodes} {unit}, seeds {list(cfg.seeds)}")
    for spec in cfg.strategies:
        click.echo(f"  • {spec.label}: {spec.kind.name.value}")


def main(argv=None):
    """Run the CLI and return its exit code"""
    try:
        cli.main(args=argv, prog_name='ebe', standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Interrupted", err=True)
        return EXIT_FAILURE
    except click.ClickException as e:
        e.show()
        return EXIT_FAILURE
    except click.exceptions.Exit as e:
        return e.exit_code
    except (EbeError, OSError, ValueError) as e:
        logger.debug(f"Command failed: {str(e)}", exc_info=True)
        click.echo(f"Error: {e}", err=True)
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Unexpected failure: {type(e).__name__}: {str(e)}", exc_info=True)
        click.echo(f"Error: unexpected {type(e).__name__}: {e}", err=True)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())

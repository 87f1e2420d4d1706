"""
Learning-curve charts.

Each metric gets its own panel: per strategy, the mean across seeds is drawn
as a faint raw line with the exponentially smoothed curve on top. SVG output
is byte-stable for identical inputs.
"""

import io
import logging
from dataclasses import dataclass

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from models.records import TRAIN  # noqa: E402
from services.errors import PlotError  # noqa: E402
from storage.files import atomic_write_bytes  # noqa: E402
from storage.records_csv import METRICS, read_csv  # noqa: E402

logger = logging.getLogger(__name__)

RAW_ALPHA = 0.25
SVG_SALT = 'ebe-workbench'
METRIC_LABELS = {
    'reward': 'episode reward',
    'steps': 'episode length',
    'h0': 'mean entropy H0',
    'sq_error': 'squared error vs Q*',
    'wall_ms': 'wall time (ms)',
}


@dataclass(frozen=True)
class SmoothedSeries:
    raw: tuple
    weight: float
    smoothed: tuple


def ema_smooth(values, weight):
    """s0 = x0, st = w * s(t-1) + (1 - w) * xt"""
    if not 0.0 <= weight < 1.0:
        raise ValueError(f"Smoothing weight must lie in [0, 1), got {weight}")
    raw = tuple(float(v) for v in values)
    smoothed = []
    for value in raw:
        smoothed.append(value if not smoothed else weight * smoothed[-1] + (1.0 - weight) * value)
    return SmoothedSeries(raw, weight, tuple(smoothed))


def default_metrics(environment):
    return ('reward', 'h0', 'sq_error') if environment == 'chain' else ('reward', 'h0')


def mean_curves(records, metric, phase=TRAIN):
    """{strategy: (episodes, mean across seeds)} for one metric and phase"""
    collected = {}
    for record in records:
        value = getattr(record, metric)
        if record.phase != phase or value is None:
            continue
        collected.setdefault(record.strategy, {}).setdefault(record.episode, []).append(value)

    curves = {}
    for strategy in sorted(collected):
        episodes = sorted(collected[strategy])
        curves[strategy] = (
            np.array(episodes),
            np.array([np.mean(collected[strategy][e]) for e in episodes]),
        )
    return curves


def build_figure(records, metrics, weight, phase=TRAIN):
    metrics = list(metrics)
    if not metrics:
        raise PlotError("No metrics requested")
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise PlotError(f"Unknown metric(s): {', '.join(unknown)} (expected one of {', '.join(METRICS)})")
    if not 0.0 <= weight < 1.0:
        raise PlotError(f"Smoothing weight must lie in [0, 1), got {weight}")

    fig, axes = plt.subplots(len(metrics), 1, figsize=(8, 3.5 * len(metrics)), squeeze=False)
    for ax, metric in zip(axes[:, 0], metrics):
        curves = mean_curves(records, metric, phase)
        if not curves:
            plt.close(fig)
            raise PlotError(f"No {phase} values for metric {metric!r}")

        for index, (strategy, (x, y)) in enumerate(curves.items()):
            color = f"C{index % 10}"
            series = ema_smooth(y, weight)
            raw_line, = ax.plot(x, series.raw, color=color, alpha=RAW_ALPHA, linewidth=1.0, label='_nolegend_')
            raw_line.set_gid(f"raw-{metric}-{strategy}")
            smooth_line, = ax.plot(x, series.smoothed, color=color, linewidth=1.8, label=strategy)
            smooth_line.set_gid(f"smooth-{metric}-{strategy}")

        ax.set_xlabel('episode' if phase == TRAIN else 'checkpoint')
        ax.set_ylabel(METRIC_LABELS[metric])
        ax.grid(True, alpha=0.3)
        ax.legend(loc='best')

    fig.tight_layout()
    return fig


def render_record_curves(records, metrics, weight, out_path, phase=TRAIN):
    """Render records to an SVG file; identical records give identical bytes"""
    fig = build_figure(records, metrics, weight, phase)
    buffer = io.BytesIO()
    try:
        with matplotlib.rc_context({'svg.hashsalt': SVG_SALT, 'svg.fonttype': 'none'}):
            fig.savefig(buffer, format='svg', metadata={'Date': None})
    finally:
        plt.close(fig)
    path = atomic_write_bytes(out_path, buffer.getvalue())
    logger.info(f"Wrote {', '.join(metrics)} curves to {path}")
    return path


def render_curves(csv_paths, metrics, weight, out_path, phase=TRAIN):
    """Read run-record CSVs and render their learning curves as SVG"""
    records = []
    for path in csv_paths:
        records.extend(read_csv(path))
    return render_record_curves(records, list(metrics), weight, out_path, phase)

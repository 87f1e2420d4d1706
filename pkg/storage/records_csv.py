"""
CSV persistence of run records, summaries and oracle tables.

Floats are written with 17 significant digits so that parsing a file back
reproduces every value exactly; missing metrics are empty fields.
"""

import csv
import io
import logging
import math

from models.records import PHASES, EpisodeRecord
from services.errors import RecordFormatError
from storage.files import atomic_write_text

logger = logging.getLogger(__name__)

CSV_HEADER = ('seed', 'strategy', 'episode', 'phase', 'reward', 'steps', 'h0', 'sq_error', 'wall_ms')
SUMMARY_HEADER = ('strategy', 'metric', 'mean', 'std', 'seeds')
METRICS = ('reward', 'steps', 'h0', 'sq_error', 'wall_ms')


def format_number(value):
    if value is None:
        return ''
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"Refusing to write non-finite value {value}")
    return format(value, '.17g')


def _render(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(records, path):
    """Write run records sorted by (strategy, seed, phase, episode)"""
    records = list(records)
    path = atomic_write_text(path, render_records(records))
    logger.info(f"Wrote {len(records)} run records to {path}")
    return path


def _parse_optional(text, column, line_no, path):
    if text == '':
        return None
    try:
        value = float(text)
    except ValueError:
        raise RecordFormatError(f"{path}:{line_no}: {column} is not a number: {text!r}")
    if not math.isfinite(value):
        raise RecordFormatError(f"{path}:{line_no}: {column} is not finite: {text!r}")
    return value


def _parse_int(text, column, line_no, path):
    try:
        return int(text)
    except ValueError:
        raise RecordFormatError(f"{path}:{line_no}: {column} is not an integer: {text!r}")


def read_csv(path):
    """Parse a run-record CSV written by write_csv"""
    try:
        with open(path, newline='', encoding='utf-8') as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or tuple(header) != CSV_HEADER:
                raise RecordFormatError(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")

            records = []
            for line_no, row in enumerate(reader, start=2):
                if len(row) != len(CSV_HEADER):
                    raise RecordFormatError(f"{path}:{line_no}: expected {len(CSV_HEADER)} fields, got {len(row)}")
                fields = dict(zip(CSV_HEADER, row))
                if fields['phase'] not in PHASES:
                    raise RecordFormatError(f"{path}:{line_no}: unknown phase {fields['phase']!r}")
                records.append(EpisodeRecord(
                    seed=_parse_int(fields['seed'], 'seed', line_no, path),
                    strategy=fields['strategy'],
                    episode=_parse_int(fields['episode'], 'episode', line_no, path),
                    phase=fields['phase'],
                    **{m: _parse_optional(fields[m], m, line_no, path) for m in METRICS},
                ))
            return records
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        logger.error(f"Failed to read run records from {path}: {str(e)}")
        raise RecordFormatError(f"{path}: {e}") from e


def write_summary(summary_rows, path):
    rows = [
        [row.strategy, row.metric, format_number(row.mean),
         format_number(row.std) if row.std is not None and math.isfinite(row.std) else '',
         str(row.seeds)]
        for row in summary_rows
    ]
    return atomic_write_text(path, _render(SUMMARY_HEADER, rows))


def write_q_table_csv(q_table, path, action_names):
    """One row per state: state, then one column per action"""
    rows = [
        [str(state), *(format_number(float(value)) for value in q_table.table[state])]
        for state in range(q_table.shape[0])
    ]
    return atomic_write_text(path, _render(('state', *action_names), rows))


def render_records(records):
    """The CSV text write_csv would produce, for comparisons without touching disk"""
    rows = [
        [str(r.seed), r.strategy, str(r.episode), r.phase, *(format_number(getattr(r, m)) for m in METRICS)]
        for r in sorted(records, key=EpisodeRecord.sort_key)
    ]
    return _render(CSV_HEADER, rows)


def write_diagnostic_csv(rows, path):
    rows = [[row.model, format_number(row.mean_h0), format_number(row.mean_reward)] for row in rows]
    return atomic_write_text(path, _render(('model', 'mean_h0', 'mean_reward'), rows))

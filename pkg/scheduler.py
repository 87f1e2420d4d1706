#!/usr/bin/env python3
"""
Sweep scheduler.

Runs (strategy, seed) cells either inline or in a process pool. Results are
collected in a RecordSink and handed back in cell order, so the number of
workers never changes what gets written.
"""

import logging
import threading
from concurrent.futures import ProcessPoolExecutor, as_completed

from config import Config

logger = logging.getLogger(__name__)


class RecordSink:
    """Thread-safe collector of cell results"""

    def __init__(self, expected):
        self.expected = expected
        self._results = {}
        self._lock = threading.Lock()

    def put(self, index, result):
        with self._lock:
            self._results[index] = result
            done = len(self._results)
        logger.info(f"Cell {result.strategy}/seed {result.seed} "
                    f"{'FAILED' if result.failed else 'done'} ({done}/{self.expected})")

    def results(self):
        with self._lock:
            return [self._results[index] for index in sorted(self._results)]


class SweepScheduler:
    def __init__(self, workers=None):
        if workers is not None and workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers or Config.sweep_threads()

    def run(self, func, cells):
        """Call func(*cell) for every cell; returns results in cell order"""
        cells = list(cells)
        sink = RecordSink(len(cells))
        workers = min(self.workers, len(cells)) or 1

        if workers == 1:
            logger.info(f"Running {len(cells)} cells inline")
            for index, cell in enumerate(cells):
                sink.put(index, func(*cell))
            return sink.results()

        logger.info(f"Running {len(cells)} cells on {workers} worker processes")
        executor = ProcessPoolExecutor(max_workers=workers)
        try:
            futures = {executor.submit(func, *cell): index for index, cell in enumerate(cells)}
            for future in as_completed(futures):
                sink.put(futures[future], future.result())
        except KeyboardInterrupt:
            logger.warning("Interrupted: cancelling pending cells")
            executor.shutdown(wait=False, cancel_futures=True)
            raise
        except Exception as e:
            logger.error(f"Sweep aborted: {str(e)}", exc_info=True)
            executor.shutdown(wait=False, cancel_futures=True)
            raise
        executor.shutdown(wait=True)
        return sink.results()

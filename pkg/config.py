import logging
import os

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Config:
    """Process-level settings"""

    # Logging
    LOG_DIR = os.environ.get('EBE_LOG_DIR', 'logs')

    # Outputs
    OUTPUT_DIR = os.environ.get('EBE_OUTPUT_DIR', 'results')

    @staticmethod
    def sweep_threads():
        """Worker cap for sweeps: EBE_THREADS, or the number of available cores"""
        raw = os.environ.get('EBE_THREADS', '').strip()
        if not raw:
            return os.cpu_count() or 1
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"EBE_THREADS must be a positive integer, got {raw!r}")
        if threads < 1:
            raise ValueError(f"EBE_THREADS must be a positive integer, got {raw!r}")
        return threads

    @staticmethod
    def log_level(debug=False):
        if debug:
            return logging.DEBUG
        level = logging.getLevelName(os.environ.get('EBE_LOG_LEVEL', 'INFO').upper())
        return level if isinstance(level, int) else logging.INFO


def setup_logging(debug=False, log_file=None):
    """Configure root logging once: stderr plus an optional log file"""
    handlers = [logging.StreamHandler()]
    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(level=Config.log_level(debug), format=LOG_FORMAT, handlers=handlers, force=True)

class EbeError(Exception):
    """Base exception for the workbench"""


class ConfigError(EbeError):
    """Experiment config failed to load; lists every violated constraint"""

    def __init__(self, problems, source=None):
        self.problems = list(problems)
        self.source = source
        where = f" in {source}" if source else ""
        details = "\n".join(f"  - {problem}" for problem in self.problems)
        super().__init__(f"Invalid experiment config{where}:\n{details}")


class DivergenceError(EbeError):
    """A loss, metric or Q-value became non-finite"""


class EpisodeFinishedError(EbeError):
    """Environment stepped after a terminal transition"""


class ModelFileError(EbeError):
    """Model file is corrupt or of an unknown version"""


class RecordFormatError(EbeError):
    """Run-record CSV cannot be parsed"""


class PlotError(EbeError):
    """Chart cannot be rendered from the given records"""


class MissingInputError(EbeError):
    """An input file named on the command line does not exist"""

from dataclasses import dataclass, field

TRAIN = 'train'
TEST = 'test'
FAILED = 'failed'
PHASES = (TRAIN, TEST, FAILED)


@dataclass(frozen=True)
class Transition:
    """(s, a, r, s', terminal) as consumed by TD updates and replay"""

    state: object
    action: int
    reward: float
    next_state: object
    terminal: bool


@dataclass(frozen=True)
class EpisodeRecord:
    """One row of the run-record stream"""

    seed: int
    strategy: str
    episode: int
    phase: str
    reward: float = None
    steps: float = None
    h0: float = None
    sq_error: float = None
    wall_ms: float = None

    def sort_key(self):
        return (self.strategy, self.seed, self.phase, self.episode)


@dataclass
class CellResult:
    """Everything one (strategy, seed) cell produced"""

    strategy: str
    seed: int
    records: list = field(default_factory=list)
    model: object = None
    failure: str = None
    # (episode or epoch, model copy) taken during training
    snapshots: list = field(default_factory=list)

    @property
    def failed(self):
        return self.failure is not None


@dataclass(frozen=True)
class SummaryRow:
    """Mean and sample standard deviation of a final metric across seeds"""

    strategy: str
    metric: str
    mean: float
    std: float
    seeds: int

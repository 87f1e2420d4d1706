from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StepResult:
    """Outcome of one environment step"""

    observation: np.ndarray
    reward: float
    terminal: bool
    steps: int

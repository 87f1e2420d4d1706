from dataclasses import dataclass

EPSILON_VARIANTS = ('I', 'II', 'III')


@dataclass(frozen=True)
class LinearSchedule:
    """Piecewise-linear annealing: flat, then linear, then flat"""

    start_value: float
    end_value: float
    begin_step: int = 0
    end_step: int = 0

    def __post_init__(self):
        if self.begin_step < 0:
            raise ValueError(f"begin_step must be >= 0, got {self.begin_step}")
        if self.begin_step > self.end_step:
            raise ValueError(
                f"begin_step ({self.begin_step}) must not exceed end_step ({self.end_step})"
            )

    @classmethod
    def constant(cls, value):
        return cls(value, value, 0, 0)

    def value(self, step):
        if step >= self.end_step:
            return self.end_value
        if step <= self.begin_step:
            return self.start_value
        fraction = (step - self.begin_step) / (self.end_step - self.begin_step)
        return self.start_value + fraction * (self.end_value - self.start_value)

    __call__ = value


def epsilon_variant(name, horizon, floor=0.01):
    """
    Named epsilon-greedy schedules over a run of `horizon` progress units.

    I:   1.0 for the first 10% of training, annealed to `floor` by 60%, then flat.
    II:  annealed from 1.0 to `floor` over the whole run.
    III: 1.0 for the first 10%, then annealed to `floor` over the remainder.
    """
    if horizon < 1:
        raise ValueError(f"Schedule horizon must be >= 1, got {horizon}")

    warmup = int(round(0.1 * horizon))
    if name == 'I':
        return LinearSchedule(1.0, floor, warmup, int(round(0.6 * horizon)))
    if name == 'II':
        return LinearSchedule(1.0, floor, 0, horizon)
    if name == 'III':
        return LinearSchedule(1.0, floor, warmup, horizon)
    raise ValueError(f"Unknown epsilon-greedy variant: {name} (expected one of {', '.join(EPSILON_VARIANTS)})")

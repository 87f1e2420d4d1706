from envs.base import StepResult
from envs.breakout import MiniBreakout
from envs.chain import ChainEnv

ENVIRONMENTS = {
    ChainEnv.name: ChainEnv,
    MiniBreakout.name: MiniBreakout,
}

# Greedy-rollout step caps used when a caller gives none.
EPISODE_CAPS = {
    ChainEnv.name: 50,
    MiniBreakout.name: 500,
}


def make_env(name, seed=None):
    """Build an environment by its config name"""
    try:
        env_class = ENVIRONMENTS[name]
    except KeyError:
        raise ValueError(f"Unknown environment: {name} (expected one of {', '.join(ENVIRONMENTS)})")
    return env_class(seed=seed)


__all__ = ['ChainEnv', 'MiniBreakout', 'StepResult', 'ENVIRONMENTS', 'EPISODE_CAPS', 'make_env']

"""NR-V2X sidelink AoI/energy simulator."""

from ._core import (
    Agent,
    ConfigError,
    Env,
    canonical_config,
    dbm_to_w,
    rc0_of,
    run,
    run_episode,
    run_random_episode,
    summarize,
    validate_config,
)

__all__ = [
    "Agent",
    "ConfigError",
    "Env",
    "canonical_config",
    "dbm_to_w",
    "rc0_of",
    "run",
    "run_episode",
    "run_random_episode",
    "summarize",
    "validate_config",
]

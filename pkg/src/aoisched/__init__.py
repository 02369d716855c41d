"""Discrete-time simulator and reinforcement-learning trainer for an uplink
NOMA cell with an edge compute server, scheduling transmit power, subcarrier
assignment, and packet transmission against a joint throughput-per-(age and
power) objective."""

__version__ = "0.1.0"

from .config import ExperimentConfig, resolve_config  # noqa: F401
from .mdp import NetworkEnv, enumerate_feasible_actions  # noqa: F401

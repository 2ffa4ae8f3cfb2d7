"""Semantic-aware UAV command and control: simulator, DDQN agent and baselines."""

from .config import ScenarioConfig, TrainConfig, load_config, save_config
from .env import EpisodeOutcome, EpisodeTrace, UAVDataCollectionEnv
from .audit import audit_trace

__all__ = [
    "ScenarioConfig",
    "TrainConfig",
    "load_config",
    "save_config",
    "UAVDataCollectionEnv",
    "EpisodeOutcome",
    "EpisodeTrace",
    "audit_trace",
]

__version__ = "0.1.0"

"""colibri-sim commands."""

from .bench_cmd import bench
from .cost_model_cmd import cost_model
from .replay_cmd import replay
from .simulate_cmd import simulate
from .verify_cmd import verify

__all__ = [
    "bench",
    "cost_model",
    "replay",
    "simulate",
    "verify",
]

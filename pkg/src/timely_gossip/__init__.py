"""Version-age simulation and theory for opportunistic gossip in dense networks."""

from .core import PolicyKind, SimConfig, validate_config
from .engine import TrialResult, run
from .harness import SweepSpec, run_sweep

__all__ = ["PolicyKind", "SimConfig", "SweepSpec", "TrialResult", "run", "run_sweep", "validate_config"]

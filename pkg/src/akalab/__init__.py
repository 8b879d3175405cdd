"""Desk-scale 5G AKA laboratory.

A faithful baseline of the AKA authentication flow (UE / serving network /
home network), five configurable privacy-hardening variants, a channel-tap
adversary implementing three replay-based linkability attacks, and a
scenario runner that reproduces the replay-outcome matrix.
"""

from .actors import HomeNetwork, ServingNetwork, Ue, window_check
from .adversary import (
    AttackVerdict,
    ChannelTap,
    TranscriptEvent,
    Verdict,
    attack_auts_differential,
    attack_failure_message,
    attack_suci_replay,
    infer_sqn,
)
from .messages import AuthOutcome, SupiIdentity
from .runner import OutcomeRow, ScenarioConfig, emit_outcome_matrix, run_matrix, run_scenario
from .variants import VariantMode
from .world import World

__version__ = "0.1.0"

__all__ = [
    "AttackVerdict",
    "AuthOutcome",
    "ChannelTap",
    "HomeNetwork",
    "OutcomeRow",
    "ScenarioConfig",
    "ServingNetwork",
    "SupiIdentity",
    "TranscriptEvent",
    "Ue",
    "Verdict",
    "VariantMode",
    "World",
    "attack_auts_differential",
    "attack_failure_message",
    "attack_suci_replay",
    "emit_outcome_matrix",
    "infer_sqn",
    "run_matrix",
    "run_scenario",
    "window_check",
    "__version__",
]

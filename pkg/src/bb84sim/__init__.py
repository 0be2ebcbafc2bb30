"""Monte Carlo BB84 with weak coherent pulses and eavesdroppers, plus analytic key rates."""
from .adversary import AttackStrategy, apply_attack, eve_information
from .photonics import ChannelConfig, DetectorConfig, SourceConfig
from .protocol import SessionParams, run_session

__version__ = "0.1.0"

__all__ = [
    "AttackStrategy",
    "ChannelConfig",
    "DetectorConfig",
    "SessionParams",
    "SourceConfig",
    "apply_attack",
    "eve_information",
    "run_session",
]

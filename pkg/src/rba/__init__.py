"""Risk-based authentication engine.

Scores each login attempt against the user's history, drives the
three-outcome login flow (success / re-authentication / rejection),
and ships a dataset replay harness for reference testing.
"""

from .config import RiskConfig, ServiceConfig
from .engine import evaluate, risk_score
from .model import DeviceType, NormalizedFeatures, Outcome, classify

__all__ = [
    "DeviceType",
    "NormalizedFeatures",
    "Outcome",
    "RiskConfig",
    "ServiceConfig",
    "classify",
    "evaluate",
    "risk_score",
]

__version__ = "0.1.0"

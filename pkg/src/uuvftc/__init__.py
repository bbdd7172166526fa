"""Fault-tolerant replanning for a small UUV: truth model, sensors, a
verify-before-dispatch agent and the scenario runner."""

from .geometry import KNOT, ConfigurationError

__version__ = "0.1.0"

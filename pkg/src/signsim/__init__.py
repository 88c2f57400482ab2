"""signsim: agent-based evaluation of indoor signage and wayfinding systems."""

__version__ = "0.1.0"

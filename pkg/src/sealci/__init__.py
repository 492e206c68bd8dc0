"""Stigmergic swarm pattern formation with learning baselines and an anytime test harness."""

__version__ = "0.1.0"

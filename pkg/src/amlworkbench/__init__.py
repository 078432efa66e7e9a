"""Multi-bank customer relation graphs embedded in the unit ball, with
rule-based laundering detectors and an analyst exploration service."""

__version__ = "0.1.0"

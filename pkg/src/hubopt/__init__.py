"""Simulation and optimization toolkit for base-station energy hubs.

Subpackages cover the slot-based hub physics and economics (`hub`), synthetic
trace generation and CSV I/O (`traces`), a small numpy neural substrate with
exact gradients (`nn`), counterfactual discount pricing (`pricing`), the PPO
battery scheduler with its DP verification oracle (`scheduler`), and the CLI
harness (`cli`).
"""

__version__ = "0.1.0"

"""
usr-rl: Uncertainty Set Regularized robust reinforcement learning.

Robust Bellman targets for soft actor-critic, a tabular oracle lab, and a
perturbation-sweep evaluation harness.
"""

__version__ = "0.1.0"

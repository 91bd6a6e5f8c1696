"""Knowledge-based neural networks for self-regulated-learning data, with baselines."""

__version__ = "0.1.0"

"""Entropy production of a quantum field in a cavity with an oscillating
mirror: short-time closed forms, truncated-Fock and exact mode-function
oracles, long-time slowly-varying-amplitude dynamics, and the single-mode
Gaussian pipeline, plus a deterministic scenario runner and CLI.
"""

__version__ = "1.0.0"

"""Generative deduction-game benchmark engine.

Synthesizes partially observable deduction tasks from seed configurations
with a satisfiability engine, computes exact optimal-play baselines,
simulates multi-turn play for machine and human agents, and scores and
analyzes the resulting trajectories.
"""

__version__ = "0.1.0"

from . import envmodel, errors  # noqa: F401

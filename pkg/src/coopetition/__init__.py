"""Competition management for module-sharing robotics events.

Scores milestones and tasks with exact rational arithmetic, tracks a module
marketplace with royalty flows between teams, replays append-only event
ledgers, generates randomized task commands, and exports the module-transfer
social graph. An HTTP service and a CLI front the same engine.
"""

__version__ = "0.1.0"

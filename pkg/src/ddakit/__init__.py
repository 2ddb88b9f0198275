"""ddakit: a game-agnostic difficulty-adjustment engine plus its test arena.

The package splits into the engine proper (telemetry, reference curves,
assessment, adjustment queue, and three adjustment models) and a
deterministic wave-combat simulator with bot players that exists to
exercise the engine end to end.
"""

from .engine import DdaEngine

__version__ = "0.1.0"

__all__ = ["DdaEngine", "__version__"]

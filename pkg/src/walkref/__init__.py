"""walkref: walk refinement, 2-dim Weisfeiler-Leman, CFI grid instances,
bijective pebble-game strategies, and walk counting logic."""

__version__ = "0.1.0"

"""Limit order book toolkit: binary feed codec, book reconstruction,
arrival-rate extraction, and tick-distance distribution fitting."""

__version__ = "0.1.0"

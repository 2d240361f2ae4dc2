"""Parametrically driven two-mode oscillator as a physical reservoir computer."""

__version__ = "0.1.0"

"""Tile inflations on Bratteli diagrams, fragmented groups and their growth."""

from . import action, automaton, diagram, families, growth, inflation

__all__ = ["action", "automaton", "diagram", "families", "growth", "inflation"]
__version__ = "0.1.0"

"""Simulation lab for language generation in the limit against a replaying adversary."""

from .domain import IntPoint, Marker, canonical_index, deindex, parse_element
from .engine import Transcript, Verdict, run_game, score_transcript

__all__ = ["IntPoint", "Marker", "canonical_index", "deindex", "parse_element",
           "Transcript", "Verdict", "run_game", "score_transcript"]
__version__ = "0.1.0"

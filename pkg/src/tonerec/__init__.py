"""Tone-of-voice movie recommender: LLM-tagged features feeding user-based CF."""

__version__ = "0.1.0"

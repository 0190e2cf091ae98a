"""Simulator for EPR-pair bit commitment and the coin toss built on it."""
__version__ = "0.1.0"

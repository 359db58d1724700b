"""Simulator and experiment harness for a nonlinear composite Bresse beam."""

__version__ = "0.1.0"

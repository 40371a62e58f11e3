"""Numerical laboratory for relativistic kinematics, pair-correlation models and
retarded two-body electrodynamics (c = 1, metric signature (+, -, -, -))."""

__version__ = "0.1.0"

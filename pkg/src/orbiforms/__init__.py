"""Exact differential-form calculus on orbifolds with corners."""

__version__ = "0.1.0"

"""Rational verification for concurrent games with LTL goals."""

__version__ = "0.1.0"

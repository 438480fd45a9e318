"""Computational laboratory for low-dimensional dynamics: limit cycles, certified roots,
stability statistics, billiards and integer sequences."""

__version__ = "0.1.0"

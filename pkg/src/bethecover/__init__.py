"""Partition-function machinery for standard and double-edge normal
factor graphs: sum-product fixed points, the message-based Bethe
partition function, the loop-calculus transform, finite graph covers and
the degree-M Bethe partition function with its checkable dominance
condition."""

__version__ = "0.1.0"

from . import config, cover, generators, lct, nfg, spa  # noqa: F401

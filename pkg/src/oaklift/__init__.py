"""Exact-arithmetic oaks, bend maps and embeddings of countable products."""

__version__ = "0.1.0"

"""Sliced optimal-transport discrepancies between point clouds, including
across different ambient dimensions, with learned projection embeddings."""

__version__ = "0.1.0"

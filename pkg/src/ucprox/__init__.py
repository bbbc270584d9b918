"""Proximal mappings with Young functions on uniformly convex spaces."""

__version__ = "0.1.0"

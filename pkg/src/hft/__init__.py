"""Exact engine for local homoclinic Floer homology of planar tangles."""

__version__ = "0.1.0"

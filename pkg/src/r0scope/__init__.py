"""Structured R0-estimate pipeline: ingest, extract, normalize, store, serve."""

__version__ = "0.1.0"

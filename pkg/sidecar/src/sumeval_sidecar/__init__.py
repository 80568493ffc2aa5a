"""Sentence-encoder sidecar for the sumeval toolkit."""

__version__ = "0.1.0"

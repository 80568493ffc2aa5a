"""sumeval: scoring, mining, and statistical characterization of code summaries."""

__version__ = "0.1.0"

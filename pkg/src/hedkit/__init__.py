"""hedkit: hierarchical emotion-intensity extraction, editing, and evaluation."""

__version__ = "0.1.0"

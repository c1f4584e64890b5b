"""Goal-conditioned value learning on grid worlds, read as functional graphs."""

__version__ = "0.1.0"

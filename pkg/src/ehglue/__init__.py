"""eh-glue: numerics for the checkerboard Eguchi-Hanson gluing construction."""

__version__ = "0.1.0"

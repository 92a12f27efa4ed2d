"""Monte Carlo laboratory for moments in space of Brownian local-time increments."""

__version__ = "0.1.0"

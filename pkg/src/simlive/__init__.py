"""Live-steerable discrete-event network simulations with a WAMP remote interface."""

__version__ = "0.1.0"

"""Spatial Lambda-Fleming-Viot simulation and Wright-Malecot limit toolkit."""

__version__ = "0.1.0"

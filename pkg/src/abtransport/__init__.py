"""Stationary transport, noise and waiting times of a dephased three-site Aharonov-Bohm ring."""

__version__ = "0.1.0"

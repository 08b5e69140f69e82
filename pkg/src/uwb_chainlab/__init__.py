"""Behavioural models and analysis tools for a 2-6 GHz UWB radar transceiver chain."""

__version__ = "0.1.0"

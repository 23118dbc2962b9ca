"""Scheduling and simulation of peer-to-peer file dissemination."""
__version__ = "0.1.0"

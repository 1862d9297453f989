"""Threat intelligence knowledge graphs for Android malware reports."""

__version__ = "0.1.0"

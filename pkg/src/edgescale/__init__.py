"""Autoscaling simulator for SLA-constrained cloud/edge clusters."""

__version__ = "0.1.0"

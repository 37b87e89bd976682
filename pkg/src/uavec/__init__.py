"""uavec: multi-UAV-assisted vehicular edge computing simulator and optimizer."""

__version__ = "0.1.0"

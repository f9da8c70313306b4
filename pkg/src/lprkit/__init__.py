"""Toolchain for Indian license-plate recognition experiments."""

__version__ = "0.1.0"

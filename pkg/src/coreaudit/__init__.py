"""Audit committees for core stability, Lindahl priceability and sub-core stability."""

__version__ = "0.1.0"

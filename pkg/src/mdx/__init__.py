"""Model-driven neural MU-MIMO OFDM receiver and link-level simulator."""

__version__ = "0.1.0"

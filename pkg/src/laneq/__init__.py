"""Lane-frame residual trajectory forecasting with small quantum circuits."""

__version__ = "0.1.0"

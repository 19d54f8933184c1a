"""Walk-forward fundamental stock recommendation and backtesting engine."""

__version__ = "0.1.0"

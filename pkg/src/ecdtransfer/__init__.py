"""Pre-trained tabular encoders for cross-country early childhood development prediction."""

__version__ = "0.1.0"

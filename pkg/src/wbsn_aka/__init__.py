"""Hash/XOR mutual authentication and key agreement for two-tier body sensor networks."""

__version__ = "0.1.0"

"""Multi-agent demand-response benchmark harness for building districts."""

__version__ = "0.1.0"

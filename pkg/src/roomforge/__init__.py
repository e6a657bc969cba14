"""Floor-plan assembly from a database of annotated rooms."""

__version__ = "0.1.0"

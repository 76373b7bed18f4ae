"""Visual-to-music generation: pipeline orchestration, backends, and evaluation."""

__version__ = "0.1.0"

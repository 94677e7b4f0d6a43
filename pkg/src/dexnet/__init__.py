"""Few-shot leaf disease classification from fused critic observations."""

__version__ = "0.1.0"

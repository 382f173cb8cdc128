"""Covariant Lax tensors for particle motion on curved manifolds."""

__version__ = "0.1.0"

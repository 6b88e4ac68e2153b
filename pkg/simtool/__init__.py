"""Simulador y herramientas de análisis para convertidores formadores de red con caída angular."""

__version__ = "0.1.0"

__all__ = ["__version__"]

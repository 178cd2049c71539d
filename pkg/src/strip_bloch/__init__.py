"""Surface-state spectra and transport for strip-periodic discrete Schrödinger operators."""

__version__ = "0.1.0"

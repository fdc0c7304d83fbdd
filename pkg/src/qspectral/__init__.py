"""qspectral: quantum spectral clustering at desk scale."""

__version__ = "0.1.0"

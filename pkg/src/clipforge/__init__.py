"""clipforge: fight-scene detection and highlight compilation for video."""

__version__ = "0.1.0"

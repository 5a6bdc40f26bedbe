"""
Absorptive laser-threshold magnetometry simulator.

Diamond Raman laser whose pump is absorbed by microwave-driven NV centres:
laser curves, threshold shifts and shot-noise-limited DC sensitivity.
"""

__version__ = "1.0.0"

__all__ = ["__version__"]

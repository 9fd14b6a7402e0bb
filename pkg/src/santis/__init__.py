"""Sampling-augmented neural reconstruction of undersampled multi-coil MRI."""

from santis.errors import NumericalError, ValidationError

__version__ = "0.1.0"

__all__ = ["NumericalError", "ValidationError", "__version__"]

"""Sequential selection among two arms across overlapping, asynchronously arriving tasks."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

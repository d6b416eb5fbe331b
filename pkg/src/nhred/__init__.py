"""Nonholonomic momentum reduction: Dirac structures, gauge transformations and reduced forms."""
__version__ = "0.1.0"

from .models import MODEL_NAMES, get_model, reference_eval  # noqa: E402

__all__ = ["MODEL_NAMES", "get_model", "reference_eval", "__version__"]

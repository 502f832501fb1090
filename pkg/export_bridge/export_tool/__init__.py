"""Checkpoint exporter: torchvision CNN weights to the neutral container."""

from export_tool.errors import ExportError, ExportWarning, NameMappingError, UnknownModelError
from export_tool.naming import SUPPORTED_MODELS, ConvInfo, conv_inventory, family_of

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportWarning",
    "NameMappingError",
    "UnknownModelError",
    "SUPPORTED_MODELS",
    "ConvInfo",
    "conv_inventory",
    "family_of",
    "__version__",
]

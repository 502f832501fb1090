"""Exception and warning types for the exporter."""


class ExportError(Exception):
    """Base class for all exporter failures."""


class UnknownModelError(ExportError):
    """Raised for a model id outside the supported set."""


class NameMappingError(ExportError):
    """Raised when checkpoint tensors do not line up with the model's convs."""


class ExportWarning(UserWarning):
    """Non-fatal conditions, e.g. dtype conversion during export."""

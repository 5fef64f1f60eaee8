"""Shared exception types with machine-readable codes."""


class RisError(Exception):
    """Base error. `code` is a stable machine-readable identifier and
    `context` carries structured detail for the CLI/service error JSON."""

    def __init__(self, code: str, message: str, **context):
        super().__init__(message)
        self.code = code
        self.context = context

    def to_json(self) -> dict:
        return {"code": self.code, "message": str(self), "context": self.context}


class FrequencyRangeError(RisError):
    """Requested frequency lies outside the anchor span of a cell state."""

    def __init__(self, message: str, **context):
        super().__init__("FREQ_OUT_OF_RANGE", message, **context)


class GeometryError(RisError):
    """Invalid array geometry or config/geometry dimension mismatch."""

    def __init__(self, message: str, **context):
        super().__init__("GEOMETRY", message, **context)


class DegenerateGeometryError(RisError):
    """An element coincides with the Tx or Rx position."""

    def __init__(self, message: str, **context):
        super().__init__("DEGENERATE_GEOMETRY", message, **context)

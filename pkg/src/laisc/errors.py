"""Exception hierarchy shared across the laisc package.

Every failure a caller can provoke through data (rather than through a
programming mistake) raises a subclass of :class:`LaiscError`, so parsers
and the CLI can catch one base class and turn it into a diagnostic.
"""

from __future__ import annotations


class LaiscError(Exception):
    """Base class for all landscape, evidence, and metric errors."""


# --- landscape structure -------------------------------------------------


class DuplicateId(LaiscError):
    def __init__(self, id_: str, collection: str = "") -> None:
        where = f" in {collection}" if collection else ""
        super().__init__(f"duplicate id {id_!r}{where}")
        self.id = id_
        self.collection = collection


class DanglingReference(LaiscError):
    def __init__(self, id_: str, referrer: str) -> None:
        super().__init__(f"{referrer} references unknown id {id_!r}")
        self.id = id_
        self.referrer = referrer


class InvalidPayload(LaiscError):
    def __init__(self, vr_id: str, reason: str) -> None:
        super().__init__(f"invalid payload for {vr_id}: {reason}")
        self.vr_id = vr_id
        self.reason = reason


# --- parsing and serialization -------------------------------------------


class InputSyntaxError(LaiscError):
    """Input is not well-formed text for the declared format."""

    def __init__(self, message: str, offset: int | None = None) -> None:
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SchemaError(LaiscError):
    """Well-formed input that violates the declared schema."""

    def __init__(self, path: str, expected: str, got: object) -> None:
        super().__init__(f"{path}: expected {expected}, got {got!r}")
        self.path = path
        self.expected = expected
        self.got = got


class InvalidTimestamp(LaiscError):
    def __init__(self, value: str, reason: str) -> None:
        super().__init__(f"invalid timestamp {value!r}: {reason}")
        self.value = value
        self.reason = reason


class UnsupportedFormat(LaiscError):
    def __init__(self, fmt: str, supported: tuple[str, ...]) -> None:
        super().__init__(f"unsupported format {fmt!r}; supported: {', '.join(supported)}")
        self.format = fmt


# --- numeric inputs and metrics -------------------------------------------


class DimensionMismatch(LaiscError):
    pass


class ValueOutOfRange(LaiscError):
    pass


class NotNormalized(LaiscError):
    def __init__(self, row: int, total: float) -> None:
        super().__init__(f"probability row {row} sums to {total!r}, not 1")
        self.row = row
        self.total = total


class EmptyDataset(LaiscError):
    pass


class EmptyTable(LaiscError):
    pass


class NeuronCountMismatch(LaiscError):
    pass


class NonFinite(LaiscError):
    pass


class InvalidThreshold(LaiscError):
    pass


class InvalidParameter(LaiscError):
    pass


class PatchOutOfBounds(LaiscError):
    pass


# --- evaluation -----------------------------------------------------------


class UnknownFilterKey(LaiscError):
    def __init__(self, key: str, value: str) -> None:
        super().__init__(f"filter {key}={value!r} matches no id or name in the landscape")
        self.key = key
        self.value = value

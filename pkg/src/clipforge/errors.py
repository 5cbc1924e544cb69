"""Exception hierarchy shared across the package.

Every domain error raised by clipforge derives from ClipforgeError so the CLI
can map them onto a single exit code.
"""


class ClipforgeError(Exception):
    """Base class for all clipforge domain errors."""


# --- media / decoding ---

class MissingFile(ClipforgeError):
    pass


class DecodeError(ClipforgeError):
    pass


class EmptyVideo(ClipforgeError):
    pass


class BadChannelCount(ClipforgeError):
    pass


# --- dataset / manifests / archives ---

class MissingClassDir(ClipforgeError):
    pass


class EmptyClassDir(ClipforgeError):
    pass


class TooFewSamples(ClipforgeError):
    pass


class BadMagic(ClipforgeError):
    pass


class VersionMismatch(ClipforgeError):
    pass


class TruncatedPayload(ClipforgeError):
    pass


# --- model / numerics ---

class ShapeMismatch(ClipforgeError):
    pass


class NonFiniteLoss(ClipforgeError):
    pass


# --- training / evaluation ---

class EmptySplit(ClipforgeError):
    pass


class LengthMismatch(ClipforgeError):
    pass


class BadLabel(ClipforgeError):
    pass


class EmptyMatrix(ClipforgeError):
    pass


class EmptyHistory(ClipforgeError):
    pass


# --- highlighting / rendering ---

class EmptyPlan(ClipforgeError):
    pass


class RenderToolFailure(ClipforgeError):
    pass


class SchemaVersionMismatch(ClipforgeError):
    pass


class MalformedPlan(ClipforgeError):
    pass


class CheckpointMissing(ClipforgeError):
    pass


# --- synthetic data ---

class OverlappingIntervals(ClipforgeError):
    pass

"""Exception types raised by the scenecrit package."""


class SceneCritError(Exception):
    """Base class for all errors raised by this package."""


class FileError(SceneCritError):
    """An input file could not be opened or read."""


class FormatError(SceneCritError):
    """A file exists but its header or a required row is not in the expected format."""


class EmptyRecording(SceneCritError):
    """A track file contained no usable rows after validation and type filtering."""


class MissingAgent(SceneCritError):
    """A requested agent id is not present in the scene or recording."""


class EmptyScene(SceneCritError):
    """An operation that needs at least one agent was given an empty scene."""


class DuplicateLabel(SceneCritError):
    """A label file assigned two values to the same (recording, ego, timestamp) key."""


class MissingPrediction(SceneCritError):
    """Labeled keys had no corresponding prediction.

    The offending keys are kept on the ``keys`` attribute.
    """

    def __init__(self, keys):
        self.keys = sorted(keys)
        preview = ", ".join(repr(k) for k in self.keys[:5])
        more = "" if len(self.keys) <= 5 else f" (+{len(self.keys) - 5} more)"
        super().__init__(f"{len(self.keys)} labeled keys have no prediction: {preview}{more}")


class EmptyCounts(SceneCritError):
    """A confusion table with zero total entries cannot be summarized."""


class InvalidSpec(SceneCritError):
    """A synthetic scene specification is out of range or inconsistent."""


class UnsupportedMetric(SceneCritError):
    """A metric id is unknown or not supported by the requested operation."""

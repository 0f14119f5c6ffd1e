"""Exception hierarchy for the affinity toolkit.

Every error the library raises on bad input or bad data derives from
:class:`AffinityError`, so callers (and the CLI) can distinguish data
problems from genuine bugs.
"""


class AffinityError(Exception):
    """Base class for all toolkit errors."""


# --- trace parsing / reading ------------------------------------------------

class TraceFormatError(AffinityError):
    """Base class for errors raised while decoding trace lines."""


class MalformedLine(TraceFormatError):
    """A trace line violates the grammar (field count, tags, attribute syntax)."""


class ValueOutOfRange(TraceFormatError):
    """A numeric field is outside its documented range (e.g. cpu not in [0,1])."""


class UnknownOperator(TraceFormatError):
    """A task constraint uses an operator outside EQ/NE/LT/LE/GT/GE."""


class NonMonotonicTimestamp(AffinityError):
    """An event stream regressed in time."""


class InfeasibleConfig(AffinityError):
    """A synthetic trace configuration cannot be realized."""


# --- constraint algebra -----------------------------------------------------

class TypeMismatch(AffinityError):
    """An order comparison carries a non-integer value."""


class Unsatisfiable(AffinityError):
    """A task's constraints admit no node; such tasks are dropped with a warning."""


# --- matcher ----------------------------------------------------------------

class StaleEvent(AffinityError):
    """An event's timestamp is older than the cluster clock."""


class UnknownNode(AffinityError):
    """UPDATE/REMOVE of a node that is not present."""


class UnknownTask(AffinityError):
    """UPDATE/FINISH of a task that is not live."""


class DuplicateNode(AffinityError):
    """ADD of a node id that is already present."""


class DuplicateTask(AffinityError):
    """SUBMIT of a (job_id, task_index) that is already live."""


class InvalidCount(AffinityError):
    """Group classification requires a positive suitable-node count."""


# --- feature pipeline -------------------------------------------------------

class EmptyDataset(AffinityError):
    """Dictionary construction requires at least one row."""


class UnknownCategory(AffinityError):
    """A row carries a label absent from the feature dictionary."""


class IOFailure(AffinityError):
    """An OS-level read/write error while handling a toolkit file."""


class FormatVersionMismatch(AffinityError):
    """A container file has the wrong magic or version."""


class ChecksumMismatch(AffinityError):
    """A container file's checksum does not match its content."""


# --- models / evaluation ----------------------------------------------------

class DegenerateData(AffinityError):
    """Training data has fewer than two classes or zero-width features."""


class NonFiniteLoss(AffinityError):
    """An iterative fit diverged to NaN/inf."""


class WidthMismatch(AffinityError):
    """Prediction rows do not match the model's feature width."""


class LengthMismatch(AffinityError):
    """Paired label sequences have different lengths."""


class TooFewRows(AffinityError):
    """A dataset is too small to split."""

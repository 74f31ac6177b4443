"""Domain exceptions shared across the package."""


class SkycastError(Exception):
    """Base class for all skycast domain errors."""


# --- ingestion ---

class MalformedRowError(SkycastError):
    """CSV row has the wrong column count or a non-numeric field."""


class RangeViolationError(SkycastError):
    """Coordinate out of bounds or non-finite."""


class DuplicateTimestampError(SkycastError):
    """Same uav_id and timestamp seen twice."""


class BadParamsError(SkycastError):
    """Invalid synthetic-shape parameters."""


class EmptyResultError(SkycastError):
    """A filter removed every trajectory."""


# --- numerics ---

class EmptyInputError(SkycastError):
    """Operation requires a non-empty input."""


class BadArchError(SkycastError):
    """Architecture descriptor has zero or negative sizes."""


class DimMismatchError(SkycastError):
    """Vector/matrix dimensions are inconsistent."""


class WindowSizeMismatchError(SkycastError):
    """Input window length differs from the configured window size."""


class StaleCacheError(SkycastError):
    """A backward cache was consumed twice."""


class LengthMismatchError(SkycastError):
    """Prediction/target lists differ in length."""


class ShapeMismatchError(SkycastError):
    """Parameter and gradient shapes differ."""


class NonFiniteGradientError(SkycastError):
    """A gradient contains NaN or infinity."""


class NonFiniteValueError(SkycastError):
    """A checked function produced NaN or infinity."""


class KindNotTrainableError(SkycastError):
    """train_step called on a model without trainable parameters."""


# --- engine / harness ---

class TrajectoryTooShortError(SkycastError):
    """Trajectory shorter than the minimum the operation needs."""


class EmptyTrainingSetError(SkycastError):
    """Pretraining called with no trajectories."""


class InsufficientHistoryError(SkycastError):
    """Recurrent step requested before the start gate."""


class EmptyDatasetError(SkycastError):
    """Benchmark received an empty train or test dataset."""


class InvalidThresholdsError(SkycastError):
    """Benchmark length thresholds are not usable."""

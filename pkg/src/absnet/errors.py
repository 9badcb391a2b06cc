"""Exception taxonomy.

Exit-code mapping used by the CLI: ConfigError -> 1 (usage),
DataError -> 2, NumericalAbort -> 3.
"""


class AbsnetError(Exception):
    """Base class for all package errors."""


class ConfigError(AbsnetError):
    """Invalid configuration or command usage."""


class UnknownKey(ConfigError):
    """Configuration file contains a key that no config field accepts."""


class ConstraintViolation(ConfigError):
    """Configuration values violate a dimensional or range constraint."""


class DataError(AbsnetError):
    """Invalid or inconsistent input data."""


class MalformedXml(DataError):
    """Article input is not well-formed XML."""


class UndecodableImage(DataError):
    """Image bytes could not be decoded as a raster image."""


class EmptyCorpus(DataError):
    """Vocabulary construction received no tokens."""


class InsufficientClassMembers(DataError):
    """A class has too few members for the requested test split."""


class MalformedVectorFile(DataError):
    """Word-vector file violates the `<count> <dim>` text format."""


class DimensionMismatch(DataError):
    """Word-vector file dimension differs from the configured one."""


class WidthMismatch(DataError):
    """Vector width does not match the configured feature width."""


class ShapeMismatch(DataError):
    """Array shapes disagree where equality is required."""


class FeatureDimMismatch(DataError):
    """External image feature has the wrong width."""


class EmptyMask(DataError):
    """Text loss evaluated on a grid with no real token positions."""


class EmptyDataset(DataError):
    """Training requested on a dataset with no usable pairs."""


class MissingInitCheckpoint(DataError):
    """Training regime requires an initial checkpoint but none was given."""


class CorruptCheckpoint(DataError):
    """Checkpoint files are inconsistent or do not match the model config."""


class UnlabeledPair(DataError):
    """Evaluation encountered a test pair without a label."""


class EmptyMatrix(DataError):
    """Metrics requested on a confusion matrix with zero total count."""


class NumericalAbort(AbsnetError):
    """Training aborted for numerical reasons."""


class NonFiniteLoss(NumericalAbort):
    """Loss became NaN or infinite during training."""

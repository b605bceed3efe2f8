from pathlib import Path
from typing import Iterable, Union


class FormError(RuntimeError):
    """Base class for every error raised by the rumor detection pipeline"""


class CorpusFormatError(FormError):
    """Raise when a thread record cannot be parsed"""

    def __init__(self, path: Union[str, Path], line: int, reason: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {reason}")


class UnknownLabelError(FormError):
    """Raise when a label string is not one of the four veracity classes"""

    def __init__(self, label: str, valid: Iterable[str]):
        self.label = label
        self.valid = tuple(valid)
        super().__init__(
            f"unknown label {label!r}, must be one of {', '.join(self.valid)}"
        )


class MissingImageError(FormError):
    """Raise when a claim names an image that does not exist"""


class FoldError(FormError):
    """Raise when a corpus cannot be split into the requested folds"""


class EncoderUnavailableError(FormError):
    """Raise when an encoder adapter cannot be constructed"""

    def __init__(self, adapter: str, reason: str):
        self.adapter = adapter
        super().__init__(f"encoder adapter {adapter!r} unavailable: {reason}")


class ImageReadError(FormError, OSError):
    """Raise when an image file exists but cannot be decoded"""

    def __init__(self, path: Union[str, Path], reason: str):
        self.path = str(path)
        super().__init__(f"cannot read image {self.path}: {reason}")


class CheckpointMismatchError(FormError):
    """Raise when a checkpoint does not fit the configured model"""

    def __init__(self, parameter: str, reason: str):
        self.parameter = parameter
        super().__init__(f"checkpoint parameter {parameter!r}: {reason}")


class EmptySplitError(FormError):
    """Raise when a training split holds no threads"""


class SelectionParameterError(FormError, ValueError):
    """Raise when top-k selection is asked for fewer than one response"""


class OptionalDependencyError(FormError):
    """Raise when a feature needs an optional extra that is not installed"""

    def __init__(self, extra: str, reason: str):
        self.extra = extra
        super().__init__(f"install the {extra!r} extra: {reason}")

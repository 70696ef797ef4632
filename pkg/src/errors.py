"""
Exception hierarchy for the layered vectorizer.
"""


class VectorizeError(Exception):
    """Base class for every error raised by the vectorizer."""


class ImageLoadError(VectorizeError):
    """Input raster could not be decoded."""


class QuantizationError(VectorizeError, ValueError):
    """Color quantization was asked for something the image cannot give."""


class EmptyMaskError(VectorizeError, ValueError):
    """A mask, layer or superlevel set that must be nonempty is empty."""


class NoiseThresholdError(VectorizeError):
    """Noise detection swallowed every layer."""


class DepthCycleError(VectorizeError):
    """Topological sort met a cycle."""


class DegenerateTriangleError(VectorizeError, ValueError):
    """Bounding triangle angles do not define a triangle."""


class ConfigError(VectorizeError, ValueError):
    """Pipeline configuration field outside its documented range."""


class StageError(VectorizeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")

"""
Raster image types and decoding.

Images are held as numpy arrays of shape (height, width, 3), uint8, in
row-major order. A QuantizedImage replaces the RGB triples with indices into
a Palette.
"""

import os
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import ImageLoadError


SUPPORTED_FORMATS = ("PNG", "PPM")


@dataclass
class RasterImage:
    """Decoded RGB image."""
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if self.width < 1 or self.height < 1:
            raise ImageLoadError(f"zero-dimension image {self.width}x{self.height}")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ImageLoadError(
                f"pixel array shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3"
            )

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "RasterImage":
        pixels = np.asarray(pixels, dtype=np.uint8)
        return cls(width=pixels.shape[1], height=pixels.shape[0], pixels=pixels)


@dataclass
class Palette:
    """Ordered, pairwise distinct RGB colors."""
    colors: List[Tuple[int, int, int]]

    def __post_init__(self):
        self.colors = [tuple(int(v) for v in c) for c in self.colors]
        if not self.colors:
            raise ValueError("palette needs at least one color")
        if len(set(self.colors)) != len(self.colors):
            raise ValueError("palette colors must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.colors)

    def as_array(self) -> np.ndarray:
        return np.array(self.colors, dtype=np.uint8).reshape(-1, 3)

    def hex(self, index: int) -> str:
        r, g, b = self.colors[index]
        return f"#{r:02x}{g:02x}{b:02x}"


@dataclass
class QuantizedImage:
    """Label grid over the image domain plus its palette."""
    width: int
    height: int
    labels: np.ndarray  # (height, width) int, every entry < len(palette)
    palette: Palette

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.labels.shape != (self.height, self.width):
            raise ValueError("label grid does not match image dimensions")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= len(self.palette)):
            raise ValueError("label outside palette range")

    def to_rgb(self) -> np.ndarray:
        """Render the labels back to an RGB array."""
        return self.palette.as_array()[self.labels]

    def to_raster(self) -> RasterImage:
        return RasterImage(self.width, self.height, self.to_rgb())


def load_image(path: str) -> RasterImage:
    """Decode a PNG or binary PPM file; alpha is composited over white."""
    if not os.path.isfile(path):
        raise ImageLoadError(f"no such file: {path}")

    try:
        with Image.open(path) as img:
            if img.format not in SUPPORTED_FORMATS:
                raise ImageLoadError(f"unsupported format {img.format!r} in {path}")
            img.load()
            if img.width == 0 or img.height == 0:
                raise ImageLoadError(f"zero-dimension image in {path}")
            if img.mode in ("RGBA", "LA") or (img.mode == "P" and "transparency" in img.info):
                rgba = img.convert("RGBA")
                background = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
                rgb = Image.alpha_composite(background, rgba).convert("RGB")
            else:
                rgb = img.convert("RGB")
            pixels = np.array(rgb, dtype=np.uint8)
    except ImageLoadError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        raise ImageLoadError(f"cannot decode {path}: {e}") from e

    return RasterImage.from_array(pixels)


def save_png(pixels: np.ndarray, path: str, mode: str = "RGB"):
    """Write an array as PNG (used by the stage dumps)."""
    if mode == "1":
        Image.fromarray(np.asarray(pixels, dtype=bool)).save(path, format="PNG")
    else:
        Image.fromarray(np.asarray(pixels, dtype=np.uint8)).save(path, format="PNG")

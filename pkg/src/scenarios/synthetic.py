"""
Synthetic test scenes with known layer structure.

Every scene is drawn with exact palette colors (no antialiasing), so the
quantizer recovers the colors exactly when K equals the number of colors.
"""

from typing import Callable, Dict, Tuple

import numpy as np

from ..raster.image import RasterImage

WHITE = (255, 255, 255)
RED = (220, 30, 30)
GREEN = (40, 170, 60)
BLUE = (30, 60, 200)
YELLOW = (240, 210, 40)
ORANGE = (255, 140, 0)
BLACK = (20, 20, 20)
SNOW = (250, 250, 250)


def _canvas(width: int, height: int, color=WHITE) -> np.ndarray:
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:] = color
    return pixels


def _grid(height: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0:height, 0:width]
    return xs.astype(float), ys.astype(float)


def triangle_mask(height: int, width: int, a, b, c) -> np.ndarray:
    """Pixels (x = col, y = row) inside or on the triangle abc."""
    xs, ys = _grid(height, width)

    def side(p, q):
        return (q[0] - p[0]) * (ys - p[1]) - (q[1] - p[1]) * (xs - p[0])

    s1, s2, s3 = side(a, b), side(b, c), side(c, a)
    return ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))


def disk_mask(height: int, width: int, cx: float, cy: float, r: float) -> np.ndarray:
    xs, ys = _grid(height, width)
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r


def blank() -> RasterImage:
    return RasterImage.from_array(_canvas(32, 32))


def blocks() -> RasterImage:
    """Four flat quadrants."""
    pixels = _canvas(48, 48)
    pixels[:24, :24] = RED
    pixels[:24, 24:] = GREEN
    pixels[24:, :24] = BLUE
    pixels[24:, 24:] = YELLOW
    return RasterImage.from_array(pixels)


def two_rectangles() -> RasterImage:
    """Blue L-shape whose missing quarter is a red rectangle."""
    pixels = _canvas(64, 64)
    pixels[8:56, 8:56] = BLUE
    pixels[8:32, 32:56] = RED
    return RasterImage.from_array(pixels)


def three_disks() -> RasterImage:
    """Three overlapping disks stacked in a cycle: red over green over blue over red."""
    height, width = 135, 140
    centers = {"red": (40.0, 95.0), "green": (100.0, 95.0), "blue": (70.0, 95.0 - 60.0 * np.sqrt(3) / 2)}
    radius = 34.0
    red = disk_mask(height, width, *centers["red"], radius)
    green = disk_mask(height, width, *centers["green"], radius)
    blue = disk_mask(height, width, *centers["blue"], radius)

    pixels = _canvas(width, height)
    pixels[blue] = BLUE
    pixels[green] = GREEN
    pixels[red] = RED
    pixels[green & blue] = GREEN
    pixels[blue & red] = BLUE
    pixels[red & green] = RED
    pixels[red & green & blue] = RED
    return RasterImage.from_array(pixels)


def mountain() -> RasterImage:
    """Seven layers: a front mountain with a snow cap standing inside a snowy back
    mountain with a rock face, a sun behind the back peak, sky and a valley floor.

    Top to bottom: front cap, front mountain, back snow, back rock, sun, sky,
    ground. Every layer's hull only reaches into layers drawn above it.
    """
    height, width = 120, 160
    xs, ys = _grid(height, width)
    base = 108

    pixels = _canvas(width, height, YELLOW)
    pixels[ys > 100 - 0.5 * np.abs(xs - 80)] = GREEN

    back = (np.abs(xs - 96) <= 0.62 * (ys - 22)) & (ys <= base)
    front = ((xs >= 88 - 0.62 * (ys - 44)) & (xs <= 88 + 0.35 * (ys - 44))
             & (ys >= 44) & (ys <= base))
    cap = ((xs >= 88 - 0.62 * (ys - 44) + 2.5) & (xs <= 88 + 0.35 * (ys - 44) - 2.5)
           & (ys <= 66 - 0.5 * np.abs(xs - 88)))

    # rock face: right of the snow line A -> C -> B, which bends into the rock at C
    a, c, b = (113.4, 50.0), (129.4, 94.6), (116.0, 108.0)
    right_of_ac = (c[0] - a[0]) * (ys - a[1]) - (c[1] - a[1]) * (xs - a[0]) < 0
    right_of_cb = (b[0] - c[0]) * (ys - c[1]) - (b[1] - c[1]) * (xs - c[0]) < 0
    rock = back & (right_of_ac | right_of_cb) & (ys >= 58)

    pixels[disk_mask(height, width, 96, 24, 20)] = ORANGE
    pixels[back] = SNOW
    pixels[rock] = BLACK
    pixels[front] = BLACK
    pixels[cap] = SNOW
    return RasterImage.from_array(pixels)


def kanizsa() -> RasterImage:
    """Orange triangle cut into three pieces by an inverted blue triangle."""
    height, width = 100, 100
    pixels = _canvas(width, height)
    pixels[triangle_mask(height, width, (10, 90), (90, 90), (50, 20))] = ORANGE
    pixels[triangle_mask(height, width, (26, 52), (74, 52), (50, 96))] = BLUE
    return RasterImage.from_array(pixels)


def notched_disk() -> RasterImage:
    """Blue disk whose upper-right quarter is covered by a red wedge."""
    height, width = 64, 64
    xs, ys = _grid(height, width)
    disk = disk_mask(height, width, 32, 32, 20)
    wedge = disk & (xs > 32) & (ys < 32)
    pixels = _canvas(width, height)
    pixels[disk] = BLUE
    pixels[wedge] = RED
    return RasterImage.from_array(pixels)


ONE_SIDED_CHORD = (30.0, 66.0, 24)  # left end, right end, chord row


def one_sided(theta0: float, theta_l: float) -> RasterImage:
    """Blue trapezoid whose sides meet above a red band at base angles theta0 and theta_l.

    The visible part lies below the chord row; the band hides where the
    sides would continue towards the apex.
    """
    height, width = 44, 96
    left, right, chord = ONE_SIDED_CHORD
    xs, ys = _grid(height, width)
    pixels = _canvas(width, height)
    pixels[4:chord, 4:width - 4] = RED
    below = ys - chord
    trapezoid = ((ys >= chord) & (ys <= chord + 11)
                 & (xs >= left - below / np.tan(theta0)) & (xs <= right + below / np.tan(theta_l)))
    pixels[trapezoid] = BLUE
    return RasterImage.from_array(pixels)


def noisy_blocks() -> RasterImage:
    """Red and blue halves with single green pixels along the seam."""
    pixels = _canvas(48, 48)
    pixels[:, :24] = RED
    pixels[:, 24:] = BLUE
    for row, col in ((10, 23), (20, 24), (30, 23), (40, 24)):
        pixels[row, col] = GREEN
    return RasterImage.from_array(pixels)


SCENES: Dict[str, Callable[[], RasterImage]] = {
    "blank": blank,
    "blocks": blocks,
    "two_rectangles": two_rectangles,
    "three_disks": three_disks,
    "mountain": mountain,
    "kanizsa": kanizsa,
    "notched_disk": notched_disk,
    "noisy_blocks": noisy_blocks,
}


def build_scene(name: str) -> RasterImage:
    if name not in SCENES:
        raise ValueError(f"Unknown scenario: {name}")
    return SCENES[name]()

"""
Tests for image decoding and K-means quantization.
"""

import sys
import os
import shutil
import tempfile
import unittest

import numpy as np
from PIL import Image

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from src.raster.image import RasterImage, Palette, QuantizedImage, load_image, save_png
from src.raster.quantize import kmeans_quantize, distinct_colors
from src.scenarios.synthetic import blocks, RED, GREEN, BLUE, YELLOW
from src.errors import ImageLoadError, QuantizationError


class TestImageLoading(unittest.TestCase):

    def setUp(self):
        self.tmp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp_dir, ignore_errors=True)

    def _path(self, name):
        return os.path.join(self.tmp_dir, name)

    def test_single_white_pixel_png(self):
        path = self._path("white.png")
        Image.new("RGB", (1, 1), (255, 255, 255)).save(path)
        img = load_image(path)
        self.assertEqual((img.width, img.height), (1, 1))
        self.assertEqual(tuple(img.pixels[0, 0]), (255, 255, 255))

    def test_ppm_pixels(self):
        path = self._path("small.ppm")
        data = bytes([255, 0, 0, 0, 255, 0, 0, 0, 255,
                      10, 20, 30, 40, 50, 60, 70, 80, 90])
        with open(path, "wb") as f:
            f.write(b"P6\n3 2\n255\n" + data)
        img = load_image(path)
        self.assertEqual((img.width, img.height), (3, 2))
        expected = np.frombuffer(data, dtype=np.uint8).reshape(2, 3, 3)
        np.testing.assert_array_equal(img.pixels, expected)

    def test_alpha_composited_over_white(self):
        path = self._path("alpha.png")
        rgba = np.zeros((2, 2, 4), dtype=np.uint8)
        rgba[0, 0] = (255, 0, 0, 255)
        Image.fromarray(rgba).save(path)
        img = load_image(path)
        self.assertEqual(tuple(img.pixels[0, 0]), (255, 0, 0))
        self.assertEqual(tuple(img.pixels[1, 1]), (255, 255, 255))

    def test_truncated_file_raises(self):
        good = self._path("good.png")
        Image.new("RGB", (16, 16), (1, 2, 3)).save(good)
        with open(good, "rb") as f:
            head = f.read(20)
        bad = self._path("bad.png")
        with open(bad, "wb") as f:
            f.write(head)
        with self.assertRaises(ImageLoadError):
            load_image(bad)

    def test_unsupported_format_raises(self):
        path = self._path("img.bmp")
        Image.new("RGB", (4, 4)).save(path, format="BMP")
        with self.assertRaises(ImageLoadError):
            load_image(path)

    def test_missing_file_raises(self):
        with self.assertRaises(ImageLoadError):
            load_image(self._path("nope.png"))

    def test_save_png_mask(self):
        path = self._path("mask.png")
        mask = np.zeros((3, 5), dtype=bool)
        mask[1, 2] = True
        save_png(mask, path, mode="1")
        with Image.open(path) as back:
            self.assertEqual(back.size, (5, 3))
            self.assertTrue(np.asarray(back.convert("L"))[1, 2] > 0)


class TestRasterTypes(unittest.TestCase):

    def test_shape_mismatch_rejected(self):
        with self.assertRaises(ImageLoadError):
            RasterImage(width=3, height=2, pixels=np.zeros((3, 2, 3)))

    def test_palette_must_be_distinct(self):
        with self.assertRaises(ValueError):
            Palette([(1, 2, 3), (1, 2, 3)])

    def test_palette_hex(self):
        self.assertEqual(Palette([(255, 0, 16)]).hex(0), "#ff0010")

    def test_quantized_round_trip_to_rgb(self):
        palette = Palette([(0, 0, 0), (255, 255, 255)])
        q = QuantizedImage(width=2, height=1, labels=np.array([[1, 0]]), palette=palette)
        np.testing.assert_array_equal(q.to_rgb(), [[[255, 255, 255], [0, 0, 0]]])

    def test_label_out_of_range_rejected(self):
        with self.assertRaises(ValueError):
            QuantizedImage(width=1, height=1, labels=np.array([[2]]), palette=Palette([(0, 0, 0)]))


class TestKMeansQuantize(unittest.TestCase):

    def test_two_colors_exact(self):
        pixels = np.zeros((4, 4, 3), dtype=np.uint8)
        pixels[:, 2:] = (200, 100, 50)
        q = kmeans_quantize(RasterImage.from_array(pixels), K=2)
        self.assertEqual(set(q.palette.colors), {(0, 0, 0), (200, 100, 50)})
        np.testing.assert_array_equal(q.to_rgb(), pixels)

    def test_uniform_image_single_label(self):
        pixels = np.full((5, 7, 3), 42, dtype=np.uint8)
        q = kmeans_quantize(RasterImage.from_array(pixels), K=1)
        self.assertTrue((q.labels == 0).all())
        self.assertEqual(q.palette.colors, [(42, 42, 42)])

    def test_blocks_constant_per_block(self):
        q = kmeans_quantize(blocks(), K=4, seed=7)
        quadrants = [q.labels[:24, :24], q.labels[:24, 24:], q.labels[24:, :24], q.labels[24:, 24:]]
        for quadrant in quadrants:
            self.assertEqual(len(np.unique(quadrant)), 1)
        self.assertEqual(len({int(quad[0, 0]) for quad in quadrants}), 4)
        self.assertEqual(set(q.palette.colors), {RED, GREEN, BLUE, YELLOW})

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(3)
        pixels = rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8)
        img = RasterImage.from_array(pixels)
        a = kmeans_quantize(img, K=5, seed=11)
        b = kmeans_quantize(img, K=5, seed=11)
        np.testing.assert_array_equal(a.labels, b.labels)
        self.assertEqual(a.palette.colors, b.palette.colors)

    def test_idempotent_on_quantized_output(self):
        rng = np.random.default_rng(5)
        pixels = rng.integers(0, 256, size=(10, 10, 3), dtype=np.uint8)
        first = kmeans_quantize(RasterImage.from_array(pixels), K=4, seed=1)
        second = kmeans_quantize(first.to_raster(), K=len(first.palette), seed=1)
        np.testing.assert_array_equal(second.to_rgb(), first.to_rgb())

    def test_palette_entries_are_distinct(self):
        rng = np.random.default_rng(9)
        pixels = rng.integers(0, 4, size=(16, 16, 3), dtype=np.uint8)
        q = kmeans_quantize(RasterImage.from_array(pixels), K=8)
        self.assertEqual(len(set(q.palette.colors)), len(q.palette))

    def test_centroids_weighted_by_pixel_count(self):
        pixels = np.zeros((10, 10, 3), dtype=np.uint8)
        pixels[9, :5] = 10
        pixels[9, 5:] = 255
        q = kmeans_quantize(RasterImage.from_array(pixels), K=2)
        # 90 black pixels pull the dark centroid to (50 / 95) rounded
        self.assertEqual(set(q.palette.colors), {(1, 1, 1), (255, 255, 255)})
        self.assertEqual(int((q.labels == q.labels[0, 0]).sum()), 95)

    def test_too_many_clusters_raises(self):
        pixels = np.zeros((3, 3, 3), dtype=np.uint8)
        with self.assertRaises(QuantizationError):
            kmeans_quantize(RasterImage.from_array(pixels), K=2)

    def test_zero_clusters_raises(self):
        pixels = np.zeros((3, 3, 3), dtype=np.uint8)
        with self.assertRaises(QuantizationError):
            kmeans_quantize(RasterImage.from_array(pixels), K=0)

    def test_distinct_colors_counts(self):
        colors, _, counts = distinct_colors(blocks())
        self.assertEqual(len(colors), 4)
        self.assertEqual(sorted(counts.tolist()), [576, 576, 576, 576])


if __name__ == '__main__':
    unittest.main()

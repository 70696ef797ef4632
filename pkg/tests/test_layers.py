"""
Tests for shape layer extraction, noise detection and grouping quantization.
"""

import sys
import os
import unittest

import numpy as np

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from src.raster.image import RasterImage
from src.raster.quantize import kmeans_quantize
from src.layers.extraction import (
    extract_layers, detect_noise, is_noise, noise_component_color, layer_by_id
)
from src.layers.grouping import segment_phases, grouping_quantize, labeling_energy
from src.scenarios.synthetic import blocks, noisy_blocks, kanizsa, RED, GREEN
from src.errors import NoiseThresholdError


def quantize_exact(img: RasterImage):
    """Quantize with one cluster per distinct color."""
    count = len(np.unique(img.pixels.reshape(-1, 3), axis=0))
    return kmeans_quantize(img, K=count)


class TestExtractLayers(unittest.TestCase):

    def setUp(self):
        self.q = quantize_exact(blocks())
        self.layer_set = extract_layers(self.q)

    def test_one_layer_per_block(self):
        self.assertEqual(len(self.layer_set), 4)
        for layer in self.layer_set.layers:
            self.assertEqual(layer.area, 24 * 24)

    def test_ids_follow_raster_order(self):
        firsts = [layer.first_pixel() for layer in self.layer_set.layers]
        self.assertEqual(firsts, sorted(firsts))
        self.assertEqual([layer.id for layer in self.layer_set.layers], [0, 1, 2, 3])
        self.assertTrue(self.layer_set.layers[0].mask[0, 0])
        self.assertTrue(self.layer_set.layers[1].mask[0, 24])

    def test_partition(self):
        total = np.zeros(self.layer_set.shape, dtype=int)
        for layer in self.layer_set.layers:
            total += layer.mask
        self.assertTrue((total == 1).all())

    def test_adjacent_pairs_exclude_diagonal(self):
        self.assertEqual(self.layer_set.adjacent_pairs(), {(0, 1), (0, 2), (1, 3), (2, 3)})

    def test_bbox(self):
        self.assertEqual(self.layer_set.layers[3].bbox, (24, 47, 24, 47))

    def test_same_color_components_split_or_grouped(self):
        q = quantize_exact(kanizsa())
        split = extract_layers(q)
        grouped = extract_layers(q, group_same_color=True)
        orange = [l for l in split.layers if q.palette.colors[l.color_index] == (255, 140, 0)]
        self.assertGreaterEqual(len(orange), 3)
        self.assertEqual(len(grouped), 3)

    def test_layer_by_id(self):
        self.assertIs(layer_by_id(self.layer_set, 2), self.layer_set.layers[2])
        self.assertIsNone(layer_by_id(self.layer_set, 9))


class TestNoiseDetection(unittest.TestCase):

    def test_seam_pixels_become_noise(self):
        q = quantize_exact(noisy_blocks())
        layer_set = detect_noise(extract_layers(q), noise_area=10)
        self.assertEqual(len(layer_set), 2)
        self.assertEqual(len(layer_set.noise.components), 4)
        self.assertEqual(int(layer_set.noise.mask.sum()), 4)
        self.assertEqual([layer.id for layer in layer_set.layers], [0, 1])

    def test_noise_color_is_majority(self):
        q = quantize_exact(noisy_blocks())
        layer_set = detect_noise(extract_layers(q), noise_area=10)
        component = layer_set.noise.components[0]
        self.assertEqual(q.palette.colors[noise_component_color(component, q)], GREEN)

    def test_enclosed_speck_is_not_noise(self):
        pixels = np.zeros((10, 10, 3), dtype=np.uint8)
        pixels[:] = RED
        pixels[5, 5] = GREEN
        q = quantize_exact(RasterImage.from_array(pixels))
        layer_set = extract_layers(q)
        label_map = layer_set.label_map()
        colors = {l.id: l.color_index for l in layer_set.layers}
        speck = [l for l in layer_set.layers if l.area == 1][0]
        self.assertFalse(is_noise(speck, label_map, colors, noise_area=10))
        self.assertEqual(len(detect_noise(layer_set)), 2)

    def test_noise_area_zero_keeps_everything(self):
        q = quantize_exact(noisy_blocks())
        layer_set = detect_noise(extract_layers(q), noise_area=0)
        self.assertEqual(len(layer_set), 6)
        self.assertFalse(layer_set.noise.mask.any())

    def test_everything_noise_raises(self):
        pixels = np.array([[[255, 0, 0], [0, 255, 0]],
                           [[0, 0, 255], [255, 255, 0]]], dtype=np.uint8)
        q = quantize_exact(RasterImage.from_array(pixels))
        with self.assertRaises(NoiseThresholdError):
            detect_noise(extract_layers(q), noise_area=10)


class TestGroupingQuantize(unittest.TestCase):

    def setUp(self):
        pixels = np.full((16, 32, 3), 255, dtype=np.uint8)
        pixels[:, :16] = 0
        self.q = quantize_exact(RasterImage.from_array(pixels))

    def test_two_blocks_two_phases(self):
        phases = segment_phases(self.q, mu=0.01, max_phases=6)
        self.assertEqual(len(np.unique(phases)), 2)
        self.assertEqual(len(np.unique(phases[:, :16])), 1)
        self.assertEqual(len(np.unique(phases[:, 16:])), 1)
        self.assertNotEqual(phases[0, 0], phases[0, 31])

    def test_two_blocks_two_phases_at_default_mu(self):
        for mu in (0.5, 0.75, 1.0):
            phases = segment_phases(self.q, mu=mu, max_phases=6)
            self.assertEqual(len(np.unique(phases)), 2, mu)
            self.assertNotEqual(phases[0, 0], phases[0, 31])

    def test_max_phases_caps_phase_count(self):
        pixels = np.zeros((16, 16, 3), dtype=np.uint8)
        pixels[:8, :8] = (255, 0, 0)
        pixels[:8, 8:] = (0, 255, 0)
        pixels[8:, :8] = (0, 0, 255)
        pixels[8:, 8:] = (255, 255, 0)
        q = quantize_exact(RasterImage.from_array(pixels))
        self.assertEqual(len(np.unique(segment_phases(q, mu=0.75, max_phases=6))), 4)
        capped = segment_phases(q, mu=0.75, max_phases=2)
        self.assertEqual(len(np.unique(capped)), 2)
        self.assertEqual(len(np.unique(segment_phases(q, mu=0.75, max_phases=1))), 1)

    def test_gradient_disk_groups_into_one_phase(self):
        pixels = np.full((48, 48, 3), 255, dtype=np.uint8)
        rows, cols = np.mgrid[:48, :48]
        disk = (rows - 23.5) ** 2 + (cols - 23.5) ** 2 <= 16 ** 2
        band = np.clip((cols - 8) // 8, 0, 3)
        for k, red in enumerate((210, 223, 236, 249)):
            pixels[disk & (band == k)] = (red, 25, 25)
        q = quantize_exact(RasterImage.from_array(pixels))
        self.assertEqual(len(q.palette), 5)
        phases = segment_phases(q, mu=0.75, max_phases=6)
        self.assertEqual(len(np.unique(phases)), 2)
        self.assertEqual(len(np.unique(phases[disk])), 1)
        self.assertNotEqual(phases[0, 0], phases[24, 24])

        result = grouping_quantize(q, extract_layers(q), mu=0.75, max_phases=6)
        pieces = [layer for layer in result.layers if layer.injected]
        self.assertTrue(any((layer.mask == disk).all() for layer in pieces))

    def test_energy_prefers_block_labeling(self):
        image = self.q.to_rgb().astype(float) / 255.0
        single = np.zeros((16, 32), dtype=int)
        split = single.copy()
        split[:, 16:] = 1
        self.assertLess(labeling_energy(image, split, 0.01), labeling_energy(image, single, 0.01))

    def test_uniform_image_single_injected_layer(self):
        q = quantize_exact(RasterImage.from_array(np.full((8, 8, 3), 77, dtype=np.uint8)))
        result = grouping_quantize(q, extract_layers(q), mu=0.75, max_phases=6)
        self.assertEqual(len(result), 1)
        self.assertTrue(result.layers[0].injected)
        self.assertTrue(result.layers[0].mask.all())

    def test_grouping_replaces_redundant_layers(self):
        layer_set = extract_layers(self.q)
        result = grouping_quantize(self.q, layer_set, mu=0.01, max_phases=6)
        # each block is a phase piece of its own color, so the originals drop out
        self.assertEqual(len(result), 2)
        self.assertTrue(all(layer.injected for layer in result.layers))
        self.assertEqual([layer.id for layer in result.layers], [0, 1])

    def test_invalid_mu_rejected(self):
        with self.assertRaises(ValueError):
            grouping_quantize(self.q, extract_layers(self.q), mu=0.0)


if __name__ == '__main__':
    unittest.main()

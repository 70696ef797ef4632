"""
Tests for covered regions, corner detection, the elastica solver and contour extraction.
"""

import sys
import os
import unittest

import numpy as np

# Add src to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from src.raster.quantize import kmeans_quantize
from src.layers.extraction import extract_layers, detect_noise
from src.depth.graph import DepthOrdering, build_graph, break_cycles, topo_sort
from src.elastica.region import CoveredRegion, covered_region, find_corners, corner_phase
from src.elastica.solver import (
    ElasticaParams, PhaseField, MONOTONE_AFTER, operator_symbol, periodic_laplacian,
    spectral_laplacian, energy_gradient, constrained_energy, solve
)
from src.elastica.contour import extract_contour, trace_mask, small_shape_shortcut, signed_area
from src.scenarios.synthetic import blocks, mountain, notched_disk, one_sided, ONE_SIDED_CHORD, RED, BLUE
from src.geometry.energy import in_bounding_triangle
from src.geometry.hull import convex_hull
from src.errors import EmptyMaskError


def layer_with_color(layer_set, color):
    palette = layer_set.source.palette
    return next(l for l in layer_set.layers if palette.colors[l.color_index] == color)


def field_from(u, layer_id=0):
    return PhaseField(layer_id=layer_id, u=u, v=np.zeros_like(u), params=ElasticaParams())


class NotchedDiskCase(unittest.TestCase):
    """Blue disk with a red wedge on top of it."""

    def setUp(self):
        q = kmeans_quantize(notched_disk(), K=3)
        self.layer_set = detect_noise(extract_layers(q))
        self.red = layer_with_color(self.layer_set, RED)
        self.blue = layer_with_color(self.layer_set, BLUE)
        rank = [0] * len(self.layer_set)
        for layer in self.layer_set.layers:
            rank[layer.id] = {self.red.id: 0, self.blue.id: 1}.get(layer.id, 2)
        self.ordering = DepthOrdering(rank=rank)
        self.region = covered_region(self.blue.id, self.ordering, self.layer_set)


class TestCoveredRegion(NotchedDiskCase):

    def test_top_layer_covers_only_itself(self):
        region = covered_region(self.red.id, self.ordering, self.layer_set)
        np.testing.assert_array_equal(region.mask, self.red.mask)

    def test_lower_layer_includes_layers_above(self):
        np.testing.assert_array_equal(self.region.mask, self.red.mask | self.blue.mask)

    def test_bottom_layer_covers_image(self):
        background = next(l for l in self.layer_set.layers if l.id not in (self.red.id, self.blue.id))
        region = covered_region(background.id, self.ordering, self.layer_set)
        self.assertTrue(region.mask.all())


class TestCorners(NotchedDiskCase):

    def test_no_corners_without_free_region(self):
        region = covered_region(self.red.id, self.ordering, self.layer_set)
        self.assertEqual(find_corners(self.red.id, region, self.layer_set), [])

    def test_notch_has_corner_pairs(self):
        corners = find_corners(self.blue.id, self.region, self.layer_set, radius=5)
        self.assertGreaterEqual(len(corners), 2)
        self.assertEqual(len(corners) % 2, 0)
        for corner in corners:
            self.assertTrue(self.blue.mask[corner.point])
            self.assertEqual(corner.phase.shape, (11, 11))
            self.assertTrue(set(np.unique(corner.phase)) <= {-1, 0, 1})
            self.assertAlmostEqual(float(np.hypot(*corner.pre_normal)), 1.0)

    def test_enclosed_layer_has_no_corners(self):
        region = CoveredRegion(mask=np.ones(self.layer_set.shape, dtype=bool))
        # the whole boundary faces free pixels, so no arc has an end
        self.assertEqual(find_corners(self.blue.id, region, self.layer_set), [])

    def test_straight_edge_phase(self):
        shape_mask = np.zeros((11, 11), dtype=bool)
        shape_mask[:, :6] = True
        normal = np.array([1.0, 0.0])
        phase, support, degenerate = corner_phase((5, 5), normal, normal, 3, shape_mask)
        self.assertFalse(degenerate)
        self.assertEqual(int(support.sum()), 29)
        self.assertTrue((phase[:, :4] == 0).all())
        self.assertEqual(phase[3, 6], -1)
        self.assertNotIn(1, set(np.unique(phase)))

    def test_hairpin_is_degenerate(self):
        shape_mask = np.zeros((11, 11), dtype=bool)
        shape_mask[5, 5] = True
        phase, _, degenerate = corner_phase(
            (5, 5), np.array([1.0, 0.0]), np.array([-1.0, 0.0]), 2, shape_mask)
        self.assertTrue(degenerate)
        self.assertEqual(phase[2, 2], 0)
        self.assertEqual(phase[2, 4], 1)

    def test_window_clipped_at_image_corner(self):
        corners = find_corners(self.blue.id, self.region, self.layer_set, radius=5)
        corner = corners[0]
        corner.point = (0, 0)
        img_r, img_c, disk_r, disk_c = corner.window((64, 64))
        self.assertEqual((img_r, img_c), (slice(0, 6), slice(0, 6)))
        self.assertEqual((disk_r, disk_c), (slice(5, 11), slice(5, 11)))


class TestMountainCorners(unittest.TestCase):

    def test_sun_has_two_corners(self):
        layer_set = detect_noise(extract_layers(kmeans_quantize(mountain(), K=5)))
        ordering = topo_sort(break_cycles(build_graph(layer_set, delta=0.05), layer_set), layer_set)
        sun = next(l for l in layer_set.layers if l.mask[10, 96])
        region = covered_region(sun.id, ordering, layer_set)
        corners = find_corners(sun.id, region, layer_set, radius=5)
        self.assertEqual(len(corners), 2)
        self.assertFalse(any(corner.degenerate for corner in corners))


class TestSpectralOperators(unittest.TestCase):

    def test_spectral_matches_periodic_laplacian(self):
        rng = np.random.default_rng(4)
        for shape in [(8, 8), (13, 21), (32, 5)]:
            u = rng.standard_normal(shape)
            np.testing.assert_allclose(spectral_laplacian(u), periodic_laplacian(u), atol=1e-10)

    def test_symbol_zero_at_constant_mode(self):
        symbol = operator_symbol((6, 9))
        self.assertEqual(symbol[0, 0], 0.0)
        self.assertTrue((symbol >= 0).all())
        self.assertAlmostEqual(symbol.max(), 3.0 - np.cos(8 * np.pi / 9))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        u = rng.uniform(-1.0, 1.0, (7, 9))
        weight = (rng.random((7, 9)) > 0.7).astype(float)
        target = weight * rng.choice([-1.0, 1.0], (7, 9))
        params = ElasticaParams(epsilon=1.5)
        grad = energy_gradient(u, params, weight, target)
        h = 1e-6
        for r, c in [(0, 0), (3, 4), (6, 8), (2, 7)]:
            plus, minus = u.copy(), u.copy()
            plus[r, c] += h
            minus[r, c] -= h
            numeric = (constrained_energy(plus, params, weight, target)
                       - constrained_energy(minus, params, weight, target)) / (2 * h)
            self.assertAlmostEqual(grad[r, c], numeric, delta=1e-4 * max(1.0, abs(numeric)))

    def test_params_validated(self):
        for bad in (ElasticaParams(epsilon=0.0), ElasticaParams(a=-1.0),
                    ElasticaParams(c=-0.5), ElasticaParams(max_iters=0)):
            with self.assertRaises(ValueError):
                bad.validate()


class TestSolver(NotchedDiskCase):

    def test_top_layer_is_fixed_point(self):
        region = covered_region(self.red.id, self.ordering, self.layer_set)
        pf = solve(self.red.id, region, [], ElasticaParams(max_iters=50), self.layer_set)
        self.assertTrue(pf.converged)
        self.assertEqual(pf.iterations, 1)
        self.assertEqual(len(pf.energy), 2)
        np.testing.assert_array_equal(extract_contour(pf).mask, self.red.mask)

    def test_notch_is_filled_within_region(self):
        corners = find_corners(self.blue.id, self.region, self.layer_set, radius=5)
        pf = solve(self.blue.id, self.region, corners, ElasticaParams(max_iters=600), self.layer_set)
        self.assertEqual(len(pf.energy), pf.iterations + 1)
        self.assertTrue(np.isfinite(pf.energy).all())
        self.assertTrue((np.abs(pf.u) <= 1.0).all())

        shape = extract_contour(pf)
        self.assertTrue((shape.mask | ~self.blue.mask).all())
        self.assertFalse((shape.mask & ~self.region.mask).any())
        self.assertGreater(shape.area, self.blue.area)

    def test_energy_never_rises_after_warm_up(self):
        corners = find_corners(self.blue.id, self.region, self.layer_set, radius=5)
        pf = solve(self.blue.id, self.region, corners, ElasticaParams(max_iters=600), self.layer_set)
        self.assertLessEqual(float(np.diff(pf.energy[MONOTONE_AFTER:]).max(initial=0.0)), 1e-6)

    def test_filled_area_close_to_clipped_hull(self):
        corners = find_corners(self.blue.id, self.region, self.layer_set, radius=5)
        pf = solve(self.blue.id, self.region, corners, ElasticaParams(max_iters=600), self.layer_set)
        hull_area = int((convex_hull(self.blue.mask).raster & self.region.mask).sum())
        self.assertLessEqual(abs(extract_contour(pf).area - hull_area), 0.03 * hull_area)

    def test_band_on_border_stays_straight(self):
        q = kmeans_quantize(blocks(), K=4)
        layer_set = extract_layers(q)
        band = np.zeros(layer_set.shape, dtype=bool)
        band[:, :8] = True
        layer_set.layers[0].mask = band
        region = np.zeros_like(band)
        region[:, :16] = True
        pf = solve(0, CoveredRegion(mask=region), [], ElasticaParams(max_iters=200, margin=4), layer_set)
        np.testing.assert_allclose(pf.u, np.broadcast_to(pf.u[:1], pf.u.shape), atol=1e-9)
        np.testing.assert_array_equal(pf.fixed, band | ~region)
        self.assertTrue((pf.u[:, :8] == 1.0).all())
        self.assertTrue((pf.u[:, 16:] == -1.0).all())

    def test_tiny_grid_rejected(self):
        q = kmeans_quantize(blocks(), K=4)
        layer_set = extract_layers(q)
        for layer in layer_set.layers:
            layer.mask = layer.mask[:3, :3]
        region = CoveredRegion(mask=layer_set.layers[0].mask.copy())
        with self.assertRaises(ValueError):
            solve(0, region, [], ElasticaParams(), layer_set)


class TestBoundingTriangleContainment(unittest.TestCase):
    """Inpainting above a one-sided trapezoid stays inside its bounding triangle."""

    ANGLES = [(30, 30), (45, 45), (60, 60), (30, 60), (60, 30),
              (40, 50), (50, 35), (35, 55), (60, 45), (45, 20)]

    def test_inpainted_points_inside_triangle(self):
        left, right, chord = ONE_SIDED_CHORD
        for deg0, deg_l in self.ANGLES:
            with self.subTest(theta0=deg0, theta_l=deg_l):
                theta0, theta_l = np.radians(deg0), np.radians(deg_l)
                layer_set = detect_noise(extract_layers(kmeans_quantize(one_sided(theta0, theta_l), K=3)))
                red = layer_with_color(layer_set, RED)
                blue = layer_with_color(layer_set, BLUE)
                rank = [0 if l.id == red.id else 1 if l.id == blue.id else 2 for l in layer_set.layers]
                region = covered_region(blue.id, DepthOrdering(rank=rank), layer_set)
                corners = find_corners(blue.id, region, layer_set, radius=5)
                pf = solve(blue.id, region, corners, ElasticaParams(max_iters=300), layer_set)
                shape = extract_contour(pf)
                self.assertTrue((shape.mask | ~blue.mask).all())
                self.assertFalse((shape.mask & ~region.mask).any())

                # pixel-edge coordinates of the chord ends
                start = np.array([left + 0.5 / np.tan(theta0), chord])
                end = np.array([right + 1.0 - 0.5 / np.tan(theta_l), chord])
                for loop in shape.loops:
                    for point in loop[loop[:, 1] < chord - 1e-9]:
                        self.assertTrue(
                            in_bounding_triangle(point, start, end, theta0, theta_l, side=-1, tolerance=1.0),
                            f"{point} outside the triangle")


class TestContours(unittest.TestCase):

    def test_square_single_loop(self):
        u = -np.ones((8, 8))
        u[2:6, 2:6] = 1.0
        shape = extract_contour(field_from(u))
        self.assertEqual(len(shape.loops), 1)
        area = signed_area(shape.loops[0])
        self.assertGreater(area, 15.0)
        self.assertLessEqual(area, 16.0)
        self.assertAlmostEqual(shape.loops[0][:, 0].min(), 2.0)
        self.assertAlmostEqual(shape.loops[0][:, 0].max(), 6.0)

    def test_two_blobs_two_loops(self):
        mask = np.zeros((10, 20), dtype=bool)
        mask[2:6, 2:6] = True
        mask[3:8, 12:17] = True
        shape = trace_mask(mask, layer_id=4)
        self.assertEqual(len(shape.loops), 2)
        self.assertTrue(all(signed_area(lp) > 0 for lp in shape.loops))

    def test_hole_runs_opposite_way(self):
        mask = np.zeros((12, 12), dtype=bool)
        mask[1:11, 1:11] = True
        mask[4:8, 4:8] = False
        areas = sorted(signed_area(lp) for lp in trace_mask(mask).loops)
        self.assertEqual(len(areas), 2)
        self.assertLess(areas[0], 0)
        self.assertGreater(areas[1], 0)

    def test_border_shape_closes(self):
        u = np.ones((5, 5))
        shape = extract_contour(field_from(u))
        self.assertEqual(len(shape.loops), 1)
        self.assertAlmostEqual(signed_area(shape.loops[0]), 25.0, delta=0.6)

    def test_traced_points_are_pinned(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[0:5, 2:8] = True
        shape = trace_mask(mask)
        self.assertEqual(len(shape.pinned), 1)
        self.assertEqual(len(shape.pinned[0]), len(shape.loops[0]))
        self.assertTrue(shape.pinned[0].all())

    def test_free_edges_not_pinned(self):
        u = -np.ones((10, 10))
        u[2:8, 2:5] = 1.0
        u[2:8, 5] = 0.5
        fixed = np.abs(u) == 1.0
        pf = PhaseField(layer_id=0, u=u, v=np.zeros_like(u), params=ElasticaParams(), fixed=fixed)
        shape = extract_contour(pf)
        loop, pinned = shape.loops[0], shape.pinned[0]
        # the right side runs between the 0.5 column and the -1 column
        right = loop[:, 0] > 5.5
        self.assertTrue(right.any())
        self.assertFalse(pinned[right].any())
        left = np.isclose(loop[:, 0], 2.0)
        self.assertTrue(left.any())
        self.assertTrue(pinned[left].all())

    def test_empty_and_bad_level(self):
        with self.assertRaises(EmptyMaskError):
            extract_contour(field_from(-np.ones((6, 6))))
        with self.assertRaises(ValueError):
            extract_contour(field_from(np.ones((6, 6))), level=1.0)


class TestSmallShapeShortcut(NotchedDiskCase):

    def test_hull_clipped_to_region(self):
        shape = small_shape_shortcut(self.blue.id, self.region, self.layer_set)
        self.assertTrue(shape.shortcut)
        self.assertGreater(shape.area, self.blue.area)
        self.assertFalse((shape.mask & ~self.region.mask).any())
        self.assertTrue((shape.mask | ~self.blue.mask).all())
        self.assertGreaterEqual(len(shape.loops), 1)


if __name__ == '__main__':
    unittest.main()

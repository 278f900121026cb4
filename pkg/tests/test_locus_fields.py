import math
import sys
import unittest
from pathlib import Path

import numpy as np
from matplotlib.path import Path as PolygonPath

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))

from locus_fields import (
    connected_components,
    contour_extract,
    hausdorff_distance,
    phase_level_scan,
    sample_grid,
)
from locus_models import Bbox, GridField, InputError, Polyline
from locus_polynomial import ComplexPolynomial
from locus_rational import gain_many, make_rational_map, modulus_many

SQUARE_1 = Bbox(-1.0, 1.0, -1.0, 1.0)
SQUARE_2 = Bbox(-2.0, 2.0, -2.0, 2.0)


def make_map(num, den):
    return make_rational_map(ComplexPolynomial(tuple(num)), ComplexPolynomial(tuple(den)))


def make_constant_field(value: float, n: int = 9) -> GridField:
    return GridField(SQUARE_2, n, n, np.full((n, n), value))


def all_vertices(polylines):
    return np.vstack([line.points for line in polylines])


class SamplingTests(unittest.TestCase):
    def test_node_lattice_includes_box_edges(self):
        field = sample_grid(np.abs, SQUARE_1, 3, 3)
        self.assertEqual(field.values[1, 1], 0.0)
        for row, col in ((0, 0), (0, 2), (2, 0), (2, 2)):
            self.assertAlmostEqual(field.values[row, col], math.sqrt(2), places=15)

    def test_gain_of_reciprocal_is_zero_at_pole(self):
        W = make_map([1], [0, 1])
        field = sample_grid(lambda pts: gain_many(W, pts), SQUARE_1, 3, 3)
        self.assertTrue(np.all(np.isfinite(field.values)))
        self.assertEqual(field.values[1, 1], 0.0)
        self.assertEqual(float(field.values.min()), 0.0)

    def test_singular_samples_become_positive_infinity(self):
        W = make_map([1], [0, 1])
        field = sample_grid(lambda pts: modulus_many(W, pts), SQUARE_1, 3, 3)
        self.assertEqual(field.values[1, 1], math.inf)

    def test_grid_needs_two_samples_per_axis(self):
        with self.assertRaises(InputError):
            GridField(SQUARE_1, 1, 3, np.zeros((3, 1)))


class ContourTests(unittest.TestCase):
    def test_unit_circle(self):
        field = sample_grid(np.abs, SQUARE_2, 101, 101)
        contours = contour_extract(field, 1.0)
        self.assertEqual(len(contours), 1)
        self.assertTrue(contours[0].closed)
        radii = np.hypot(contours[0].points[:, 0], contours[0].points[:, 1])
        self.assertLessEqual(float(np.max(np.abs(radii - 1.0))), field.cell_diagonal / 2)

    def test_constant_field_has_no_contour(self):
        self.assertEqual(contour_extract(make_constant_field(2.0), 1.0), [])

    def test_non_finite_level_is_rejected(self):
        with self.assertRaises(ValueError):
            contour_extract(make_constant_field(2.0), math.inf)

    def test_equal_modulus_line_is_imaginary_axis(self):
        W = make_map([-1, 1], [1, 1])
        field = sample_grid(lambda pts: modulus_many(W, pts), SQUARE_2, 100, 100)
        vertices = all_vertices(contour_extract(field, 1.0))
        self.assertLessEqual(float(np.max(np.abs(vertices[:, 0]))), field.dx)
        self.assertLess(float(vertices[:, 1].min()), -1.9)
        self.assertGreater(float(vertices[:, 1].max()), 1.9)

    def test_saddle_cell_follows_centre_sample(self):
        values = np.array([[1.0, 0.0], [0.0, 1.0]])
        field = GridField(SQUARE_1, 2, 2, values)
        # centre average 0.5 >= 0.5 joins the two high corners, cutting off the low ones
        contours = contour_extract(field, 0.5)
        self.assertEqual(len(contours), 2)
        for line in contours:
            self.assertEqual(len(line.points), 2)
            self.assertFalse(line.closed)


class ComponentTests(unittest.TestCase):
    def test_unit_disk_component_holds_origin(self):
        field = sample_grid(np.abs, SQUARE_2, 40, 40)
        regions = connected_components(field, lambda v: v < 1.0, level=1.0, marks=[0j, 1.5 + 0j])
        self.assertEqual(len(regions), 1)
        self.assertEqual(regions[0].contains, (0,))
        self.assertTrue(all(line.closed for line in regions[0].boundary))

    def test_boundary_separates_inside_from_outside_nodes(self):
        field = sample_grid(np.abs, SQUARE_2, 40, 40)
        region = connected_components(field, lambda v: v < 1.0, level=1.0)[0]
        polygon = PolygonPath(region.boundary[0].vertices())
        nodes = field.points().ravel()
        inside = polygon.contains_points(np.column_stack([nodes.real, nodes.imag]))
        np.testing.assert_array_equal(inside, region.mask.ravel())

    def test_indicator_boundary_without_level(self):
        field = sample_grid(np.abs, SQUARE_2, 40, 40)
        region = connected_components(field, lambda v: v < 1.0)[0]
        self.assertEqual(len(region.boundary), 1)
        self.assertTrue(region.boundary[0].closed)

    def test_no_components_on_constant_field(self):
        self.assertEqual(connected_components(make_constant_field(2.0), lambda v: v < 1.0), [])

    def test_diagonal_neighbours_are_separate_components(self):
        values = np.array([[0.0, 2.0], [2.0, 0.0]])
        regions = connected_components(GridField(SQUARE_1, 2, 2, values), lambda v: v < 1.0)
        self.assertEqual(len(regions), 2)


class PhaseScanTests(unittest.TestCase):
    def test_identity_positive_real_axis(self):
        W = make_map([0, 1], [1])
        vertices = all_vertices(phase_level_scan(W, 0.0, SQUARE_2, 100, 100))
        self.assertLessEqual(float(np.max(np.abs(vertices[:, 1]))), 1e-9)
        self.assertTrue(np.all(vertices[:, 0] > 0))
        self.assertGreater(float(vertices[:, 0].max()), 1.9)

    def test_moebius_upper_arc(self):
        W = make_map([-1, 1], [1, 1])
        field_diagonal = math.hypot(4 / 99, 4 / 99)
        vertices = all_vertices(phase_level_scan(W, math.pi / 2, SQUARE_2, 100, 100))
        radii = np.hypot(vertices[:, 0], vertices[:, 1])
        self.assertLessEqual(float(np.max(np.abs(radii - 1.0))), field_diagonal)
        self.assertTrue(np.all(vertices[:, 1] > 0))

    def test_reciprocal_negative_real_axis(self):
        W = make_map([1], [0, 1])
        vertices = all_vertices(phase_level_scan(W, math.pi, SQUARE_2, 100, 100))
        self.assertLessEqual(float(np.max(np.abs(vertices[:, 1]))), 1e-9)
        self.assertTrue(np.all(vertices[:, 0] < 0))


class HausdorffTests(unittest.TestCase):
    def test_parallel_segments(self):
        a = [Polyline(np.array([[0.0, 0.0], [1.0, 0.0]]), False)]
        b = [np.array([[0.0, 0.5], [1.0, 0.5]])]
        self.assertAlmostEqual(hausdorff_distance(a, b, 0.01), 0.5)

    def test_extra_branch_is_detected(self):
        a = [np.array([[0.0, 0.0], [1.0, 0.0]])]
        b = a + [np.array([[0.0, 2.0], [1.0, 2.0]])]
        self.assertAlmostEqual(hausdorff_distance(a, b, 0.01), 2.0)

    def test_empty_set_is_infinitely_far(self):
        self.assertEqual(hausdorff_distance([], [np.array([[0.0, 0.0]])], 0.1), math.inf)


if __name__ == "__main__":
    unittest.main()

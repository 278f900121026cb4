import cmath
import math
import sys
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))

from locus_models import AT_INFINITY, IndeterminateFormError, SingularPointError
from locus_polynomial import ComplexPolynomial, find_roots
from locus_rational import (
    RationalMap,
    eval_W,
    eval_many,
    four_quadrant_phase,
    gain,
    log_derivative,
    make_rational_map,
    modulus_many,
    phase,
    phase_gradient,
    phase_many,
    signed_wrap,
)


def make_map(num, den, removable=()) -> RationalMap:
    return make_rational_map(ComplexPolynomial(tuple(num)), ComplexPolynomial(tuple(den)), removable)


def make_random_map(rng: np.random.Generator, num_degree: int, den_degree: int, min_sep: float = 0.2) -> RationalMap:
    """Zeros and poles inside the unit disk, pairwise at least min_sep apart."""
    count = num_degree + den_degree
    while True:
        radius = np.sqrt(rng.uniform(0, 0.81, count))
        roots = radius * np.exp(1j * rng.uniform(-np.pi, np.pi, count))
        gaps = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(gaps, np.inf)
        if count < 2 or gaps.min() >= min_sep:
            break
    leading = complex(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0))
    return make_rational_map(
        ComplexPolynomial.from_roots(roots[:num_degree], leading),
        ComplexPolynomial.from_roots(roots[num_degree:]),
    )


class ConstructionTests(unittest.TestCase):
    def test_zeros_poles_and_scale(self):
        W = make_map([-1, 1], [1, 1])
        self.assertEqual(W.zeros, ((1 + 0j, 1),))
        self.assertEqual(W.poles, ((-1 + 0j, 1),))
        self.assertEqual(W.scale, 1.0)
        self.assertEqual(W.removable, ())

    def test_common_root_is_registered_removable(self):
        W = make_map([0, 2], [0, 1])
        self.assertEqual(len(W.removable), 1)
        self.assertEqual(W.removable[0].multiplicity, 1)
        self.assertEqual(W.zeros, ())
        self.assertEqual(W.poles, ())
        self.assertEqual(eval_W(W, 0), 2)

    def test_saddles_are_roots_of_cross_polynomial(self):
        W = make_map([-1, 0, 1], [1])
        self.assertEqual(len(W.saddles), 1)
        self.assertAlmostEqual(abs(W.saddles[0]), 0.0, places=9)

    def test_zero_polynomial_is_rejected(self):
        with self.assertRaises(ValueError):
            make_map([0], [1])


class EvaluationTests(unittest.TestCase):
    def test_pole_returns_marker_and_zero_gain(self):
        W = make_map([-1, 1], [1, 1])
        self.assertIs(eval_W(W, -1), AT_INFINITY)
        self.assertEqual(gain(W, -1), 0.0)
        self.assertEqual(gain(W, 1), math.inf)
        self.assertAlmostEqual(gain(W, 1j), 1.0, places=12)

    def test_unregistered_coincident_root_is_indeterminate(self):
        W = make_map([-1, 1], [-1, 0, 1])
        with patch.object(RationalMap, "removable_near", return_value=None):
            with self.assertRaises(IndeterminateFormError):
                eval_W(W, 1)

    def test_four_quadrant_phase(self):
        self.assertEqual(four_quadrant_phase(-1.0, 0.0), math.pi)
        self.assertEqual(four_quadrant_phase(0.0, 2.0), math.pi / 2)
        self.assertAlmostEqual(four_quadrant_phase(-1.0, -1.0), -3 * math.pi / 4)
        with self.assertRaises(SingularPointError):
            four_quadrant_phase(0.0, 0.0)

    def test_phase_is_undefined_at_zeros_and_poles(self):
        W = make_map([-1, 1], [1, 1])
        self.assertAlmostEqual(phase(W, 1j), math.pi / 2, places=12)
        for s in (1, -1):
            with self.assertRaises(SingularPointError):
                phase(W, s)
            with self.assertRaises(SingularPointError):
                log_derivative(W, s)

    def test_signed_wrap_range(self):
        self.assertAlmostEqual(float(signed_wrap(math.pi, -math.pi)), 0.0)
        values = signed_wrap(np.linspace(-10, 10, 101), 0.3)
        self.assertTrue(np.all(values >= -math.pi) and np.all(values < math.pi))

    def test_vectorized_matches_scalar(self):
        W = make_map([-1, 1], [1, 1])
        points = np.array([0.5 + 0.5j, 2j, -1 + 0j, 1 + 0j])
        values = eval_many(W, points)
        self.assertAlmostEqual(abs(values[0] - eval_W(W, points[0])), 0.0, places=12)
        self.assertTrue(np.isinf(modulus_many(W, points)[2]))
        self.assertTrue(np.isnan(phase_many(W, points)[3]))

    def test_vectorized_removable_point_uses_limit(self):
        W = make_map([0, 2], [0, 1])
        self.assertEqual(modulus_many(W, np.array([0j]))[0], 2.0)


class PhaseGradientTests(unittest.TestCase):
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(17)
        h = 1e-5
        checked = 0
        while checked < 1000:
            W = make_random_map(rng, int(rng.integers(0, 7)), int(rng.integers(1, 7)), min_sep=0.1)
            special = W.singular_points() + list(W.saddles)
            for _ in range(10):
                s = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
                if any(abs(s - c) < 0.1 for c in special):
                    continue
                g = phase_gradient(W, s)
                d_sigma = float(signed_wrap(phase(W, s + h), phase(W, s - h))) / (2 * h)
                d_t = float(signed_wrap(phase(W, s + 1j * h), phase(W, s - 1j * h))) / (2 * h)
                error = math.hypot(g.d_sigma - d_sigma, g.d_t - d_t)
                self.assertLessEqual(error, 1e-5 * math.sqrt(g.norm_sq))
                checked += 1

    def test_gradient_does_not_vanish_away_from_saddle_polynomial_roots(self):
        rng = np.random.default_rng(23)
        checked = 0
        while checked < 1000:
            W = make_random_map(rng, int(rng.integers(0, 5)), int(rng.integers(1, 5)))
            cross = W.saddle_polynomial
            special = W.singular_points() + (find_roots(cross) if cross.degree >= 1 else [])
            for _ in range(20):
                s = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
                if any(abs(s - c) < 0.1 for c in special):
                    continue
                g = phase_gradient(W, s)
                self.assertGreater(max(abs(g.d_sigma), abs(g.d_t)), 0.0)
                checked += 1

    def test_log_derivative_examples(self):
        self.assertEqual(log_derivative(make_map([0, 1], [1]), 1), 1)
        self.assertAlmostEqual(abs(log_derivative(make_map([0, 0, 1], [1]), 2) - 1), 0.0, places=15)
        moebius = make_map([-1, 1], [1, 1])
        expected = 1 / (2j - 1) - 1 / (2j + 1)
        self.assertAlmostEqual(abs(log_derivative(moebius, 2j) - expected), 0.0, places=14)
        h = 1e-6
        difference = (cmath.log(eval_W(moebius, 2j + h)) - cmath.log(eval_W(moebius, 2j - h))) / (2 * h)
        self.assertAlmostEqual(abs(difference - expected), 0.0, places=8)

    def test_gradient_examples(self):
        g = phase_gradient(make_map([0, 1], [1]), 1)
        self.assertEqual((g.d_sigma, g.d_t), (0.0, 1.0))
        g = phase_gradient(make_map([1], [0, 1]), 1)
        self.assertEqual((g.d_sigma, g.d_t), (0.0, -1.0))


if __name__ == "__main__":
    unittest.main()

import cmath
import math
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))

from locus_models import AtInfinity, Bbox, InputError
from locus_polynomial import ComplexPolynomial
from locus_rational import eval_W
from locus_smale import (
    CLAIM_MEAN_VALUE,
    adjacent_domains,
    audit_theorems,
    build_W,
    critical_points,
    extremal_search,
    limit_at_critical_point,
    make_case,
    replay_counterexample,
    smale_quotient,
)

SQUARE_2 = Bbox(-2.0, 2.0, -2.0, 2.0)


def make_poly(*coeffs) -> ComplexPolynomial:
    return ComplexPolynomial(tuple(coeffs))


def make_power(d: int) -> ComplexPolynomial:
    return ComplexPolynomial.monomial(d)


def make_power_minus_linear(d: int) -> ComplexPolynomial:
    """z^d - d z, whose critical points are the (d-1)-th roots of unity."""
    return ComplexPolynomial((0j, complex(-d)) + (0j,) * (d - 2) + (1 + 0j,))


def make_random_poly(rng: np.random.Generator, degree: int) -> ComplexPolynomial:
    return ComplexPolynomial(tuple(rng.uniform(-1, 1, degree + 1) + 1j * rng.uniform(-1, 1, degree + 1)))


def index_of(case, theta: complex) -> int:
    return min(range(len(case.critical_points)), key=lambda k: abs(case.critical_points[k][0] - theta))


class CriticalPointTests(unittest.TestCase):
    def test_square_has_single_simple_critical_point(self):
        points = critical_points(make_power(2))
        self.assertEqual(len(points), 1)
        self.assertEqual(points[0][1], 1)
        self.assertLess(abs(points[0][0]), 1e-12)

    def test_cube_roots_of_unity(self):
        points = critical_points(make_power_minus_linear(4))
        self.assertEqual([m for _, m in points], [1, 1, 1])
        for theta, _ in points:
            self.assertAlmostEqual(abs(theta ** 3 - 1), 0.0, places=9)

    def test_cube_has_double_critical_point(self):
        points = critical_points(make_power(3))
        self.assertEqual(len(points), 1)
        self.assertEqual(points[0][1], 2)

    def test_linear_polynomial_is_rejected(self):
        with self.assertRaises(InputError):
            critical_points(make_poly(1, 1))


class QuotientTests(unittest.TestCase):
    def test_closed_form_values(self):
        self.assertAlmostEqual(smale_quotient(make_power(2), 3, 0), 0.5, places=15)
        self.assertAlmostEqual(smale_quotient(make_power_minus_linear(4), 0, 1), 0.75, places=15)

    def test_power_quotient_is_reciprocal_degree(self):
        rng = np.random.default_rng(8)
        for d in range(2, 9):
            f = make_power(d)
            for _ in range(100):
                s = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
                self.assertLessEqual(abs(smale_quotient(f, s, 0) * d - 1), 1e-12)

    def test_every_critical_point_gives_same_value_at_origin(self):
        for d in range(2, 9):
            f = make_power_minus_linear(d)
            for theta, _ in critical_points(f):
                self.assertAlmostEqual(smale_quotient(f, 0, theta), (d - 1) / d, places=9)

    def test_quotient_at_theta_is_its_limit(self):
        f = make_power(2)
        self.assertAlmostEqual(smale_quotient(f, 0, 0), 0.5, places=12)

    def test_quotient_is_reciprocal_of_map_modulus(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            f = make_random_poly(rng, int(rng.integers(2, 7)))
            case = make_case(f)
            i = int(rng.integers(0, len(case.maps)))
            s = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            quotient = smale_quotient(f, s, case.critical_points[i][0])
            value = eval_W(case.maps[i], s)
            reciprocal = 0.0 if isinstance(value, AtInfinity) else 1.0 / abs(value)
            self.assertLessEqual(abs(quotient - reciprocal), 1e-10 * (1 + quotient))


class MapStructureTests(unittest.TestCase):
    def test_square_map_is_constant_two(self):
        W = build_W(make_power(2), 0)
        self.assertEqual((W.num.degree, W.den.degree), (1, 1))
        self.assertEqual(len(W.removable), 1)
        for s in (0, 0.5, 3 - 1j):
            self.assertAlmostEqual(abs(eval_W(W, s)), 2.0, places=12)

    def test_cube_map_is_constant_three(self):
        W = build_W(make_power(3), 0)
        self.assertAlmostEqual(abs(eval_W(W, 0.7j)), 3.0, places=12)
        self.assertAlmostEqual(abs(eval_W(W, 0)), 3.0, places=12)

    def test_cubic_with_two_critical_points(self):
        W = build_W(make_poly(0, -3, 0, 1), 1)
        self.assertEqual(W.num.coeffs, (-3 + 0j, 0j, 3 + 0j))
        self.assertEqual(W.den.coeffs, (-2 + 0j, 1 + 0j, 1 + 0j))
        self.assertEqual(len(W.removable), 1)
        self.assertEqual(eval_W(W, -1), 0)

    def test_degrees_and_leading_behaviour(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            f = make_random_poly(rng, int(rng.integers(2, 7)))
            d = f.degree
            for W in make_case(f).maps:
                self.assertEqual((W.num.degree, W.den.degree), (d - 1, d - 1))
                for k in range(16):
                    s = 1e5 * cmath.exp(2j * math.pi * k / 16)
                    self.assertLessEqual(abs(abs(eval_W(W, s)) - d) / d, 1e-3)

    def test_limit_at_critical_point(self):
        self.assertAlmostEqual(limit_at_critical_point(make_power(2), 0), 2.0, places=12)
        self.assertAlmostEqual(limit_at_critical_point(make_power(3), 0, 2), 3.0, places=12)
        self.assertAlmostEqual(limit_at_critical_point(make_power_minus_linear(4), 1), 2.0, places=9)

    def test_limit_is_two_at_simple_critical_points(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            f = make_random_poly(rng, int(rng.integers(2, 7)))
            for theta, m in critical_points(f):
                if m == 1:
                    self.assertAlmostEqual(limit_at_critical_point(f, theta, m), 2.0, delta=1e-6)

    def test_shifted_power_has_limit_multiplicity_plus_one(self):
        f = make_poly(0.25, 0, 0, 0, 1)
        self.assertAlmostEqual(limit_at_critical_point(f, 0, 3), 4.0, delta=1e-3)

    def test_off_origin_multiple_critical_points_are_found_whole(self):
        for m in (2, 3):
            f = ComplexPolynomial.from_roots([0.3] * (m + 1)) + make_poly(0.1)
            points = critical_points(f)
            self.assertEqual(len(points), 1)
            theta, multiplicity = points[0]
            self.assertEqual(multiplicity, m)
            self.assertLess(abs(theta - 0.3), 1e-9)
            self.assertAlmostEqual(limit_at_critical_point(f, theta, multiplicity), m + 1, delta=1e-3)
            case = make_case(f)
            self.assertEqual(case.maps[0].removable[0].multiplicity, m)


class DomainTests(unittest.TestCase):
    def test_constant_maps_have_no_domains(self):
        for d in (2, 3, 5):
            case = make_case(make_power(d))
            self.assertEqual(adjacent_domains(case, 0, SQUARE_2, 65), [])

    def test_cubic_domain_holds_other_critical_point(self):
        case = make_case(make_poly(0, -3, 0, 1))
        i = index_of(case, 1)
        j = index_of(case, -1)
        regions = adjacent_domains(case, i, SQUARE_2, 101)
        self.assertTrue(any(j in region.contains for region in regions))
        self.assertFalse(any(i in region.contains for region in regions))


class AuditTests(unittest.TestCase):
    def test_square_report(self):
        report = audit_theorems(make_case(make_power(2)), SQUARE_2, 65, n_samples=32, seed=0)
        audit = report.per_theta[0]
        self.assertEqual(audit.regions, ())
        self.assertAlmostEqual(audit.limit_at_theta, 2.0)
        self.assertIsNone(audit.quotient_gt1_inside)
        self.assertEqual(audit.quotient_le1_outside, 1.0)
        self.assertFalse(audit.theta_in_region)
        self.assertEqual(report.counterexamples, ())
        self.assertEqual(report.quantifiers.forall_le1, 1.0)
        self.assertAlmostEqual(report.extremal[1], 0.5, places=12)

    def test_quartic_report(self):
        case = make_case(make_power_minus_linear(4))
        report = audit_theorems(case, SQUARE_2, 101, n_samples=64, seed=3)
        self.assertEqual(len(report.per_theta), 3)
        for i, audit in enumerate(report.per_theta):
            self.assertFalse(audit.theta_in_region)
            self.assertFalse(audit.neighborhood_below_one)
            self.assertAlmostEqual(audit.limit_at_theta, 2.0, places=6)
            held = {j for region in audit.regions for j in region.contains}
            self.assertEqual(held, {0, 1, 2} - {i})
            for verdict in audit.verdicts:
                self.assertNotEqual(verdict.status, "unresolved")
            for fraction in (audit.quotient_gt1_inside, audit.quotient_le1_outside):
                self.assertTrue(fraction is None or 0.0 <= fraction <= 1.0)
        self.assertGreaterEqual(report.extremal[1], 0.75 - 1e-6)
        for counterexample in report.counterexamples:
            self.assertTrue(replay_counterexample(case, counterexample))

    def test_sampled_inside_points_satisfy_reversed_inequality(self):
        case = make_case(make_poly(0, -3, 0, 1))
        report = audit_theorems(case, SQUARE_2, 81, n_samples=64, seed=1)
        for audit in report.per_theta:
            if audit.quotient_gt1_inside is not None:
                self.assertEqual(audit.quotient_gt1_inside, 1.0)

    def test_report_is_deterministic_under_seed(self):
        case = make_case(make_power_minus_linear(3))
        first = audit_theorems(case, SQUARE_2, 49, n_samples=16, seed=5)
        second = audit_theorems(case, SQUARE_2, 49, n_samples=16, seed=5)
        self.assertEqual(first.counterexamples, second.counterexamples)
        self.assertEqual(first.quantifiers, second.quantifiers)
        self.assertEqual(first.extremal, second.extremal)

    def test_mean_value_counterexamples_replay(self):
        case = make_case(make_power_minus_linear(3))
        report = audit_theorems(case, SQUARE_2, 49, n_samples=128, seed=2)
        self.assertEqual(report.quantifiers.min_le1, 1.0)
        self.assertFalse(any(c.claim == CLAIM_MEAN_VALUE for c in report.counterexamples))


class ExtremalTests(unittest.TestCase):
    def test_power_minus_linear_peaks_at_origin(self):
        for d in (3, 4, 5):
            s, value = extremal_search(make_power_minus_linear(d))
            self.assertGreaterEqual(value, (d - 1) / d - 1e-6)
            self.assertLessEqual(abs(s), 1e-3)

    def test_constant_quotients(self):
        self.assertAlmostEqual(extremal_search(make_power(2), SQUARE_2, 41)[1], 0.5, places=12)
        self.assertAlmostEqual(extremal_search(make_power(4), SQUARE_2, 41)[1], 0.25, places=12)


if __name__ == "__main__":
    unittest.main()
